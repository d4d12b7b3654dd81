#include <limits>
#include <random>

#include "fermips/engines.hpp"
#include "sweep_util.hpp"

namespace fermips {

void SweepSchedule::validate() const {
    if (stages.empty()) throw InvalidSpec("sweep schedule needs at least one stage");
    long prev = 0;
    for (auto &s : stages) {
        if (s.max_bond < 1 || s.n_sweeps < 1 || s.noise < 0)
            throw InvalidSpec("bad sweep stage parameters");
        if (s.max_bond < prev) throw InvalidSpec("max_bond must be non-decreasing across stages");
        prev = s.max_bond;
    }
    if (energy_tol <= 0) throw InvalidSpec("energy_tol must be positive");
    if (max_total_sweeps < 1) throw InvalidSpec("max_total_sweeps must be positive");
    if (cutoff < 0 || cutoff >= 1) throw InvalidSpec("cutoff must be in [0,1)");
}

SweepSchedule default_schedule(long max_bond, int n_sweeps) {
    SweepSchedule s;
    long warm = std::min<long>(max_bond, 16);
    if (warm < max_bond) s.stages.push_back({warm, 1e-6, 2});
    s.stages.push_back({max_bond, 0.0, n_sweeps});
    return s;
}

namespace {

// density-matrix noise surrogate: gaussian perturbation over every
// flux-allowed block of the two-site tensor, scaled to its norm
void perturb(BlockSparseTensor &b, double noise, std::mt19937 &rng) {
    std::normal_distribution<double> g;
    double scale = noise * b.norm();
    std::vector<BlockSparseTensor::Key> keys = {{}};
    for (auto &ax : b.axes()) {
        std::vector<BlockSparseTensor::Key> next;
        for (auto &k : keys)
            for (auto &[s, d] : ax.sectors) {
                auto nk = k;
                nk.push_back(s);
                next.push_back(std::move(nk));
            }
        keys = std::move(next);
    }
    for (auto &key : keys) {
        if (!b.key_allowed(key)) continue;
        long n = b.block_size(key);
        std::vector<cplx> d(n);
        for (auto &x : d) x = scale * cplx(g(rng), g(rng));
        b.add_block(key, d);
    }
}

void probe_hermiticity(const MPOOperator &h, const MPSWavefunction &psi) {
    auto phi = apply_fit(h, psi, psi.policy());
    double nphi = phi.norm();
    if (nphi == 0.0) return; // psi annihilated: nothing to compare
    cplx a = expectation(psi, h, phi.normalized());
    cplx b = expectation(phi.normalized(), h, psi);
    double ref = std::abs(a) + std::abs(b) + 1.0;
    if (std::abs(a - std::conj(b)) > 1e-8 * ref ||
        std::abs(std::imag(expectation(psi, h))) > 1e-8 * ref)
        throw NonHermitianGenerator("MPO fails the Hermiticity probe");
}

} // namespace

DmrgResult dmrg(const MPOOperator &h, const MPSWavefunction &psi0,
                const SweepSchedule &schedule) {
    schedule.validate();
    const int L = h.length();
    if (psi0.length() != L) throw SystemSizeMismatch("operator/state length mismatch");
    if (!(h.delta() == SectorLabel{0, 0}))
        throw SectorMismatch("DMRG requires a sector-conserving Hamiltonian");
    double n0 = psi0.norm();
    if (n0 == 0.0) throw ZeroState("DMRG needs a nonzero start state");
    probe_hermiticity(h, psi0);

    SectorLabel sector = psi0.global_sector();
    std::vector<BlockSparseTensor> sites(psi0.site_tensors().begin(),
                                         psi0.site_tensors().end());
    sites[0] = sites[0].scaled(1.0 / n0);
    detail::right_canonicalize(sites);

    DmrgResult out;
    if (L == 1) {
        auto lenv = mpo_left_boundary();
        auto renv = mpo_right_boundary(sector, {0, 0}, sector);
        auto hmap = detail::heff1(lenv, h.site(0), renv);
        auto [e, gs] = detail::lanczos_ground(hmap, sites[0]);
        CompressionPolicy policy{schedule.stages.back().max_bond, schedule.cutoff};
        out.psi = MPSWavefunction({gs}, sector, policy, 0);
        out.energy = e;
        out.per_sweep.push_back({policy.max_bond, e, 0.0});
        return out;
    }

    std::mt19937 rng(0x5eed);
    double last_energy = std::numeric_limits<double>::infinity();
    int total_sweeps = 0;
    for (auto &stage : schedule.stages) {
        CompressionPolicy policy{stage.max_bond, schedule.cutoff};
        for (int sweep = 0; sweep < stage.n_sweeps; ++sweep) {
            if (total_sweeps++ >= schedule.max_total_sweeps) break;
            std::vector<BlockSparseTensor> lenv(L + 1), renv(L + 1);
            lenv[0] = mpo_left_boundary();
            renv[L] = mpo_right_boundary(sector, {0, 0}, sector);
            for (int j = L - 1; j >= 2; --j)
                renv[j] = mpo_env_step_right(renv[j + 1], sites[j], h.site(j), sites[j]);

            double max_disc = 0.0, e_local = 0.0;
            auto solve_bond = [&](int i) {
                auto b = contract(sites[i], sites[i + 1], {{2, 0}});
                auto hmap = detail::heff2(lenv[i], h.site(i), h.site(i + 1), renv[i + 2]);
                auto [e, gs] = detail::lanczos_ground(hmap, b);
                e_local = e;
                if (stage.noise > 0) {
                    perturb(gs, stage.noise, rng);
                    gs = gs.scaled(1.0 / gs.norm());
                }
                return svd_truncate(gs, {0, 1}, policy);
            };
            for (int i = 0; i + 1 < L; ++i) {
                auto res = solve_bond(i);
                max_disc = std::max(max_disc, res.report.discarded_weight);
                sites[i] = res.u;
                auto c = absorb_bond_left(res.s, res.v);
                sites[i + 1] = c.scaled(1.0 / c.norm());
                lenv[i + 1] = mpo_env_step_left(lenv[i], sites[i], h.site(i), sites[i]);
            }
            for (int i = L - 2; i >= 0; --i) {
                auto res = solve_bond(i);
                max_disc = std::max(max_disc, res.report.discarded_weight);
                sites[i + 1] = res.v;
                auto c = absorb_bond_right(res.u, res.s);
                sites[i] = c.scaled(1.0 / c.norm());
                renv[i + 1] = mpo_env_step_right(renv[i + 2], sites[i + 1], h.site(i + 1),
                                                 sites[i + 1]);
            }
            out.per_sweep.push_back({stage.max_bond, e_local, max_disc});
            bool settled = std::abs(e_local - last_energy) < schedule.energy_tol;
            last_energy = e_local;
            if (settled && stage.noise == 0) break;
        }
    }
    CompressionPolicy final_policy{schedule.stages.back().max_bond, schedule.cutoff};
    out.psi = MPSWavefunction(std::move(sites), sector, final_policy, 0);
    out.energy = std::real(expectation(out.psi, h)) / std::real(overlap(out.psi, out.psi));
    return out;
}

std::pair<double, double> extrapolate_to_zero_truncation(
    const std::vector<std::pair<double, double>> &points) {
    if (points.size() < 2) throw DegeneratePoints("need at least two points");
    double sw = 0, se = 0;
    for (auto &[w, e] : points) {
        if (w < 0) throw DegeneratePoints("negative discarded weight");
        sw += w;
        se += e;
    }
    double n = static_cast<double>(points.size());
    double mw = sw / n, me = se / n;
    double sxx = 0, sxy = 0;
    for (auto &[w, e] : points) {
        sxx += (w - mw) * (w - mw);
        sxy += (w - mw) * (e - me);
    }
    if (sxx == 0) throw DegeneratePoints("all discarded weights equal");
    double slope = sxy / sxx;
    return {me - slope * mw, slope};
}

} // namespace fermips
