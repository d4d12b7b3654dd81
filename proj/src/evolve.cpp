#include <cmath>

#include "fermips/engines.hpp"
#include "sweep_util.hpp"

namespace fermips {

void EvolutionParams::validate() const {
    if (dt <= 0) throw InvalidSpec("dt must be positive");
    if (n_steps < 1) throw InvalidSpec("n_steps must be positive");
    policy.validate();
}

MPSWavefunction td_sweep_step(const MPOOperator &h, const MPSWavefunction &psi, cplx z,
                              const CompressionPolicy &policy) {
    const int L = h.length();
    if (psi.length() != L) throw SystemSizeMismatch("operator/state length mismatch");
    if (!(h.delta() == SectorLabel{0, 0}))
        throw SectorMismatch("evolution requires a sector-conserving generator");
    SectorLabel sector = psi.global_sector();
    std::vector<BlockSparseTensor> sites(psi.site_tensors().begin(), psi.site_tensors().end());
    for (auto &s : sites)
        if (s.empty()) return psi; // zero state is stationary
    detail::right_canonicalize(sites);

    std::vector<BlockSparseTensor> lenv(L + 1), renv(L + 1);
    lenv[0] = mpo_left_boundary();
    renv[L] = mpo_right_boundary(sector, {0, 0}, sector);
    if (L == 1) {
        auto hmap = detail::heff1(lenv[0], h.site(0), renv[1]);
        sites[0] = detail::krylov_expm(hmap, sites[0], z);
        return MPSWavefunction(std::move(sites), sector, policy, 0);
    }
    for (int j = L - 1; j >= 2; --j)
        renv[j] = mpo_env_step_right(renv[j + 1], sites[j], h.site(j), sites[j]);

    const cplx half = z / 2.0;
    for (int i = 0; i + 1 < L; ++i) {
        auto b = contract(sites[i], sites[i + 1], {{2, 0}});
        b = detail::krylov_expm(detail::heff2(lenv[i], h.site(i), h.site(i + 1), renv[i + 2]),
                                b, half);
        auto res = svd_truncate(b, {0, 1}, policy);
        sites[i] = res.u;
        auto center = absorb_bond_left(res.s, res.v);
        lenv[i + 1] = mpo_env_step_left(lenv[i], sites[i], h.site(i), sites[i]);
        if (i + 1 < L - 1)
            center = detail::krylov_expm(
                detail::heff1(lenv[i + 1], h.site(i + 1), renv[i + 2]), center, -half);
        sites[i + 1] = center;
    }
    for (int i = L - 2; i >= 0; --i) {
        auto b = contract(sites[i], sites[i + 1], {{2, 0}});
        b = detail::krylov_expm(detail::heff2(lenv[i], h.site(i), h.site(i + 1), renv[i + 2]),
                                b, half);
        auto res = svd_truncate(b, {0, 1}, policy);
        sites[i + 1] = res.v;
        auto center = absorb_bond_right(res.u, res.s);
        renv[i + 1] = mpo_env_step_right(renv[i + 2], sites[i + 1], h.site(i + 1),
                                         sites[i + 1]);
        if (i > 0)
            center = detail::krylov_expm(detail::heff1(lenv[i], h.site(i), renv[i + 1]),
                                         center, -half);
        sites[i] = center;
    }
    return MPSWavefunction(std::move(sites), sector, policy, 0);
}

namespace {

MPSWavefunction rk4_step(const MPOOperator &h, const MPSWavefunction &psi, cplx c, double dt,
                         const CompressionPolicy &policy) {
    auto ap = [&](const MPSWavefunction &phi) { return apply_fit(h, phi, policy); };
    auto a1 = ap(psi);
    auto a2 = ap(add_scaled(psi, 1.0, a1, c * (dt / 2), policy));
    auto a3 = ap(add_scaled(psi, 1.0, a2, c * (dt / 2), policy));
    auto a4 = ap(add_scaled(psi, 1.0, a3, c * dt, policy));
    auto acc = add_scaled(a1, 1.0, a2, 2.0, policy);
    acc = add_scaled(acc, 1.0, a3, 2.0, policy);
    acc = add_scaled(acc, 1.0, a4, 1.0, policy);
    return add_scaled(psi, 1.0, acc, c * (dt / 6), policy);
}

} // namespace

EvolveResult evolve(const MPOOperator &h, const MPSWavefunction &psi,
                    const EvolutionParams &p) {
    p.validate();
    if (!(h.delta() == SectorLabel{0, 0}))
        throw SectorMismatch("evolution requires a sector-conserving generator");
    const cplx c = p.imaginary ? cplx(-1.0, 0.0) : cplx(0.0, -1.0);
    EvolveResult out;
    out.psi = psi;
    double prev_norm = psi.norm();
    if (prev_norm == 0.0) {
        for (int k = 0; k < p.n_steps; ++k) out.steps.push_back({(k + 1) * p.dt, 0.0, 0.0});
        return out;
    }
    for (int k = 0; k < p.n_steps; ++k) {
        if (p.method == EvolveMethod::rk4)
            out.psi = rk4_step(h, out.psi, c, p.dt, p.policy);
        else
            out.psi = td_sweep_step(h, out.psi, c * p.dt, p.policy);
        double n = out.psi.norm();
        if (n > 10.0 * prev_norm)
            throw StepRejected("norm grew more than tenfold in one step");
        double energy =
            (n > 0) ? std::real(expectation(out.psi, h)) / (n * n) : 0.0;
        out.steps.push_back({(k + 1) * p.dt, n, energy});
        if (p.renormalizes() && n > 0) out.psi = out.psi.scaled(1.0 / n);
        prev_norm = p.renormalizes() ? 1.0 : n;
    }
    return out;
}

AdiabaticResult adiabatic_evolve(const MPOOperator &h0, const MPOOperator &h1,
                                 double total_time, const EvolutionParams &p,
                                 const MPSWavefunction &psi0,
                                 const MPSWavefunction *reference) {
    p.validate();
    if (total_time <= 0) throw InvalidSpec("total_time must be positive");
    if (h0.length() != h1.length()) throw SystemSizeMismatch("Hamiltonian length mismatch");
    const int n = std::max(1, static_cast<int>(std::llround(total_time / p.dt)));
    const double dt = total_time / n;
    const MPSWavefunction &ref = reference ? *reference : psi0;
    double ref_norm = ref.norm();

    AdiabaticResult out;
    out.psi = psi0;
    EvolutionParams q = p;
    q.dt = dt;
    q.n_steps = 1;
    for (int k = 0; k < n; ++k) {
        double s_mid = (k + 0.5) / n;
        auto hs = add_mpo(h0, 1.0 - s_mid, h1, s_mid);
        out.psi = evolve(hs, out.psi, q).psi;
        double s_end = static_cast<double>(k + 1) / n;
        auto h_end = add_mpo(h0, 1.0 - s_end, h1, s_end);
        double nn = out.psi.norm();
        double energy = (nn > 0) ? std::real(expectation(out.psi, h_end)) / (nn * nn) : 0.0;
        double ov = (nn > 0 && ref_norm > 0)
                        ? std::abs(overlap(ref, out.psi)) / (nn * ref_norm)
                        : 0.0;
        out.trajectory.push_back({s_end, energy, ov});
    }
    return out;
}

} // namespace fermips
