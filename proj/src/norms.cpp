#include <algorithm>
#include <random>

#include "fermips/engines.hpp"
#include "sweep_util.hpp"

namespace fermips {

NormEstimate power_iteration_norm(const LinearMap &map, const MPSWavefunction &seed,
                                  int max_iter, double tol) {
    double ns = seed.norm();
    if (ns == 0.0) throw ZeroSeed("power iteration needs a nonzero seed");
    MPSWavefunction x = seed.scaled(1.0 / ns);
    NormEstimate est;
    double prev = -1.0;
    for (int it = 1; it <= max_iter; ++it) {
        auto y = map.apply(x);
        double ny = y.norm();
        est.iterations = it;
        if (ny == 0.0) {
            est.value = 0.0;
            est.residual = 0.0;
            return est;
        }
        est.value = ny; // ||A x|| with ||x|| = 1
        est.residual = std::abs(ny - prev) / std::max(ny, 1e-300);
        prev = ny;
        if (est.residual < tol) return est;
        auto z = map.apply_adjoint(y);
        double nz = z.norm();
        if (nz == 0.0) return est;
        x = z.scaled(1.0 / nz);
    }
    return est; // no convergence: last estimate with its residual
}

namespace {

// random sector-respecting determinant superposition, deterministic seed
MPSWavefunction default_norm_seed(int L, const CompressionPolicy &policy) {
    std::mt19937 rng(9001);
    std::normal_distribution<double> g;
    int n_up = (L + 1) / 2, n_dn = L / 2;
    auto random_det = [&] {
        std::vector<int> ups(L, 0), dns(L, 0), idx(L);
        for (int i = 0; i < L; ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int i = 0; i < n_up; ++i) ups[idx[i]] = 1;
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int i = 0; i < n_dn; ++i) dns[idx[i]] = 1;
        std::vector<int> occ(L);
        for (int i = 0; i < L; ++i) occ[i] = ups[i] | (dns[i] << 1);
        return MPSWavefunction::from_occupation(occ, policy);
    };
    MPSWavefunction acc = random_det().scaled(cplx(g(rng), g(rng)));
    for (int k = 1; k < 5; ++k)
        acc = add_scaled(acc, 1.0, random_det(), cplx(g(rng), g(rng)), policy);
    return acc.normalized();
}

} // namespace

NormEstimate trotter_error_norm(const MPOOperator &t_op, const MPOOperator &v_op, double dt,
                                const CompressionPolicy &policy, int iters,
                                const MPSWavefunction *seed) {
    if (dt <= 0) throw InvalidSpec("dt must be positive");
    auto h_sum = add_mpo(t_op, 1.0, v_op, 1.0);
    const int nsub = 10; // integrator substeps well below the Trotter error
    auto propagate = [&](const MPOOperator &h, MPSWavefunction x, double sign) {
        cplx z(0.0, -sign * dt / nsub);
        for (int s = 0; s < nsub; ++s) x = td_sweep_step(h, x, z, policy);
        return x;
    };
    LinearMap d;
    d.apply = [&](const MPSWavefunction &x) {
        auto full = propagate(h_sum, x, 1.0);
        auto split = propagate(t_op, propagate(v_op, x, 1.0), 1.0);
        return add_scaled(full, 1.0, split, -1.0, policy);
    };
    d.apply_adjoint = [&](const MPSWavefunction &x) {
        auto full = propagate(h_sum, x, -1.0);
        auto split = propagate(v_op, propagate(t_op, x, -1.0), -1.0);
        return add_scaled(full, 1.0, split, -1.0, policy);
    };
    MPSWavefunction s = seed ? *seed : default_norm_seed(t_op.length(), policy);
    return power_iteration_norm(d, s, iters, 1e-8);
}

std::pair<double, double> particle_weighted_norms(const IntegralHamiltonian &h, int eta) {
    if (eta < 1 || eta > 2 * h.norb) throw EtaOutOfRange("eta must be in [1, 2*norb]");
    const int L = h.norb;
    double tau_norm = 0.0;
    for (int j = 0; j < L; ++j) {
        double row = 0.0;
        for (int k = 0; k < L; ++k) row += std::abs(h.h(j, k));
        tau_norm = std::max(tau_norm, row);
    }
    double nu_norm = 0.0;
    for (int j = 0; j < L; ++j) {
        std::vector<double> row(L);
        for (int k = 0; k < L; ++k) row[k] = std::abs(h.g(j, j, k, k));
        std::sort(row.begin(), row.end(), std::greater<>());
        double s = 0.0;
        for (int k = 0; k < std::min<int>(eta, L); ++k) s += row[k];
        nu_norm = std::max(nu_norm, s);
    }
    return {tau_norm, nu_norm};
}

} // namespace fermips
