#include <cmath>

#include "fermips/engines.hpp"

namespace fermips {

std::vector<FermionOperatorSum> adapt_pool(int n_sites) {
    if (n_sites < 2) throw InvalidSpec("pool needs at least two sites");
    std::vector<FermionOperatorSum> pool;
    auto anti_hermitize = [](FermionOperatorSum a) {
        return a + a.adjoint().scaled(-1.0);
    };
    // spin-adapted generalized singles
    for (int p = 0; p < n_sites; ++p)
        for (int q = p + 1; q < n_sites; ++q) {
            FermionOperatorSum a(n_sites);
            for (Spin s : {Spin::Up, Spin::Down})
                a.add_term(1.0, {{p, s, true}, {q, s, false}});
            pool.push_back(anti_hermitize(std::move(a)));
        }
    // pair doubles
    for (int p = 0; p < n_sites; ++p)
        for (int q = p + 1; q < n_sites; ++q) {
            FermionOperatorSum a(n_sites);
            a.add_term(1.0, {{p, Spin::Up, true},
                             {p, Spin::Down, true},
                             {q, Spin::Down, false},
                             {q, Spin::Up, false}});
            pool.push_back(anti_hermitize(std::move(a)));
        }
    // density-assisted singles (generalized doubles with a repeated index);
    // these carry the pool gradient at closed-shell stationary points
    for (int p = 0; p < n_sites; ++p)
        for (int q = p + 1; q < n_sites; ++q)
            for (int d : {p, q}) {
                FermionOperatorSum a(n_sites);
                for (Spin s : {Spin::Up, Spin::Down}) {
                    Spin bar = (s == Spin::Up) ? Spin::Down : Spin::Up;
                    a.add_term(1.0, {{d, bar, true},
                                     {d, bar, false},
                                     {p, s, true},
                                     {q, s, false}});
                }
                pool.push_back(anti_hermitize(std::move(a)));
            }
    // spin-adapted generalized doubles over distinct orbital pairs
    for (int p = 0; p < n_sites; ++p)
        for (int q = p + 1; q < n_sites; ++q)
            for (int r = 0; r < n_sites; ++r)
                for (int s = r + 1; s < n_sites; ++s) {
                    if (std::pair{p, q} >= std::pair{r, s}) continue;
                    FermionOperatorSum a(n_sites);
                    a.add_term(1.0, {{p, Spin::Up, true},
                                     {q, Spin::Down, true},
                                     {s, Spin::Down, false},
                                     {r, Spin::Up, false}});
                    a.add_term(1.0, {{q, Spin::Up, true},
                                     {p, Spin::Down, true},
                                     {r, Spin::Down, false},
                                     {s, Spin::Up, false}});
                    pool.push_back(anti_hermitize(std::move(a)));
                }
    return pool;
}

namespace {

// one RK4 step of d psi/ds = O psi
MPSWavefunction rk4_generator_step(const MPOOperator &w, const MPSWavefunction &psi, double ds,
                                   const CompressionPolicy &policy) {
    auto ap = [&](const MPSWavefunction &phi) { return apply_fit(w, phi, policy); };
    auto a1 = ap(psi);
    auto a2 = ap(add_scaled(psi, 1.0, a1, ds / 2, policy));
    auto a3 = ap(add_scaled(psi, 1.0, a2, ds / 2, policy));
    auto a4 = ap(add_scaled(psi, 1.0, a3, ds, policy));
    auto acc = add_scaled(a1, 1.0, a2, 2.0, policy);
    acc = add_scaled(acc, 1.0, a3, 2.0, policy);
    acc = add_scaled(acc, 1.0, a4, 1.0, policy);
    return add_scaled(psi, 1.0, acc, ds / 6, policy);
}

// e^{theta O}|psi> via RK4 substeps and renormalization. Full steps of fixed
// size plus one remainder step keep the integrator bias continuous in theta;
// a step-count rule like ceil(|theta|/h) jumps at multiples of h and traps
// the finite-difference optimizer against the discontinuity.
MPSWavefunction apply_exp(const MPOOperator &w, MPSWavefunction psi, double theta,
                          const CompressionPolicy &policy) {
    if (theta == 0.0) return psi;
    const double ds_max = 0.5;
    const double sign = theta < 0 ? -1.0 : 1.0;
    double rest = std::abs(theta);
    while (rest > 0) {
        double ds = std::min(rest, ds_max);
        psi = rk4_generator_step(w, psi, sign * ds, policy);
        rest -= ds;
    }
    return psi.normalized();
}

} // namespace

AdaptState adapt_vqe(const MPOOperator &h, const std::vector<FermionOperatorSum> &pool,
                     const MPSWavefunction &psi_hf, const CompressionPolicy &policy,
                     const AdaptStopRule &stop,
                     const std::function<void(const AdaptState &)> &progress) {
    if (pool.empty()) throw EmptyPool("ADAPT pool is empty");
    if (psi_hf.norm() == 0.0) throw ZeroState("HF reference is the zero state");
    const MPSWavefunction ref = psi_hf.normalized();

    std::vector<MPOOperator> pool_mpos;
    pool_mpos.reserve(pool.size());
    for (auto &op : pool) pool_mpos.push_back(build_mpo(op));

    AdaptState st;
    auto build_state = [&](const std::vector<double> &thetas) {
        MPSWavefunction psi = ref;
        for (std::size_t k = 0; k < st.operators.size(); ++k)
            psi = apply_exp(pool_mpos[st.operators[k]], psi, thetas[k], policy);
        return psi;
    };
    auto energy_of = [&](const std::vector<double> &thetas) {
        auto psi = build_state(thetas);
        return std::real(expectation(psi, h)) / std::real(overlap(psi, psi));
    };

    bool optimizer_ok = true;
    double energy = energy_of(st.thetas);
    for (int iter = 0; iter < stop.max_iters; ++iter) {
        // pool gradients g_i = <[H, O_i]> = 2 Re <H psi | O_i psi>
        auto psi = build_state(st.thetas);
        auto hpsi = apply_fit(h, psi, policy);
        double gnorm2 = 0.0;
        int best = -1;
        double best_g = 0.0;
        for (std::size_t i = 0; i < pool_mpos.size(); ++i) {
            double g = 2.0 * std::real(expectation(hpsi, pool_mpos[i], psi));
            gnorm2 += g * g;
            if (std::abs(g) > std::abs(best_g)) {
                best_g = g;
                best = static_cast<int>(i);
            }
        }
        st.gradient_norm_history.push_back(std::sqrt(gnorm2));
        if (st.gradient_norm_history.back() < stop.grad_tol) {
            st.converged = true;
            break;
        }
        st.operators.push_back(best);
        st.thetas.push_back(0.0);

        // re-optimize all thetas: BFGS on adjoint gradients. With psi =
        // U_{n-1}...U_0 |ref>, U_j = e^{theta_j O_j} and F_{j+1} the state
        // after j+1 factors, dE/dtheta_j = 2 Re <lambda_{j+1}| O_j F_{j+1}>
        // where lambda_n = H psi and lambda_j = U_j^dag lambda_{j+1}; the
        // anti-Hermitian flow preserves ||lambda||, so the normalization
        // inside apply_exp is undone by rescaling.
        const int n = static_cast<int>(st.thetas.size());
        auto grad = [&](const std::vector<double> &th) {
            std::vector<MPSWavefunction> f;
            f.reserve(n + 1);
            f.push_back(ref);
            for (int k = 0; k < n; ++k)
                f.push_back(apply_exp(pool_mpos[st.operators[k]], f.back(), th[k], policy));
            auto lam = apply_fit(h, f.back(), policy);
            const double lam_norm = lam.norm();
            std::vector<double> g(n);
            for (int k = n - 1; k >= 0; --k) {
                auto opsi = apply_fit(pool_mpos[st.operators[k]], f[k + 1], policy);
                g[k] = 2.0 * std::real(overlap(lam, opsi));
                if (k > 0)
                    lam = apply_exp(pool_mpos[st.operators[k]], lam, -th[k], policy)
                              .scaled(lam_norm);
            }
            return g;
        };
        std::vector<double> th = st.thetas;
        double e_cur = energy_of(th);
        auto g_cur = grad(th);
        std::vector<std::vector<double>> hinv(n, std::vector<double>(n, 0.0));
        for (int k = 0; k < n; ++k) hinv[k][k] = 1.0;
        for (int opt = 0; opt < 40; ++opt) {
            double gmax = 0.0;
            for (double g : g_cur) gmax = std::max(gmax, std::abs(g));
            if (gmax < 1e-7) break;
            std::vector<double> dir(n, 0.0);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) dir[a] -= hinv[a][b] * g_cur[b];
            double slope = 0.0;
            for (int k = 0; k < n; ++k) slope += dir[k] * g_cur[k];
            if (slope >= 0) { // reset to steepest descent
                for (int k = 0; k < n; ++k) dir[k] = -g_cur[k];
                slope = 0.0;
                for (int k = 0; k < n; ++k) slope -= g_cur[k] * g_cur[k];
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) hinv[a][b] = (a == b) ? 1.0 : 0.0;
            }
            double step = 1.0, e_new = 0.0;
            std::vector<double> th_new;
            bool found = false;
            for (int ls = 0; ls < 25; ++ls) {
                th_new = th;
                for (int k = 0; k < n; ++k) th_new[k] += step * dir[k];
                e_new = energy_of(th_new);
                if (e_new <= e_cur + 1e-4 * step * slope) {
                    found = true;
                    break;
                }
                step *= 0.5;
            }
            if (!found) {
                optimizer_ok = false;
                break;
            }
            auto g_new = grad(th_new);
            // BFGS inverse-Hessian update
            std::vector<double> sdiff(n), ydiff(n);
            double sy = 0.0;
            for (int k = 0; k < n; ++k) {
                sdiff[k] = th_new[k] - th[k];
                ydiff[k] = g_new[k] - g_cur[k];
                sy += sdiff[k] * ydiff[k];
            }
            if (sy > 1e-12) {
                double rho = 1.0 / sy;
                std::vector<double> hy(n, 0.0);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) hy[a] += hinv[a][b] * ydiff[b];
                double yhy = 0.0;
                for (int k = 0; k < n; ++k) yhy += ydiff[k] * hy[k];
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        hinv[a][b] += (1.0 + rho * yhy) * rho * sdiff[a] * sdiff[b] -
                                      rho * (hy[a] * sdiff[b] + sdiff[a] * hy[b]);
            }
            bool settled = std::abs(e_new - e_cur) < 1e-9;
            th = th_new;
            e_cur = e_new;
            g_cur = g_new;
            if (settled) break;
        }
        if (e_cur <= energy + 1e-9) {
            st.thetas = th;
            energy = std::min(energy, e_cur);
        } else {
            st.thetas.back() = 0.0; // keep the previous iterate
            optimizer_ok = false;
        }
        st.energy_history.push_back(energy);
        if (progress) progress(st);

        if (static_cast<int>(st.energy_history.size()) >= stop.energy_window + 1) {
            double de = 0.0;
            auto &eh = st.energy_history;
            for (int k = 0; k < stop.energy_window; ++k)
                de += std::abs(eh[eh.size() - 1 - k] - eh[eh.size() - 2 - k]);
            if (de < stop.energy_tol) {
                st.converged = true;
                break;
            }
        }
    }
    if (!optimizer_ok) st.converged = false;
    return st;
}

} // namespace fermips
