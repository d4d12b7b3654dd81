#pragma once

// Internal helpers shared by the sweep engines: canonicalization, local
// effective-Hamiltonian maps over three-layer environments, and small Krylov
// solvers (ground state and matrix exponential) on block tensors.

#include <Eigen/Eigenvalues>
#include <functional>
#include <vector>

#include "fermips/mpo.hpp"

namespace fermips::detail {

using TensorMap = std::function<BlockSparseTensor(const BlockSparseTensor &)>;

// right-to-left orthogonalization without truncation; center moves to site 0
inline void right_canonicalize(std::vector<BlockSparseTensor> &sites) {
    for (int i = static_cast<int>(sites.size()) - 1; i > 0; --i) {
        if (sites[i].empty()) return;
        auto res = svd_truncate(sites[i], {0}, unlimited_policy());
        sites[i] = res.v;
        sites[i - 1] = contract(sites[i - 1], absorb_bond_right(res.u, res.s), {{2, 0}});
    }
}

// effective Hamiltonian on a two-site tensor [l, p_i, p_i+1, r]
inline TensorMap heff2(const BlockSparseTensor &lenv, const BlockSparseTensor &w1,
                       const BlockSparseTensor &w2, const BlockSparseTensor &renv) {
    const BlockSparseTensor *le = &lenv, *a = &w1, *b = &w2, *re = &renv;
    return [le, a, b, re](const BlockSparseTensor &x) {
        auto y = contract(*le, x, {{2, 0}});    // [bra, w, p_i, p_i+1, r]
        y = contract(y, *a, {{1, 0}, {2, 2}});  // [bra, p_i+1, r, p_out_i, wr]
        y = contract(y, *b, {{1, 2}, {4, 0}});  // [bra, r, p_out_i, p_out_i+1, wr]
        y = contract(y, *re, {{1, 2}, {4, 1}}); // [l, p_out_i, p_out_i+1, r]
        return y;
    };
}

// effective Hamiltonian on a one-site tensor [l, p, r]
inline TensorMap heff1(const BlockSparseTensor &lenv, const BlockSparseTensor &w,
                       const BlockSparseTensor &renv) {
    const BlockSparseTensor *le = &lenv, *a = &w, *re = &renv;
    return [le, a, re](const BlockSparseTensor &x) {
        auto y = contract(*le, x, {{2, 0}});    // [bra, w, p, r]
        y = contract(y, *a, {{1, 0}, {2, 2}});  // [bra, r, p_out, wr]
        y = contract(y, *re, {{1, 2}, {3, 1}}); // [l, p_out, r]
        return y;
    };
}

// Incremental Hermitian Lanczos with full reorthogonalization. `accept` is
// called with the tridiagonal blocks after every iteration and returns true
// to terminate early.
struct KrylovBasis {
    std::vector<BlockSparseTensor> q;
    std::vector<double> alpha, beta;
    double x_norm = 0.0;
};

template <class Accept>
KrylovBasis lanczos_run(const TensorMap &a, const BlockSparseTensor &x, int kmax,
                        Accept accept) {
    KrylovBasis kb;
    kb.x_norm = x.norm();
    if (kb.x_norm == 0.0) return kb;
    BlockSparseTensor v = x.scaled(1.0 / kb.x_norm);
    for (int k = 0; k < kmax; ++k) {
        kb.q.push_back(v);
        BlockSparseTensor w = a(v);
        kb.alpha.push_back(std::real(dot(v, w)));
        for (int pass = 0; pass < 2; ++pass)
            for (auto &b : kb.q) w = add(w, b.scaled(-dot(b, w)));
        double nb = w.norm();
        bool breakdown = nb < 1e-13 * std::max(1.0, kb.x_norm);
        if (accept(kb, breakdown ? 0.0 : nb) || breakdown || k + 1 == kmax) break;
        kb.beta.push_back(nb);
        v = w.scaled(1.0 / nb);
    }
    return kb;
}

inline Eigen::MatrixXd tridiagonal(const KrylovBasis &kb) {
    const int m = static_cast<int>(kb.alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = kb.alpha[i];
    for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = kb.beta[i];
    return t;
}

inline BlockSparseTensor krylov_combine(const KrylovBasis &kb, const Eigen::VectorXcd &y) {
    BlockSparseTensor out = kb.q[0].scaled(y(0));
    for (int i = 1; i < static_cast<int>(kb.q.size()); ++i)
        out = add(out, kb.q[i].scaled(y(i)));
    return out;
}

// lowest eigenpair of the Hermitian map, seeded at x; converged when the
// Lanczos residual bound beta_k * |y_k| drops below tol, with restarts
inline std::pair<double, BlockSparseTensor> lanczos_ground(const TensorMap &a,
                                                           const BlockSparseTensor &x,
                                                           int kmax = 40, double tol = 1e-10,
                                                           int restarts = 5) {
    BlockSparseTensor seed = x;
    double e0 = 0.0;
    for (int r = 0; r < restarts; ++r) {
        bool converged = false;
        auto kb = lanczos_run(a, seed, kmax, [&](const KrylovBasis &b, double next_beta) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tridiagonal(b));
            e0 = es.eigenvalues()(0);
            const int m = static_cast<int>(b.alpha.size());
            double tail = std::abs(es.eigenvectors()(m - 1, 0));
            converged = next_beta * tail < tol * std::max(1.0, std::abs(e0));
            return converged;
        });
        if (kb.q.empty()) throw ZeroState("Lanczos seeded with the zero tensor");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tridiagonal(kb));
        auto gs = krylov_combine(kb, Eigen::VectorXcd(es.eigenvectors().col(0)));
        seed = gs.scaled(1.0 / gs.norm());
        e0 = es.eigenvalues()(0);
        if (converged) break;
    }
    return {e0, seed};
}

// exp(z * A) x for Hermitian A via the Lanczos subspace
inline BlockSparseTensor krylov_expm(const TensorMap &a, const BlockSparseTensor &x, cplx z,
                                     int kmax = 25, double tol = 1e-12) {
    auto small_exp = [&z](const KrylovBasis &b) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tridiagonal(b));
        const int m = static_cast<int>(b.alpha.size());
        Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(m);
        e1(0) = b.x_norm;
        Eigen::VectorXcd c = es.eigenvectors().transpose() * e1;
        for (int i = 0; i < m; ++i) c(i) *= std::exp(z * es.eigenvalues()(i));
        return Eigen::VectorXcd(es.eigenvectors() * c);
    };
    Eigen::VectorXcd prev;
    auto kb = lanczos_run(a, x, kmax, [&](const KrylovBasis &b, double next_beta) {
        Eigen::VectorXcd y = small_exp(b);
        bool done = false;
        if (prev.size() > 0) {
            double diff = (y.head(prev.size()) - prev).norm() + std::abs(y(y.size() - 1));
            done = diff < tol * b.x_norm && next_beta * std::abs(z) < 1.0;
        }
        prev = y;
        return done;
    });
    if (kb.q.empty()) return x; // zero tensor is stationary
    return krylov_combine(kb, small_exp(kb));
}

} // namespace fermips::detail
