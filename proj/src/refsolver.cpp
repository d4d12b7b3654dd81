#include "fermips/refsolver.hpp"

#include <Eigen/Eigenvalues>
#include <bit>
#include <random>

namespace fermips {

namespace {

constexpr long kDenseEigLimit = 2000;
constexpr long kSizeGuard = 20000;

void check_hermitian(const Eigen::MatrixXcd &m, double tol = 1e-10) {
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol)
        throw NonHermitian("matrix is not Hermitian");
}

// occupation mask over interleaved modes; bit m set = mode m occupied
std::uint64_t interleave(std::uint32_t alpha, std::uint32_t beta, int norb) {
    std::uint64_t occ = 0;
    for (int i = 0; i < norb; ++i) {
        if (alpha >> i & 1u) occ |= 1ull << (2 * i);
        if (beta >> i & 1u) occ |= 1ull << (2 * i + 1);
    }
    return occ;
}

} // namespace

long long SectorBasis::sector_dimension(int norb, int n_alpha, int n_beta) {
    if (norb < 0 || n_alpha < 0 || n_beta < 0 || n_alpha > norb || n_beta > norb)
        throw OutOfRange("occupation outside [0, norb]");
    auto binom = [](int n, int k) {
        long long r = 1;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    return binom(norb, n_alpha) * binom(norb, n_beta);
}

SectorBasis make_basis_with_index(SectorBasis b) {
    for (long i = 0; i < b.dimension(); ++i) b.index_[b.determinants[i]] = i;
    return b;
}

SectorBasis SectorBasis::enumerate(int norb, int n_alpha, int n_beta) {
    sector_dimension(norb, n_alpha, n_beta); // range check
    SectorBasis b;
    b.norb = norb;
    b.n_alpha = n_alpha;
    b.n_beta = n_beta;
    std::vector<std::uint32_t> amasks, bmasks;
    for (std::uint32_t m = 0; m < (1u << norb); ++m) {
        int pc = std::popcount(m);
        if (pc == n_alpha) amasks.push_back(m);
        if (pc == n_beta) bmasks.push_back(m);
    }
    for (auto a : amasks)
        for (auto bm : bmasks) b.determinants.push_back({a, bm});
    std::sort(b.determinants.begin(), b.determinants.end());
    return make_basis_with_index(std::move(b));
}

long SectorBasis::index_of(std::uint32_t a, std::uint32_t b) const {
    auto it = index_.find({a, b});
    return it == index_.end() ? -1 : it->second;
}

Eigen::MatrixXcd operator_matrix(const FermionOperatorSum &op, const SectorBasis &basis) {
    if (op.system_size() != basis.norb) throw SystemSizeMismatch("operator/basis size mismatch");
    SectorLabel delta = op.uniform_delta();
    if (!(delta == SectorLabel{0, 0}))
        throw SectorDeltaMismatch("operator does not conserve the sector");
    const long dim = basis.dimension();
    Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(dim, dim);
    for (long col = 0; col < dim; ++col) {
        auto [amask, bmask] = basis.determinants[col];
        std::uint64_t occ0 = interleave(amask, bmask, basis.norb);
        for (const auto &term : op.terms()) {
            std::uint64_t occ = occ0;
            int sign = 1;
            bool dead = false;
            for (auto it = term.factors.rbegin(); it != term.factors.rend(); ++it) {
                int m = it->mode();
                std::uint64_t bit = 1ull << m;
                bool occupied = occ & bit;
                if (it->dagger == occupied) {
                    dead = true;
                    break;
                }
                if (std::popcount(occ & (bit - 1)) & 1) sign = -sign;
                occ ^= bit;
            }
            if (dead) continue;
            std::uint32_t ra = 0, rb = 0;
            for (int i = 0; i < basis.norb; ++i) {
                if (occ >> (2 * i) & 1) ra |= 1u << i;
                if (occ >> (2 * i + 1) & 1) rb |= 1u << i;
            }
            long row = basis.index_of(ra, rb);
            if (row < 0) throw SectorDeltaMismatch("term leaves the sector");
            mat(row, col) += term.coefficient * static_cast<double>(sign);
        }
    }
    return mat;
}

std::pair<double, Eigen::VectorXcd> ground_state(const Eigen::MatrixXcd &mat) {
    const long dim = mat.rows();
    if (dim > kSizeGuard) throw SizeGuardExceeded("matrix above refsolver size guard");
    check_hermitian(mat);
    if (dim <= kDenseEigLimit) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat);
        return {es.eigenvalues()(0), es.eigenvectors().col(0)};
    }
    // Lanczos with full reorthogonalization
    std::mt19937 rng(12345);
    std::normal_distribution<double> g;
    Eigen::VectorXcd v = Eigen::VectorXcd::NullaryExpr(dim, [&](Eigen::Index) {
        return cplx(g(rng), g(rng));
    });
    v.normalize();
    const int maxit = std::min<long>(dim, 300);
    std::vector<Eigen::VectorXcd> basis;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(maxit, maxit);
    double prev = 1e300;
    std::pair<double, Eigen::VectorXcd> best{0.0, v};
    for (int k = 0; k < maxit; ++k) {
        basis.push_back(v);
        Eigen::VectorXcd w = mat * v;
        double alpha = std::real(v.dot(w));
        T(k, k) = alpha;
        for (auto &b : basis) w -= b.dot(w) * b;
        for (auto &b : basis) w -= b.dot(w) * b;
        double beta = w.norm();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(k + 1, k + 1));
        double e0 = es.eigenvalues()(0);
        Eigen::VectorXcd gs = Eigen::VectorXcd::Zero(dim);
        for (int i = 0; i <= k; ++i) gs += es.eigenvectors()(i, 0) * basis[i];
        best = {e0, gs.normalized()};
        if (std::abs(e0 - prev) < 1e-12 || beta < 1e-13) break;
        prev = e0;
        if (k + 1 < maxit) {
            T(k, k + 1) = T(k + 1, k) = beta;
            v = w / beta;
        }
    }
    return best;
}

Propagator::Propagator(const Eigen::MatrixXcd &mat) {
    if (mat.rows() > kSizeGuard) throw SizeGuardExceeded("matrix above refsolver size guard");
    check_hermitian(mat);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat);
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
}

Eigen::VectorXcd Propagator::apply(const Eigen::VectorXcd &state, double t) const {
    Eigen::VectorXcd c = evecs_.adjoint() * state;
    for (long i = 0; i < c.size(); ++i) c(i) *= std::exp(cplx(0, -evals_(i) * t));
    return evecs_ * c;
}

Eigen::VectorXcd propagate(const Eigen::MatrixXcd &mat, const Eigen::VectorXcd &state, double t) {
    return Propagator(mat).apply(state, t);
}

} // namespace fermips
