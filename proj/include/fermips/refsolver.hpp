#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "fermips/opexpr.hpp"

namespace fermips {

class MPSWavefunction;

// Determinant basis of the (n_alpha, n_beta) sector. Determinants are
// (alpha-mask, beta-mask) pairs in lexicographic order; bit i of a mask is
// the occupation of spatial orbital i for that spin. The amplitude phase
// convention applies creation operators in ascending interleaved mode order
// (site 0 up, site 0 down, site 1 up, ...), matching the MPS product basis.
struct SectorBasis {
    int norb = 0;
    int n_alpha = 0;
    int n_beta = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> determinants;

    long dimension() const { return static_cast<long>(determinants.size()); }
    long index_of(std::uint32_t a, std::uint32_t b) const; // -1 if absent

    // Dimension-only query C(L,na)*C(L,nb); never materializes the basis.
    static long long sector_dimension(int norb, int n_alpha, int n_beta);
    static SectorBasis enumerate(int norb, int n_alpha, int n_beta);

  private:
    std::map<std::pair<std::uint32_t, std::uint32_t>, long> index_;
    friend SectorBasis make_basis_with_index(SectorBasis);
};

struct DenseState {
    const SectorBasis *basis = nullptr;
    Eigen::VectorXcd amplitudes;
};

// Matrix of op in the sector basis by direct ladder-operator action; op must
// conserve the sector (delta == 0).
Eigen::MatrixXcd operator_matrix(const FermionOperatorSum &op, const SectorBasis &basis);

// Lowest eigenpair of a Hermitian matrix. Dense below dimension 2000,
// Lanczos above; size guard at dim 20000.
std::pair<double, Eigen::VectorXcd> ground_state(const Eigen::MatrixXcd &mat);

// exp(-i mat t) state via eigendecomposition.
Eigen::VectorXcd propagate(const Eigen::MatrixXcd &mat, const Eigen::VectorXcd &state, double t);

// Cached eigendecomposition for repeated propagation of the same matrix.
class Propagator {
  public:
    explicit Propagator(const Eigen::MatrixXcd &mat);
    Eigen::VectorXcd apply(const Eigen::VectorXcd &state, double t) const;

  private:
    Eigen::VectorXd evals_;
    Eigen::MatrixXcd evecs_;
};

// Bridges an MPS to the determinant basis (defined in mps.cpp).
DenseState mps_to_dense_state(const MPSWavefunction &psi, const SectorBasis &basis);

} // namespace fermips
