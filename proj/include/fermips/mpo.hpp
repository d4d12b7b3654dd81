#pragma once

#include "fermips/mps.hpp"
#include "fermips/opexpr.hpp"

namespace fermips {

// Matrix product operator. Site tensors are rank 4 (left bond incoming,
// physical-out incoming, physical-in outgoing, right bond outgoing) with
// zero flux; the left boundary bond carries the vacuum sector and the right
// boundary bond carries the operator's sector delta, both with dimension 1.
class MPOOperator {
  public:
    MPOOperator() = default;
    MPOOperator(std::vector<BlockSparseTensor> sites, SectorLabel delta);

    int length() const { return static_cast<int>(sites_.size()); }
    SectorLabel delta() const { return delta_; }
    const std::vector<BlockSparseTensor> &site_tensors() const { return sites_; }
    const BlockSparseTensor &site(int i) const { return sites_[i]; }
    std::vector<long> bond_dims() const;

    MPOOperator scaled(cplx a) const;

  private:
    std::vector<BlockSparseTensor> sites_;
    SectorLabel delta_{0, 0};
};

// Jordan-Wigner translation of a ladder string into per-site 4x4 matrices:
// each factor contributes its local matrix at its own site and a parity flip
// on every site to its left. Assembled as a direct sum of per-term bond-1
// chains, then compressed with an SVD sweep at the given relative cutoff.
MPOOperator build_mpo(const FermionOperatorSum &op, double cutoff = 1e-13);

// alpha*a + beta*b as a direct sum of the two chains, then recompressed.
MPOOperator add_mpo(const MPOOperator &a, cplx alpha, const MPOOperator &b, cplx beta,
                    double cutoff = 1e-13);

// Three-layer transfer environments over (conj bra, mpo, ket), used by the
// sweep engines. Left environments carry axes [bra bond (in), mpo bond (out),
// ket bond (out)], right environments the flipped directions.
BlockSparseTensor mpo_left_boundary();
BlockSparseTensor mpo_right_boundary(SectorLabel bra_sector, SectorLabel delta,
                                     SectorLabel ket_sector);
BlockSparseTensor mpo_env_step_left(const BlockSparseTensor &env, const BlockSparseTensor &bra,
                                    const BlockSparseTensor &w, const BlockSparseTensor &ket);
BlockSparseTensor mpo_env_step_right(const BlockSparseTensor &env, const BlockSparseTensor &bra,
                                     const BlockSparseTensor &w, const BlockSparseTensor &ket);

// <bra| op |ket>; zero when the sectors are incompatible with op's delta.
cplx expectation(const MPSWavefunction &bra, const MPOOperator &op, const MPSWavefunction &ket);
cplx expectation(const MPSWavefunction &psi, const MPOOperator &op);

// op |psi> by direct contraction (bond dimension multiplies), then compress.
MPSWavefunction apply_exact(const MPOOperator &op, const MPSWavefunction &psi,
                            const CompressionPolicy &policy);

// op |psi> by two-site variational fitting at the target bond dimension.
// Warm-starts from `guess` when given, else from psi itself (sector
// permitting) or a truncated direct application.
MPSWavefunction apply_fit(const MPOOperator &op, const MPSWavefunction &psi,
                          const CompressionPolicy &policy, int n_sweeps = 2,
                          const MPSWavefunction *guess = nullptr);

} // namespace fermips
