#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "fermips/block_tensor.hpp"

namespace fermips {

// Local occupation codes: 0 = empty, 1 = up, 2 = down, 3 = doubly occupied.
inline constexpr int kLocalDim = 4;
SectorLabel local_sector(int code);
int local_code(SectorLabel s);
// The four-sector physical axis {(0,0),(1,1),(1,-1),(2,0)}, each dim 1.
AxisSignature physical_axis();

// Matrix product state over L spatial orbitals. Site tensors are rank 3
// (left bond incoming, physical incoming, right bond outgoing) with zero
// flux; the left boundary bond carries the vacuum sector and the right
// boundary bond carries the global sector, both with dimension 1.
class MPSWavefunction {
  public:
    MPSWavefunction() = default;
    MPSWavefunction(std::vector<BlockSparseTensor> sites, SectorLabel global_sector,
                    CompressionPolicy policy, std::optional<int> center = std::nullopt);

    static MPSWavefunction from_occupation(const std::vector<int> &occupations,
                                           CompressionPolicy policy = {});
    // Dense statevector indexed by sum_i code_i * 4^(L-1-i).
    static MPSWavefunction from_dense(const std::vector<cplx> &statevector, int length,
                                      SectorLabel sector, CompressionPolicy policy);

    int length() const { return static_cast<int>(sites_.size()); }
    SectorLabel global_sector() const { return sector_; }
    const std::vector<BlockSparseTensor> &site_tensors() const { return sites_; }
    const BlockSparseTensor &site(int i) const { return sites_[i]; }
    const CompressionPolicy &policy() const { return policy_; }
    std::optional<int> canonical_center() const { return center_; }

    std::vector<long> bond_dims() const; // L+1 entries including boundaries
    double norm() const;
    MPSWavefunction normalized() const;
    MPSWavefunction scaled(cplx a) const;

  private:
    std::vector<BlockSparseTensor> sites_;
    SectorLabel sector_{0, 0};
    CompressionPolicy policy_{};
    std::optional<int> center_;
};

cplx overlap(const MPSWavefunction &bra, const MPSWavefunction &ket);

MPSWavefunction add_scaled(const MPSWavefunction &a, cplx alpha, const MPSWavefunction &b,
                           cplx beta, const CompressionPolicy &policy);

// Right-to-left orthogonalization followed by a left-to-right truncation
// sweep; returns the compressed state and the total discarded weight.
std::pair<MPSWavefunction, double> compress(const MPSWavefunction &psi,
                                            const CompressionPolicy &policy);

std::vector<cplx> to_dense(const MPSWavefunction &psi, long size_guard = 100000000L);

void save_mps(const MPSWavefunction &psi, std::ostream &os);
MPSWavefunction load_mps(std::istream &is);

} // namespace fermips
