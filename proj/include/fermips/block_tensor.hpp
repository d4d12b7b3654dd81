#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "fermips/sector.hpp"

namespace fermips {

using cplx = std::complex<double>;

struct CompressionPolicy {
    long max_bond = 256;
    double cutoff = 1e-20; // relative to the largest singular value

    void validate() const {
        if (max_bond < 1) throw InvalidSpec("max_bond must be >= 1");
        if (cutoff < 0 || cutoff >= 1) throw InvalidSpec("cutoff must be in [0,1)");
    }
};

inline CompressionPolicy unlimited_policy() { return {1L << 40, 0.0}; }

struct TruncationReport {
    long kept = 0;
    double discarded_weight = 0.0; // sum of squared discarded singulars / total
    double smallest_kept = 0.0;
};

// Quantum-number-blocked tensor over U(1)_N x U(1)_Sz.
//
// Every stored block with per-axis sector labels (q_1,...,q_r) satisfies
//   sum(incoming q) - sum(outgoing q) == flux,
// asserted on insertion. Dense blocks are row-major in axis order.
class BlockSparseTensor {
  public:
    using Key = std::vector<SectorLabel>;
    using BlockMap = std::map<Key, std::vector<cplx>>;

    BlockSparseTensor() = default;
    BlockSparseTensor(std::vector<AxisSignature> axes, SectorLabel flux);

    std::size_t rank() const { return axes_.size(); }
    const std::vector<AxisSignature> &axes() const { return axes_; }
    const AxisSignature &axis(std::size_t i) const;
    SectorLabel flux() const { return flux_; }
    const BlockMap &blocks() const { return blocks_; }
    bool empty() const { return blocks_.empty(); }

    std::vector<long> block_shape(const Key &key) const;
    long block_size(const Key &key) const;
    bool key_allowed(const Key &key) const; // flux equation + sectors present

    // Inserts (or overwrites) a block; validates key and data size.
    void set_block(const Key &key, std::vector<cplx> data);
    // Adds into a block, creating it if absent.
    void add_block(const Key &key, const std::vector<cplx> &data, cplx scale = 1.0);
    const std::vector<cplx> *block(const Key &key) const;

    double norm() const; // Frobenius
    void drop_zero_blocks(double tol = 0.0);
    void scale(cplx a);
    BlockSparseTensor scaled(cplx a) const;

    // Complex conjugate: flips every axis direction and negates the flux.
    BlockSparseTensor conj() const;

    BlockSparseTensor transposed(const std::vector<std::size_t> &perm) const;

    // Merge `count` adjacent axes starting at `start` (all same direction)
    // into one axis. Offsets within a fused sector follow the lexicographic
    // order of the component sector tuples, enumerated over the full
    // cartesian product of the component signatures, so two tensors fused
    // from identical component axes get identical layouts.
    BlockSparseTensor fused(std::size_t start, std::size_t count) const;

    void check_invariants() const; // full flux + shape audit

    // Debug dump: one line per block (sector tuple; shape; flattened values).
    void dump(std::ostream &os) const;

  private:
    std::vector<AxisSignature> axes_;
    SectorLabel flux_;
    BlockMap blocks_;
};

// Signature of the fused axis (shared with BlockSparseTensor::fused).
AxisSignature fuse_signatures(const std::vector<AxisSignature> &parts);

BlockSparseTensor contract(const BlockSparseTensor &a, const BlockSparseTensor &b,
                           const std::vector<std::pair<std::size_t, std::size_t>> &axis_pairs);

// Blockwise sum; axes and flux must match exactly.
BlockSparseTensor add(const BlockSparseTensor &a, const BlockSparseTensor &b);

// Full inner product <a|b> = contraction of conj(a) with b over all axes.
cplx dot(const BlockSparseTensor &a, const BlockSparseTensor &b);

// Dense embedding with sector offsets in ascending SectorLabel order.
std::vector<cplx> dense_embed(const BlockSparseTensor &t, long size_guard = 100000000L);
long dense_size(const BlockSparseTensor &t);

// Inverse of dense_embed for a given block structure: scatters a dense array
// into the flux-allowed blocks; entries outside them must be < tol.
BlockSparseTensor sparsify(const std::vector<cplx> &dense,
                           const std::vector<AxisSignature> &axes, SectorLabel flux,
                           double tol = 1e-12);

struct SvdResult {
    BlockSparseTensor u;                           // row axes + outgoing bond
    std::map<SectorLabel, std::vector<double>> s;  // singular values per bond sector
    BlockSparseTensor v;                           // incoming bond + column axes
    TruncationReport report;
};

// Truncated SVD across the axis partition (left_axes | the rest). Singular
// values are computed per sector and ranked globally; ties at the max_bond
// boundary break by (larger value, lower sector, lower index).
SvdResult svd_truncate(const BlockSparseTensor &t, const std::vector<std::size_t> &left_axes,
                       const CompressionPolicy &policy);

// Multiply singular values into the bond axis (last axis of u / first of v).
BlockSparseTensor absorb_bond_right(const BlockSparseTensor &u,
                                    const std::map<SectorLabel, std::vector<double>> &s);
BlockSparseTensor absorb_bond_left(const std::map<SectorLabel, std::vector<double>> &s,
                                   const BlockSparseTensor &v);

// Number of worker threads for block-level contraction (1 = serial).
void set_contraction_threads(int n);
int contraction_threads();

} // namespace fermips
