#include "fermips/mps.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "fermips/refsolver.hpp"

namespace fermips {

SectorLabel local_sector(int code) {
    switch (code) {
    case 0: return {0, 0};
    case 1: return {1, 1};
    case 2: return {1, -1};
    case 3: return {2, 0};
    default: throw OutOfRange("occupation code must be in [0,3]");
    }
}

int local_code(SectorLabel s) {
    for (int c = 0; c < 4; ++c)
        if (local_sector(c) == s) return c;
    throw OutOfRange("not a physical sector label");
}

AxisSignature physical_axis() {
    AxisSignature ax{AxisDir::In, {}};
    for (int c = 0; c < 4; ++c) ax.sectors[local_sector(c)] = 1;
    return ax;
}

namespace {

AxisSignature boundary_axis(AxisDir dir, SectorLabel s) {
    return AxisSignature{dir, {{s, 1}}};
}

void validate_chain(const std::vector<BlockSparseTensor> &sites, SectorLabel sector) {
    if (sites.empty()) throw InvalidSpec("MPS needs at least one site");
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const auto &t = sites[i];
        if (t.rank() != 3) throw RankError("MPS site tensor must be rank 3");
        if (t.axis(0).dir != AxisDir::In || t.axis(1).dir != AxisDir::In ||
            t.axis(2).dir != AxisDir::Out)
            throw AxisMismatch("MPS site axis directions must be (in, in, out)");
        if (!(t.flux() == SectorLabel{0, 0})) throw FluxMismatch("MPS site flux must be zero");
        for (auto &[s, d] : t.axis(1).sectors)
            if (physical_axis().dim(s) != 1) throw AxisMismatch("unexpected physical sector");
        if (i > 0 && !sites[i - 1].axis(2).same_sectors(t.axis(0)))
            throw AxisMismatch("adjacent bond signatures do not match");
    }
    if (!sites.front().axis(0).same_sectors(boundary_axis(AxisDir::In, {0, 0})))
        throw AxisMismatch("left boundary must carry the vacuum sector");
    if (!sites.back().axis(2).same_sectors(boundary_axis(AxisDir::Out, sector)))
        throw AxisMismatch("right boundary must carry the global sector");
}

} // namespace

MPSWavefunction::MPSWavefunction(std::vector<BlockSparseTensor> sites, SectorLabel global_sector,
                                 CompressionPolicy policy, std::optional<int> center)
    : sites_(std::move(sites)), sector_(global_sector), policy_(policy), center_(center) {
    policy_.validate();
    validate_chain(sites_, sector_);
}

MPSWavefunction MPSWavefunction::from_occupation(const std::vector<int> &occupations,
                                                 CompressionPolicy policy) {
    if (occupations.empty()) throw InvalidSpec("empty occupation list");
    std::vector<BlockSparseTensor> sites;
    SectorLabel acc{0, 0};
    for (int code : occupations) {
        SectorLabel loc = local_sector(code);
        BlockSparseTensor t({boundary_axis(AxisDir::In, acc), physical_axis(),
                             boundary_axis(AxisDir::Out, acc + loc)},
                            SectorLabel{0, 0});
        t.set_block({acc, loc, acc + loc}, {cplx(1.0)});
        sites.push_back(std::move(t));
        acc += loc;
    }
    return MPSWavefunction(std::move(sites), acc, policy);
}

MPSWavefunction MPSWavefunction::from_dense(const std::vector<cplx> &statevector, int length,
                                            SectorLabel sector, CompressionPolicy policy) {
    policy.validate();
    long want = 1;
    for (int i = 0; i < length; ++i) {
        want *= kLocalDim;
        if (want > 100000000L) throw SizeGuardExceeded("statevector too large");
    }
    if (static_cast<long>(statevector.size()) != want)
        throw RankError("statevector size is not 4^L");

    // big tensor: [vac, p_1 ... p_L, sector]; every occupation vector is its
    // own dimension-1 block
    std::vector<AxisSignature> axes;
    axes.push_back(boundary_axis(AxisDir::In, {0, 0}));
    for (int i = 0; i < length; ++i) axes.push_back(physical_axis());
    axes.push_back(boundary_axis(AxisDir::Out, sector));
    BlockSparseTensor big(axes, SectorLabel{0, 0});
    std::vector<int> codes(length, 0);
    for (long idx = 0; idx < want; ++idx) {
        long rem = idx;
        SectorLabel tot{0, 0};
        for (int i = length - 1; i >= 0; --i) {
            codes[i] = rem % 4;
            rem /= 4;
            tot += local_sector(codes[i]);
        }
        cplx amp = statevector[idx];
        if (!(tot == sector)) {
            if (std::abs(amp) > 1e-12)
                throw SectorViolation("amplitude outside the declared sector");
            continue;
        }
        if (amp == cplx{0}) continue;
        BlockSparseTensor::Key key;
        key.push_back({0, 0});
        for (int i = 0; i < length; ++i) key.push_back(local_sector(codes[i]));
        key.push_back(sector);
        big.set_block(key, {amp});
    }

    // constructive SVD, splitting one site at a time from the left
    std::vector<BlockSparseTensor> sites;
    BlockSparseTensor rest = std::move(big);
    for (int i = 0; i < length - 1; ++i) {
        if (rest.empty()) {
            // zero state: fall back to an empty-block chain is not allowed;
            // represent as a single vacuum-sector zero amplitude product
            throw ZeroState("cannot factor the zero statevector");
        }
        auto res = svd_truncate(rest, {0, 1}, policy);
        sites.push_back(res.u);
        rest = absorb_bond_left(res.s, res.v);
    }
    if (rest.empty()) throw ZeroState("cannot factor the zero statevector");
    sites.push_back(std::move(rest));
    return MPSWavefunction(std::move(sites), sector, policy);
}

std::vector<long> MPSWavefunction::bond_dims() const {
    std::vector<long> dims;
    dims.push_back(sites_.front().axis(0).total_dim());
    for (auto &t : sites_) dims.push_back(t.axis(2).total_dim());
    return dims;
}

double MPSWavefunction::norm() const {
    return std::sqrt(std::max(0.0, std::real(overlap(*this, *this))));
}

MPSWavefunction MPSWavefunction::normalized() const {
    double n = norm();
    if (n == 0.0) throw ZeroState("cannot normalize the zero state");
    return scaled(1.0 / n);
}

MPSWavefunction MPSWavefunction::scaled(cplx a) const {
    MPSWavefunction out = *this;
    out.sites_[0] = out.sites_[0].scaled(a);
    return out;
}

cplx overlap(const MPSWavefunction &bra, const MPSWavefunction &ket) {
    if (bra.length() != ket.length()) throw LengthMismatch("overlap of different lengths");
    if (!(bra.global_sector() == ket.global_sector())) return cplx{0};
    // transfer tensor E with axes [bra right bond (in), ket right bond (out)]
    BlockSparseTensor e;
    for (int i = 0; i < bra.length(); ++i) {
        auto cb = bra.site(i).conj(); // axes (out, out, in)
        if (i == 0) {
            e = contract(cb, ket.site(i), {{0, 0}, {1, 1}});
        } else {
            auto tmp = contract(e, cb, {{0, 0}});       // [ketR, braP(out), braR(in)]
            e = contract(tmp, ket.site(i), {{0, 0}, {1, 1}}); // [braR, ketR]
        }
    }
    if (e.empty()) return cplx{0};
    cplx v{0};
    for (auto &[k, d] : e.blocks()) v += d[0];
    return v;
}

namespace {

// scatter a block into a direct-sum tensor with bond offsets
void scatter_block(BlockSparseTensor &dst, const BlockSparseTensor::Key &key,
                   const std::vector<cplx> &src, const std::vector<long> &src_shape,
                   long off_l, long off_r, cplx scale) {
    auto shape = dst.block_shape(key);
    auto it = dst.block(key);
    std::vector<cplx> data = it ? *it : std::vector<cplx>(shape[0] * shape[1] * shape[2], cplx{0});
    for (long l = 0; l < src_shape[0]; ++l)
        for (long p = 0; p < src_shape[1]; ++p)
            for (long r = 0; r < src_shape[2]; ++r)
                data[((l + off_l) * shape[1] + p) * shape[2] + r + off_r] +=
                    scale * src[(l * src_shape[1] + p) * src_shape[2] + r];
    dst.set_block(key, std::move(data));
}

} // namespace

MPSWavefunction add_scaled(const MPSWavefunction &a, cplx alpha, const MPSWavefunction &b,
                           cplx beta, const CompressionPolicy &policy) {
    if (a.length() != b.length()) throw LengthMismatch("add_scaled length mismatch");
    if (!(a.global_sector() == b.global_sector()))
        throw SectorMismatch("add_scaled sector mismatch");
    const int L = a.length();
    if (L == 1) {
        auto t = add(a.site(0).scaled(alpha), b.site(0).scaled(beta));
        return MPSWavefunction({t}, a.global_sector(), policy);
    }
    std::vector<BlockSparseTensor> sites;
    for (int i = 0; i < L; ++i) {
        const auto &ta = a.site(i);
        const auto &tb = b.site(i);
        bool sum_l = (i > 0), sum_r = (i < L - 1);
        AxisSignature left = ta.axis(0), right = ta.axis(2);
        if (sum_l)
            for (auto &[s, d] : tb.axis(0).sectors) left.sectors[s] += d;
        if (sum_r)
            for (auto &[s, d] : tb.axis(2).sectors) right.sectors[s] += d;
        BlockSparseTensor t({left, physical_axis(), right}, SectorLabel{0, 0});
        cplx sa = (i == 0) ? alpha : cplx(1.0);
        cplx sb = (i == 0) ? beta : cplx(1.0);
        for (auto &[k, d] : ta.blocks())
            scatter_block(t, k, d, ta.block_shape(k), 0, 0, sa);
        for (auto &[k, d] : tb.blocks()) {
            long off_l = sum_l ? ta.axis(0).dim(k[0]) : 0;
            long off_r = sum_r ? ta.axis(2).dim(k[2]) : 0;
            scatter_block(t, k, d, tb.block_shape(k), off_l, off_r, sb);
        }
        t.drop_zero_blocks();
        sites.push_back(std::move(t));
    }
    MPSWavefunction direct(std::move(sites), a.global_sector(), unlimited_policy());
    return compress(direct, policy).first;
}

std::pair<MPSWavefunction, double> compress(const MPSWavefunction &psi,
                                            const CompressionPolicy &policy) {
    policy.validate();
    const int L = psi.length();
    std::vector<BlockSparseTensor> sites(psi.site_tensors().begin(), psi.site_tensors().end());
    // right-to-left orthogonalization, no truncation
    for (int i = L - 1; i > 0; --i) {
        if (sites[i].empty()) {
            // zero state: nothing to orthogonalize or truncate
            return {MPSWavefunction(std::move(sites), psi.global_sector(), policy), 0.0};
        }
        auto res = svd_truncate(sites[i], {0}, unlimited_policy());
        sites[i] = res.v;
        auto us = absorb_bond_right(res.u, res.s);
        sites[i - 1] = contract(sites[i - 1], us, {{2, 0}});
    }
    // left-to-right truncation sweep
    double discarded = 0.0;
    for (int i = 0; i + 1 < L; ++i) {
        if (sites[i].empty()) break;
        auto res = svd_truncate(sites[i], {0, 1}, policy);
        discarded += res.report.discarded_weight;
        sites[i] = res.u;
        auto sv = absorb_bond_left(res.s, res.v);
        sites[i + 1] = contract(sv, sites[i + 1], {{1, 0}});
    }
    return {MPSWavefunction(std::move(sites), psi.global_sector(), policy, L - 1), discarded};
}

std::vector<cplx> to_dense(const MPSWavefunction &psi, long size_guard) {
    const int L = psi.length();
    long total = 1;
    for (int i = 0; i < L; ++i) {
        total *= kLocalDim;
        if (total > size_guard) throw SizeGuardExceeded("to_dense above size guard");
    }
    std::vector<cplx> out(total, cplx{0});
    std::vector<int> codes(L, 0);
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        for (int i = L - 1; i >= 0; --i) {
            codes[i] = rem % 4;
            rem /= 4;
        }
        // product of per-site bond matrices
        std::vector<cplx> vec = {cplx(1.0)};
        SectorLabel ql{0, 0};
        bool dead = false;
        for (int i = 0; i < L && !dead; ++i) {
            SectorLabel loc = local_sector(codes[i]);
            SectorLabel qr = ql + loc;
            const auto *blk = psi.site(i).block({ql, loc, qr});
            if (!blk) {
                dead = true;
                break;
            }
            long dl = psi.site(i).axis(0).dim(ql);
            long dr = psi.site(i).axis(2).dim(qr);
            std::vector<cplx> nv(dr, cplx{0});
            for (long r = 0; r < dr; ++r)
                for (long l = 0; l < dl; ++l) nv[r] += vec[l] * (*blk)[l * dr + r];
            vec = std::move(nv);
            ql = qr;
        }
        if (!dead && vec.size() == 1) out[idx] = vec[0];
    }
    return out;
}

DenseState mps_to_dense_state(const MPSWavefunction &psi, const SectorBasis &basis) {
    if (psi.length() != basis.norb) throw SectorMismatch("MPS/basis length mismatch");
    SectorLabel want{basis.n_alpha + basis.n_beta, basis.n_alpha - basis.n_beta};
    if (!(psi.global_sector() == want)) throw SectorMismatch("MPS sector does not match basis");
    DenseState st;
    st.basis = &basis;
    st.amplitudes = Eigen::VectorXcd::Zero(basis.dimension());
    for (long d = 0; d < basis.dimension(); ++d) {
        auto [am, bm] = basis.determinants[d];
        std::vector<cplx> vec = {cplx(1.0)};
        SectorLabel ql{0, 0};
        bool dead = false;
        for (int i = 0; i < basis.norb && !dead; ++i) {
            int code = ((am >> i) & 1u) | (((bm >> i) & 1u) << 1);
            SectorLabel loc = local_sector(code);
            SectorLabel qr = ql + loc;
            const auto *blk = psi.site(i).block({ql, loc, qr});
            if (!blk) {
                dead = true;
                break;
            }
            long dl = psi.site(i).axis(0).dim(ql);
            long dr = psi.site(i).axis(2).dim(qr);
            std::vector<cplx> nv(dr, cplx{0});
            for (long r = 0; r < dr; ++r)
                for (long l = 0; l < dl; ++l) nv[r] += vec[l] * (*blk)[l * dr + r];
            vec = std::move(nv);
            ql = qr;
        }
        if (!dead && vec.size() == 1) st.amplitudes(d) = vec[0];
    }
    return st;
}

void save_mps(const MPSWavefunction &psi, std::ostream &os) {
    os << "FERMIPS-MPS1\n";
    os << psi.length() << " " << psi.global_sector().n << " " << psi.global_sector().twice_sz
       << " " << psi.policy().max_bond << " ";
    os.precision(17);
    os << psi.policy().cutoff << "\n";
    for (auto &t : psi.site_tensors()) t.dump(os);
}

namespace {

BlockSparseTensor read_tensor_dump(std::istream &is) {
    std::string tag;
    std::size_t rank, nblocks, nsec;
    char c;
    is >> tag;
    if (tag != "tensor") throw ParseError("expected tensor header");
    std::string kv;
    is >> kv; // rank=N
    rank = std::stoul(kv.substr(kv.find('=') + 1));
    is >> kv; // flux=
    SectorLabel flux;
    flux.n = std::stoi(kv.substr(kv.find('=') + 1));
    is >> flux.twice_sz;
    is >> kv;
    nblocks = std::stoul(kv.substr(kv.find('=') + 1));
    std::vector<AxisSignature> axes;
    for (std::size_t i = 0; i < rank; ++i) {
        std::string dir, ns;
        is >> tag >> dir >> ns;
        if (tag != "axis") throw ParseError("expected axis line");
        AxisSignature ax{dir == "in" ? AxisDir::In : AxisDir::Out, {}};
        nsec = std::stoul(ns.substr(ns.find('=') + 1));
        for (std::size_t s = 0; s < nsec; ++s) {
            SectorLabel q;
            long d;
            is >> q.n >> q.twice_sz >> d;
            ax.sectors[q] = d;
        }
        axes.push_back(std::move(ax));
    }
    BlockSparseTensor t(axes, flux);
    for (std::size_t b = 0; b < nblocks; ++b) {
        is >> tag;
        if (tag != "block") throw ParseError("expected block line");
        BlockSparseTensor::Key key(rank);
        for (std::size_t i = 0; i < rank; ++i) is >> key[i].n >> key[i].twice_sz;
        is >> c; // ':'
        long n = t.block_size(key);
        std::vector<cplx> data(n);
        for (long i = 0; i < n; ++i) {
            double re, im;
            is >> re >> im;
            data[i] = cplx(re, im);
        }
        t.set_block(key, std::move(data));
    }
    return t;
}

} // namespace

MPSWavefunction load_mps(std::istream &is) {
    std::string magic;
    is >> magic;
    if (magic != "FERMIPS-MPS1") throw ParseError("bad MPS magic string");
    int L;
    SectorLabel sector;
    CompressionPolicy policy;
    is >> L >> sector.n >> sector.twice_sz >> policy.max_bond >> policy.cutoff;
    if (!is || L < 1) throw ParseError("bad MPS header");
    std::vector<BlockSparseTensor> sites;
    for (int i = 0; i < L; ++i) sites.push_back(read_tensor_dump(is));
    return MPSWavefunction(std::move(sites), sector, policy);
}

} // namespace fermips
