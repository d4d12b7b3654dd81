#include "fermips/block_tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numeric>
#include <set>
#include <sstream>

namespace fermips {

namespace {

int g_threads = 1;

using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using CMapRow = Eigen::Map<const RowMat>;

long prod(const std::vector<long> &v) {
    long p = 1;
    for (long x : v) p *= x;
    return p;
}

} // namespace

void set_contraction_threads(int n) { g_threads = std::max(1, n); }
int contraction_threads() { return g_threads; }

BlockSparseTensor::BlockSparseTensor(std::vector<AxisSignature> axes, SectorLabel flux)
    : axes_(std::move(axes)), flux_(flux) {
    for (auto &ax : axes_) ax.validate();
}

const AxisSignature &BlockSparseTensor::axis(std::size_t i) const {
    if (i >= axes_.size()) throw RankError("axis index out of range");
    return axes_[i];
}

std::vector<long> BlockSparseTensor::block_shape(const Key &key) const {
    if (key.size() != axes_.size()) throw RankError("block key rank mismatch");
    std::vector<long> shape(key.size());
    for (std::size_t i = 0; i < key.size(); ++i) {
        long d = axes_[i].dim(key[i]);
        if (d == 0) throw SectorViolation("sector not present on axis");
        shape[i] = d;
    }
    return shape;
}

long BlockSparseTensor::block_size(const Key &key) const { return prod(block_shape(key)); }

bool BlockSparseTensor::key_allowed(const Key &key) const {
    if (key.size() != axes_.size()) return false;
    SectorLabel net{0, 0};
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (axes_[i].dim(key[i]) == 0) return false;
        if (axes_[i].dir == AxisDir::In)
            net += key[i];
        else
            net += -key[i];
    }
    return net == flux_;
}

void BlockSparseTensor::set_block(const Key &key, std::vector<cplx> data) {
    if (!key_allowed(key)) throw FluxMismatch("block violates flux equation or sector maps");
    if (static_cast<long>(data.size()) != block_size(key))
        throw RankError("block data size does not match sector shape");
    blocks_[key] = std::move(data);
}

void BlockSparseTensor::add_block(const Key &key, const std::vector<cplx> &data, cplx scale) {
    if (!key_allowed(key)) throw FluxMismatch("block violates flux equation or sector maps");
    if (static_cast<long>(data.size()) != block_size(key))
        throw RankError("block data size does not match sector shape");
    auto it = blocks_.find(key);
    if (it == blocks_.end()) {
        auto &blk = blocks_[key];
        blk.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) blk[i] = scale * data[i];
    } else {
        for (std::size_t i = 0; i < data.size(); ++i) it->second[i] += scale * data[i];
    }
}

const std::vector<cplx> *BlockSparseTensor::block(const Key &key) const {
    auto it = blocks_.find(key);
    return it == blocks_.end() ? nullptr : &it->second;
}

double BlockSparseTensor::norm() const {
    double s = 0;
    for (auto &[k, v] : blocks_)
        for (cplx x : v) s += std::norm(x);
    return std::sqrt(s);
}

void BlockSparseTensor::drop_zero_blocks(double tol) {
    for (auto it = blocks_.begin(); it != blocks_.end();) {
        double m = 0;
        for (cplx x : it->second) m = std::max(m, std::abs(x));
        if (m <= tol)
            it = blocks_.erase(it);
        else
            ++it;
    }
}

void BlockSparseTensor::scale(cplx a) {
    for (auto &[k, v] : blocks_)
        for (cplx &x : v) x *= a;
}

BlockSparseTensor BlockSparseTensor::scaled(cplx a) const {
    BlockSparseTensor r = *this;
    r.scale(a);
    return r;
}

BlockSparseTensor BlockSparseTensor::conj() const {
    std::vector<AxisSignature> axes;
    axes.reserve(axes_.size());
    for (auto &ax : axes_) axes.push_back(ax.flipped());
    BlockSparseTensor r(std::move(axes), -flux_);
    for (auto &[k, v] : blocks_) {
        std::vector<cplx> d(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) d[i] = std::conj(v[i]);
        r.blocks_[k] = std::move(d);
    }
    return r;
}

BlockSparseTensor BlockSparseTensor::transposed(const std::vector<std::size_t> &perm) const {
    if (perm.size() != axes_.size()) throw RankError("permutation rank mismatch");
    std::vector<AxisSignature> axes(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if (perm[i] >= axes_.size()) throw RankError("permutation index out of range");
        axes[i] = axes_[perm[i]];
    }
    BlockSparseTensor r(std::move(axes), flux_);
    const std::size_t rk = axes_.size();
    for (auto &[key, data] : blocks_) {
        Key nkey(rk);
        for (std::size_t i = 0; i < rk; ++i) nkey[i] = key[perm[i]];
        auto oshape = block_shape(key);
        std::vector<long> ostrides(rk, 1);
        for (std::size_t i = rk; i-- > 1;) ostrides[i - 1] = ostrides[i] * oshape[i];
        std::vector<long> nshape(rk), nstride_in_old(rk);
        for (std::size_t i = 0; i < rk; ++i) {
            nshape[i] = oshape[perm[i]];
            nstride_in_old[i] = ostrides[perm[i]];
        }
        std::vector<cplx> nd(data.size());
        const long total = static_cast<long>(data.size());
        std::vector<long> idx(rk, 0);
        long ooff = 0;
        for (long lin = 0; lin < total; ++lin) {
            nd[lin] = data[ooff];
            for (std::size_t i = rk; i-- > 0;) {
                ++idx[i];
                ooff += nstride_in_old[i];
                if (idx[i] < nshape[i]) break;
                ooff -= nshape[i] * nstride_in_old[i];
                idx[i] = 0;
            }
        }
        r.blocks_[std::move(nkey)] = std::move(nd);
    }
    return r;
}

AxisSignature fuse_signatures(const std::vector<AxisSignature> &parts) {
    if (parts.empty()) throw RankError("fuse needs at least one axis");
    AxisDir dir = parts[0].dir;
    for (auto &p : parts)
        if (p.dir != dir) throw AxisMismatch("fused axes must share a direction");
    AxisSignature out{dir, {}};
    // cartesian product in lexicographic tuple order (maps iterate sorted)
    std::vector<std::pair<SectorLabel, long>> acc = {{SectorLabel{0, 0}, 1}};
    for (auto &p : parts) {
        std::vector<std::pair<SectorLabel, long>> next;
        for (auto &[q, d] : acc)
            for (auto &[s, sd] : p.sectors) next.push_back({q + s, d * sd});
        acc = std::move(next);
    }
    for (auto &[q, d] : acc) out.sectors[q] += d;
    return out;
}

BlockSparseTensor BlockSparseTensor::fused(std::size_t start, std::size_t count) const {
    if (count == 0 || start + count > axes_.size()) throw RankError("bad fuse range");
    std::vector<AxisSignature> parts(axes_.begin() + start, axes_.begin() + start + count);
    AxisSignature fusedax = fuse_signatures(parts);

    // offset of each component tuple within its fused sector
    std::map<Key, std::pair<SectorLabel, long>> tuple_info; // tuple -> (charge, offset)
    {
        std::vector<Key> tuples = {{}};
        for (auto &p : parts) {
            std::vector<Key> next;
            for (auto &t : tuples)
                for (auto &[s, d] : p.sectors) {
                    Key nt = t;
                    nt.push_back(s);
                    next.push_back(std::move(nt));
                }
            tuples = std::move(next);
        }
        std::sort(tuples.begin(), tuples.end());
        std::map<SectorLabel, long> cursor;
        for (auto &t : tuples) {
            SectorLabel q{0, 0};
            long d = 1;
            for (std::size_t i = 0; i < count; ++i) {
                q += t[i];
                d *= parts[i].sectors.at(t[i]);
            }
            tuple_info[t] = {q, cursor[q]};
            cursor[q] += d;
        }
    }

    std::vector<AxisSignature> naxes(axes_.begin(), axes_.begin() + start);
    naxes.push_back(fusedax);
    naxes.insert(naxes.end(), axes_.begin() + start + count, axes_.end());
    BlockSparseTensor r(std::move(naxes), flux_);

    for (auto &[key, data] : blocks_) {
        Key tuple(key.begin() + start, key.begin() + start + count);
        auto [q, off] = tuple_info.at(tuple);
        Key nkey(key.begin(), key.begin() + start);
        nkey.push_back(q);
        nkey.insert(nkey.end(), key.begin() + start + count, key.end());

        auto oshape = block_shape(key);
        long outer = 1, mid = 1, inner = 1;
        for (std::size_t i = 0; i < start; ++i) outer *= oshape[i];
        for (std::size_t i = start; i < start + count; ++i) mid *= oshape[i];
        for (std::size_t i = start + count; i < oshape.size(); ++i) inner *= oshape[i];
        long fdim = fusedax.sectors.at(q);

        auto it = r.blocks_.find(nkey);
        if (it == r.blocks_.end()) {
            it = r.blocks_.emplace(nkey, std::vector<cplx>(outer * fdim * inner, cplx{0})).first;
        }
        auto &nd = it->second;
        for (long o = 0; o < outer; ++o)
            std::copy(data.begin() + o * mid * inner, data.begin() + (o + 1) * mid * inner,
                      nd.begin() + (o * fdim + off) * inner);
    }
    return r;
}

void BlockSparseTensor::check_invariants() const {
    for (auto &[k, v] : blocks_) {
        if (!key_allowed(k)) throw FluxMismatch("stored block violates flux equation");
        if (static_cast<long>(v.size()) != block_size(k))
            throw RankError("stored block shape mismatch");
    }
}

void BlockSparseTensor::dump(std::ostream &os) const {
    os << "tensor rank=" << axes_.size() << " flux=" << flux_.n << " " << flux_.twice_sz
       << " nblocks=" << blocks_.size() << "\n";
    for (auto &ax : axes_) {
        os << "axis " << (ax.dir == AxisDir::In ? "in" : "out") << " nsec=" << ax.sectors.size();
        for (auto &[s, d] : ax.sectors) os << " " << s.n << " " << s.twice_sz << " " << d;
        os << "\n";
    }
    os.precision(17);
    for (auto &[k, v] : blocks_) {
        os << "block";
        for (auto &s : k) os << " " << s.n << " " << s.twice_sz;
        os << " :";
        for (cplx x : v) os << " " << x.real() << " " << x.imag();
        os << "\n";
    }
}

// ---------------------------------------------------------------------------

BlockSparseTensor contract(const BlockSparseTensor &a, const BlockSparseTensor &b,
                           const std::vector<std::pair<std::size_t, std::size_t>> &axis_pairs) {
    const std::size_t ra = a.rank(), rb = b.rank(), np = axis_pairs.size();
    std::vector<bool> used_a(ra, false), used_b(rb, false);
    for (auto &[ia, ib] : axis_pairs) {
        if (ia >= ra || ib >= rb) throw RankError("contraction axis index out of range");
        if (used_a[ia] || used_b[ib]) throw RankError("duplicate contraction axis");
        used_a[ia] = used_b[ib] = true;
        const auto &axa = a.axis(ia);
        const auto &axb = b.axis(ib);
        if (axa.dir == axb.dir) throw AxisMismatch("paired axes must have opposite directions");
        if (!axa.same_sectors(axb)) throw AxisMismatch("paired axes have different sector maps");
    }
    std::vector<std::size_t> perm_a, perm_b;
    for (std::size_t i = 0; i < ra; ++i)
        if (!used_a[i]) perm_a.push_back(i);
    const std::size_t nfa = perm_a.size();
    for (auto &[ia, ib] : axis_pairs) perm_a.push_back(ia);
    for (auto &[ia, ib] : axis_pairs) perm_b.push_back(ib);
    for (std::size_t i = 0; i < rb; ++i)
        if (!used_b[i]) perm_b.push_back(i);
    const std::size_t nfb = rb - np;

    BlockSparseTensor at = a.transposed(perm_a);
    BlockSparseTensor bt = b.transposed(perm_b);

    std::vector<AxisSignature> raxes;
    for (std::size_t i = 0; i < nfa; ++i) raxes.push_back(at.axis(i));
    for (std::size_t i = np; i < np + nfb; ++i) raxes.push_back(bt.axis(i));
    BlockSparseTensor result(std::move(raxes), a.flux() + b.flux());

    // group b blocks by contracted prefix
    std::map<BlockSparseTensor::Key, std::vector<const BlockSparseTensor::Key *>> bindex;
    for (auto &[k, v] : bt.blocks()) {
        BlockSparseTensor::Key pre(k.begin(), k.begin() + np);
        bindex[pre].push_back(&k);
    }

    struct Job {
        const BlockSparseTensor::Key *ka;
        const BlockSparseTensor::Key *kb;
    };
    std::map<BlockSparseTensor::Key, std::vector<Job>> jobs;
    for (auto &[ka, va] : at.blocks()) {
        BlockSparseTensor::Key contr(ka.begin() + nfa, ka.end());
        auto it = bindex.find(contr);
        if (it == bindex.end()) continue;
        for (const auto *kb : it->second) {
            BlockSparseTensor::Key rkey(ka.begin(), ka.begin() + nfa);
            rkey.insert(rkey.end(), kb->begin() + np, kb->end());
            jobs[rkey].push_back({&ka, kb});
        }
    }

    auto run_key = [&](const BlockSparseTensor::Key &rkey, const std::vector<Job> &js,
                       std::vector<cplx> &out) {
        auto rshape = result.block_shape(rkey);
        long rows = 1, cols = 1;
        for (std::size_t i = 0; i < nfa; ++i) rows *= rshape[i];
        for (std::size_t i = nfa; i < rshape.size(); ++i) cols *= rshape[i];
        out.assign(rows * cols, cplx{0});
        MapRow C(out.data(), rows, cols);
        for (auto &j : js) {
            const auto &da = *at.block(*j.ka);
            const auto &db = *bt.block(*j.kb);
            long K = static_cast<long>(da.size()) / rows;
            CMapRow A(da.data(), rows, K);
            CMapRow B(db.data(), K, cols);
            C.noalias() += A * B;
        }
    };

    std::vector<const BlockSparseTensor::Key *> keys;
    keys.reserve(jobs.size());
    for (auto &[k, v] : jobs) keys.push_back(&k);
    std::vector<std::vector<cplx>> outs(keys.size());
    int nthreads = std::min<int>(g_threads, static_cast<int>(keys.size()));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < keys.size(); ++i) run_key(*keys[i], jobs.at(*keys[i]), outs[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> futs;
        for (int t = 0; t < nthreads; ++t)
            futs.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next.fetch_add(1); i < keys.size(); i = next.fetch_add(1))
                    run_key(*keys[i], jobs.at(*keys[i]), outs[i]);
            }));
        for (auto &f : futs) f.get();
    }
    for (std::size_t i = 0; i < keys.size(); ++i) result.set_block(*keys[i], std::move(outs[i]));
    result.drop_zero_blocks();
    return result;
}

BlockSparseTensor add(const BlockSparseTensor &a, const BlockSparseTensor &b) {
    if (a.rank() != b.rank()) throw AxisMismatch("rank mismatch in add");
    for (std::size_t i = 0; i < a.rank(); ++i) {
        if (a.axis(i).dir != b.axis(i).dir || !a.axis(i).same_sectors(b.axis(i)))
            throw AxisMismatch("axis signatures differ in add");
    }
    if (!(a.flux() == b.flux())) throw FluxMismatch("flux mismatch in add");
    BlockSparseTensor r = a;
    for (auto &[k, v] : b.blocks()) r.add_block(k, v);
    r.drop_zero_blocks();
    return r;
}

cplx dot(const BlockSparseTensor &a, const BlockSparseTensor &b) {
    if (a.rank() != b.rank()) throw AxisMismatch("rank mismatch in dot");
    for (std::size_t i = 0; i < a.rank(); ++i)
        if (a.axis(i).dir != b.axis(i).dir || !a.axis(i).same_sectors(b.axis(i)))
            throw AxisMismatch("axis signatures differ in dot");
    if (!(a.flux() == b.flux())) throw FluxMismatch("flux mismatch in dot");
    cplx s{0};
    for (auto &[k, va] : a.blocks()) {
        const auto *vb = b.block(k);
        if (!vb) continue;
        for (std::size_t i = 0; i < va.size(); ++i) s += std::conj(va[i]) * (*vb)[i];
    }
    return s;
}

long dense_size(const BlockSparseTensor &t) {
    long p = 1;
    for (auto &ax : t.axes()) p *= ax.total_dim();
    return p;
}

std::vector<cplx> dense_embed(const BlockSparseTensor &t, long size_guard) {
    long total = dense_size(t);
    if (total > size_guard) throw SizeGuardExceeded("dense embedding too large");
    std::vector<cplx> out(total, cplx{0});
    const std::size_t rk = t.rank();
    std::vector<long> tdims(rk);
    for (std::size_t i = 0; i < rk; ++i) tdims[i] = t.axis(i).total_dim();
    std::vector<long> tstrides(rk, 1);
    for (std::size_t i = rk; i-- > 1;) tstrides[i - 1] = tstrides[i] * tdims[i];
    for (auto &[key, data] : t.blocks()) {
        auto shape = t.block_shape(key);
        std::vector<long> base(rk);
        for (std::size_t i = 0; i < rk; ++i) base[i] = t.axis(i).offset(key[i]);
        std::vector<long> idx(rk, 0);
        long off = 0;
        for (std::size_t i = 0; i < rk; ++i) off += base[i] * tstrides[i];
        for (std::size_t lin = 0; lin < data.size(); ++lin) {
            out[off] = data[lin];
            for (std::size_t i = rk; i-- > 0;) {
                ++idx[i];
                off += tstrides[i];
                if (idx[i] < shape[i]) break;
                off -= shape[i] * tstrides[i];
                idx[i] = 0;
            }
        }
    }
    return out;
}

BlockSparseTensor sparsify(const std::vector<cplx> &dense,
                           const std::vector<AxisSignature> &axes, SectorLabel flux, double tol) {
    BlockSparseTensor t(axes, flux);
    const std::size_t rk = axes.size();
    long total = 1;
    for (auto &ax : axes) total *= ax.total_dim();
    if (static_cast<long>(dense.size()) != total)
        throw RankError("dense array size does not match axes");
    std::vector<long> tdims(rk), tstrides(rk, 1);
    for (std::size_t i = 0; i < rk; ++i) tdims[i] = axes[i].total_dim();
    for (std::size_t i = rk; i-- > 1;) tstrides[i - 1] = tstrides[i] * tdims[i];

    // enumerate all sector keys (cartesian product)
    std::vector<BlockSparseTensor::Key> keys = {{}};
    for (auto &ax : axes) {
        std::vector<BlockSparseTensor::Key> next;
        for (auto &k : keys)
            for (auto &[s, d] : ax.sectors) {
                auto nk = k;
                nk.push_back(s);
                next.push_back(std::move(nk));
            }
        keys = std::move(next);
    }
    std::vector<bool> covered(dense.size(), false);
    for (auto &key : keys) {
        if (!t.key_allowed(key)) continue;
        auto shape = t.block_shape(key);
        std::vector<long> base(rk);
        for (std::size_t i = 0; i < rk; ++i) base[i] = axes[i].offset(key[i]);
        long bsize = prod(shape);
        std::vector<cplx> data(bsize);
        std::vector<long> idx(rk, 0);
        long off = 0;
        for (std::size_t i = 0; i < rk; ++i) off += base[i] * tstrides[i];
        for (long lin = 0; lin < bsize; ++lin) {
            data[lin] = dense[off];
            covered[off] = true;
            for (std::size_t i = rk; i-- > 0;) {
                ++idx[i];
                off += tstrides[i];
                if (idx[i] < shape[i]) break;
                off -= shape[i] * tstrides[i];
                idx[i] = 0;
            }
        }
        t.set_block(key, std::move(data));
    }
    for (std::size_t i = 0; i < dense.size(); ++i)
        if (!covered[i] && std::abs(dense[i]) > tol)
            throw SectorViolation("dense entry outside allowed sectors");
    BlockSparseTensor out = t;
    out.drop_zero_blocks();
    return out;
}

SvdResult svd_truncate(const BlockSparseTensor &t, const std::vector<std::size_t> &left_axes,
                       const CompressionPolicy &policy) {
    policy.validate();
    if (t.empty()) throw EmptyTensor("svd_truncate on empty tensor");
    const std::size_t rk = t.rank(), nl = left_axes.size();
    if (nl == 0 || nl >= rk) throw RankError("split must leave both groups non-empty");
    std::vector<bool> used(rk, false);
    std::vector<std::size_t> perm = left_axes;
    for (auto i : left_axes) {
        if (i >= rk || used[i]) throw RankError("bad split axis list");
        used[i] = true;
    }
    for (std::size_t i = 0; i < rk; ++i)
        if (!used[i]) perm.push_back(i);
    BlockSparseTensor tt = t.transposed(perm);

    auto group_charge = [&](const BlockSparseTensor::Key &key, std::size_t lo, std::size_t hi) {
        SectorLabel q{0, 0};
        for (std::size_t i = lo; i < hi; ++i)
            q += (tt.axis(i).dir == AxisDir::In) ? key[i] : -key[i];
        return q;
    };

    struct SectorData {
        std::map<BlockSparseTensor::Key, long> row_off, col_off; // tuple -> offset
        long rows = 0, cols = 0;
        Eigen::MatrixXcd mat;
    };
    std::map<SectorLabel, SectorData> sectors;
    for (auto &[key, data] : tt.blocks()) {
        SectorLabel rho = group_charge(key, 0, nl);
        auto &sd = sectors[rho];
        BlockSparseTensor::Key rkey(key.begin(), key.begin() + nl);
        BlockSparseTensor::Key ckey(key.begin() + nl, key.end());
        auto shape = tt.block_shape(key);
        long rdim = 1, cdim = 1;
        for (std::size_t i = 0; i < nl; ++i) rdim *= shape[i];
        for (std::size_t i = nl; i < rk; ++i) cdim *= shape[i];
        if (!sd.row_off.count(rkey)) {
            sd.row_off[rkey] = -rdim; // fill later; store dim temporarily as negative
        }
        if (!sd.col_off.count(ckey)) sd.col_off[ckey] = -cdim;
    }
    for (auto &[rho, sd] : sectors) {
        long off = 0;
        for (auto &[k, v] : sd.row_off) {
            long d = -v;
            v = off;
            off += d;
        }
        sd.rows = off;
        off = 0;
        for (auto &[k, v] : sd.col_off) {
            long d = -v;
            v = off;
            off += d;
        }
        sd.cols = off;
        sd.mat = Eigen::MatrixXcd::Zero(sd.rows, sd.cols);
    }
    for (auto &[key, data] : tt.blocks()) {
        SectorLabel rho = group_charge(key, 0, nl);
        auto &sd = sectors.at(rho);
        BlockSparseTensor::Key rkey(key.begin(), key.begin() + nl);
        BlockSparseTensor::Key ckey(key.begin() + nl, key.end());
        auto shape = tt.block_shape(key);
        long rdim = 1, cdim = 1;
        for (std::size_t i = 0; i < nl; ++i) rdim *= shape[i];
        for (std::size_t i = nl; i < rk; ++i) cdim *= shape[i];
        CMapRow M(data.data(), rdim, cdim);
        sd.mat.block(sd.row_off.at(rkey), sd.col_off.at(ckey), rdim, cdim) = M;
    }

    struct Sval {
        double v;
        SectorLabel rho;
        long idx;
    };
    // JacobiSVD: BDCSVD misfactorizes matrices with highly degenerate spectra
    std::map<SectorLabel, Eigen::JacobiSVD<Eigen::MatrixXcd>> svds;
    std::vector<Sval> all;
    double total2 = 0;
    for (auto &[rho, sd] : sectors) {
        auto &svd = svds[rho];
        svd.compute(sd.mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto &sv = svd.singularValues();
        for (long i = 0; i < sv.size(); ++i) {
            all.push_back({sv[i], rho, i});
            total2 += sv[i] * sv[i];
        }
    }
    std::sort(all.begin(), all.end(), [](const Sval &a, const Sval &b) {
        if (a.v != b.v) return a.v > b.v;
        if (!(a.rho == b.rho)) return a.rho < b.rho;
        return a.idx < b.idx;
    });
    double smax = all.empty() ? 0.0 : all.front().v;
    // values at the numerical noise floor count as exact rank deficiency
    const double threshold = std::max(policy.cutoff, 1e-14);
    long keep = 0;
    for (auto &s : all) {
        if (smax > 0 && s.v <= threshold * smax) break;
        if (keep >= policy.max_bond) break;
        ++keep;
    }
    if (keep == 0 && !all.empty()) keep = 1; // degenerate all-zero input
    std::map<SectorLabel, long> kept_per;
    double kept2 = 0;
    double smallest = 0;
    for (long i = 0; i < keep; ++i) {
        kept_per[all[i].rho] = std::max(kept_per[all[i].rho], all[i].idx + 1);
        kept2 += all[i].v * all[i].v;
        smallest = all[i].v;
    }

    SvdResult res;
    res.report.kept = keep;
    res.report.smallest_kept = smallest;
    res.report.discarded_weight = (total2 > 0) ? std::max(0.0, 1.0 - kept2 / total2) : 0.0;

    AxisSignature bond_out{AxisDir::Out, {}}, bond_in{AxisDir::In, {}};
    for (auto &[rho, k] : kept_per) {
        bond_out.sectors[rho] = k;
        bond_in.sectors[rho] = k;
    }

    std::vector<AxisSignature> uaxes;
    for (std::size_t i = 0; i < nl; ++i) uaxes.push_back(tt.axis(i));
    uaxes.push_back(bond_out);
    res.u = BlockSparseTensor(uaxes, SectorLabel{0, 0});

    std::vector<AxisSignature> vaxes;
    vaxes.push_back(bond_in);
    for (std::size_t i = nl; i < rk; ++i) vaxes.push_back(tt.axis(i));
    res.v = BlockSparseTensor(vaxes, t.flux());

    for (auto &[rho, k] : kept_per) {
        auto &sd = sectors.at(rho);
        auto &svd = svds.at(rho);
        const auto &sv = svd.singularValues();
        std::vector<double> svals(k);
        for (long i = 0; i < k; ++i) svals[i] = sv[i];
        res.s[rho] = std::move(svals);
        Eigen::MatrixXcd U = svd.matrixU().leftCols(k);
        Eigen::MatrixXcd Vh = svd.matrixV().leftCols(k).adjoint();
        for (auto &[rkey, roff] : sd.row_off) {
            long rdim = 1;
            for (std::size_t i = 0; i < nl; ++i) rdim *= tt.axis(i).dim(rkey[i]);
            std::vector<cplx> blk(rdim * k);
            MapRow(blk.data(), rdim, k) = U.block(roff, 0, rdim, k);
            BlockSparseTensor::Key ukey = rkey;
            ukey.push_back(rho);
            res.u.set_block(ukey, std::move(blk));
        }
        for (auto &[ckey, coff] : sd.col_off) {
            long cdim = 1;
            for (std::size_t i = nl; i < rk; ++i) cdim *= tt.axis(i).dim(ckey[i - nl]);
            std::vector<cplx> blk(k * cdim);
            MapRow(blk.data(), k, cdim) = Vh.block(0, coff, k, cdim);
            BlockSparseTensor::Key vkey;
            vkey.push_back(rho);
            vkey.insert(vkey.end(), ckey.begin(), ckey.end());
            res.v.set_block(vkey, std::move(blk));
        }
    }
    res.u.drop_zero_blocks();
    res.v.drop_zero_blocks();
    return res;
}

BlockSparseTensor absorb_bond_right(const BlockSparseTensor &u,
                                    const std::map<SectorLabel, std::vector<double>> &s) {
    BlockSparseTensor r = u;
    const std::size_t last = u.rank() - 1;
    BlockSparseTensor out(u.axes(), u.flux());
    for (auto &[key, data] : r.blocks()) {
        auto it = s.find(key[last]);
        if (it == s.end()) continue;
        const auto &sv = it->second;
        auto shape = r.block_shape(key);
        long cols = shape[last];
        long rows = static_cast<long>(data.size()) / cols;
        std::vector<cplx> d = data;
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) d[i * cols + j] *= sv[j];
        out.set_block(key, std::move(d));
    }
    return out;
}

BlockSparseTensor absorb_bond_left(const std::map<SectorLabel, std::vector<double>> &s,
                                   const BlockSparseTensor &v) {
    BlockSparseTensor out(v.axes(), v.flux());
    for (auto &[key, data] : v.blocks()) {
        auto it = s.find(key[0]);
        if (it == s.end()) continue;
        const auto &sv = it->second;
        auto shape = v.block_shape(key);
        long rows = shape[0];
        long cols = static_cast<long>(data.size()) / rows;
        std::vector<cplx> d = data;
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) d[i * cols + j] *= sv[i];
        out.set_block(key, std::move(d));
    }
    return out;
}

} // namespace fermips
