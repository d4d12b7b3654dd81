#include "fermips/mpo.hpp"

#include <array>

namespace fermips {

namespace {

using Mat4 = std::array<cplx, 16>;

Mat4 identity4() {
    Mat4 m{};
    for (int i = 0; i < 4; ++i) m[i * 4 + i] = 1.0;
    return m;
}

// full-site fermion parity diag(1,-1,-1,1)
Mat4 parity4() {
    Mat4 m{};
    m[0] = 1.0;
    m[5] = -1.0;
    m[10] = -1.0;
    m[15] = 1.0;
    return m;
}

// Local ladder matrices in the {empty, up, dn, updn} basis with
// |updn> = c+_up c+_dn |0> and the up mode ordered before the dn mode;
// the within-site Jordan-Wigner sign is folded in (c+_dn picks up -1 on
// |up> -> |updn>).
Mat4 ladder4(Spin spin, bool dagger) {
    Mat4 m{};
    auto at = [&m](int row, int col) -> cplx & { return m[row * 4 + col]; };
    if (spin == Spin::Up) {
        if (dagger) {
            at(1, 0) = 1.0;
            at(3, 2) = 1.0;
        } else {
            at(0, 1) = 1.0;
            at(2, 3) = 1.0;
        }
    } else {
        if (dagger) {
            at(2, 0) = 1.0;
            at(3, 1) = -1.0;
        } else {
            at(0, 2) = 1.0;
            at(1, 3) = -1.0;
        }
    }
    return m;
}

Mat4 matmul(const Mat4 &a, const Mat4 &b) {
    Mat4 m{};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            if (a[i * 4 + k] == cplx{0}) continue;
            for (int j = 0; j < 4; ++j) m[i * 4 + j] += a[i * 4 + k] * b[k * 4 + j];
        }
    return m;
}

AxisSignature bond_axis(AxisDir dir, const std::map<SectorLabel, long> &sectors) {
    return AxisSignature{dir, sectors};
}

void validate_mpo_chain(const std::vector<BlockSparseTensor> &sites, SectorLabel delta) {
    if (sites.empty()) throw InvalidSpec("MPO needs at least one site");
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const auto &t = sites[i];
        if (t.rank() != 4) throw RankError("MPO site tensor must be rank 4");
        if (t.axis(0).dir != AxisDir::In || t.axis(1).dir != AxisDir::In ||
            t.axis(2).dir != AxisDir::Out || t.axis(3).dir != AxisDir::Out)
            throw AxisMismatch("MPO site axis directions must be (in, in, out, out)");
        if (!(t.flux() == SectorLabel{0, 0})) throw FluxMismatch("MPO site flux must be zero");
        if (i > 0 && !sites[i - 1].axis(3).same_sectors(t.axis(0)))
            throw AxisMismatch("adjacent MPO bond signatures do not match");
    }
    if (!sites.front().axis(0).same_sectors({AxisDir::In, {{{0, 0}, 1}}}))
        throw AxisMismatch("left MPO boundary must carry the vacuum sector");
    if (!sites.back().axis(3).same_sectors({AxisDir::Out, {{delta, 1}}}))
        throw AxisMismatch("right MPO boundary must carry the operator delta");
}

// two-pass SVD compression of a rank-4 chain, mirroring the MPS compress
std::vector<BlockSparseTensor> compress_mpo_chain(std::vector<BlockSparseTensor> sites,
                                                  double cutoff) {
    const int L = static_cast<int>(sites.size());
    for (auto &s : sites)
        if (s.empty()) return sites; // zero operator: nothing to compress
    for (int i = L - 1; i > 0; --i) {
        auto res = svd_truncate(sites[i], {0}, unlimited_policy());
        sites[i] = res.v;
        auto us = absorb_bond_right(res.u, res.s);
        sites[i - 1] = contract(sites[i - 1], us, {{3, 0}});
    }
    CompressionPolicy policy = unlimited_policy();
    policy.cutoff = cutoff;
    for (int i = 0; i + 1 < L; ++i) {
        auto res = svd_truncate(sites[i], {0, 1, 2}, policy);
        sites[i] = res.u;
        auto sv = absorb_bond_left(res.s, res.v);
        sites[i + 1] = contract(sv, sites[i + 1], {{1, 0}});
    }
    return sites;
}

} // namespace

MPOOperator::MPOOperator(std::vector<BlockSparseTensor> sites, SectorLabel delta)
    : sites_(std::move(sites)), delta_(delta) {
    validate_mpo_chain(sites_, delta_);
}

std::vector<long> MPOOperator::bond_dims() const {
    std::vector<long> dims;
    dims.push_back(sites_.front().axis(0).total_dim());
    for (auto &t : sites_) dims.push_back(t.axis(3).total_dim());
    return dims;
}

MPOOperator MPOOperator::scaled(cplx a) const {
    MPOOperator out = *this;
    out.sites_[0] = out.sites_[0].scaled(a);
    return out;
}

MPOOperator build_mpo(const FermionOperatorSum &op, double cutoff) {
    const int L = op.system_size();
    if (L < 1) throw InvalidSpec("MPO needs a positive system size");
    SectorLabel delta = op.uniform_delta();
    std::vector<const OperatorTerm *> terms;
    for (const auto &t : op.terms())
        if (t.coefficient != cplx{0}) terms.push_back(&t);
    if (terms.empty()) throw InvalidSpec("cannot build an MPO from an empty operator");
    const int nterms = static_cast<int>(terms.size());

    // per-term site matrices and bond sector labels
    std::vector<std::vector<Mat4>> mats(nterms, std::vector<Mat4>(L, identity4()));
    std::vector<std::vector<SectorLabel>> bond(nterms,
                                               std::vector<SectorLabel>(L + 1, SectorLabel{0, 0}));
    const Mat4 par = parity4();
    for (int t = 0; t < nterms; ++t) {
        const auto &term = *terms[t];
        std::vector<SectorLabel> site_delta(L, SectorLabel{0, 0});
        for (const auto &f : term.factors) {
            if (f.site < 0 || f.site >= L) throw OutOfRange("ladder factor site outside system");
            for (int s = 0; s < f.site; ++s) mats[t][s] = matmul(mats[t][s], par);
            mats[t][f.site] = matmul(mats[t][f.site], ladder4(f.spin, f.dagger));
            site_delta[f.site] += f.delta();
        }
        for (auto &x : mats[t][0]) x *= term.coefficient;
        for (int s = 0; s < L; ++s) bond[t][s + 1] = bond[t][s] + site_delta[s];
    }

    // direct-sum offsets within each interior bond sector
    std::vector<AxisSignature> bonds(L + 1);
    std::vector<std::vector<long>> off(nterms, std::vector<long>(L + 1, 0));
    bonds[0] = {AxisDir::Out, {{{0, 0}, 1}}};
    bonds[L] = {AxisDir::Out, {{delta, 1}}};
    for (int j = 1; j < L; ++j) {
        std::map<SectorLabel, long> count;
        for (int t = 0; t < nterms; ++t) off[t][j] = count[bond[t][j]]++;
        bonds[j] = bond_axis(AxisDir::Out, count);
    }

    std::vector<BlockSparseTensor> sites;
    for (int s = 0; s < L; ++s) {
        BlockSparseTensor site({bonds[s].flipped(), physical_axis(),
                                physical_axis().flipped(), bonds[s + 1]},
                               SectorLabel{0, 0});
        std::map<BlockSparseTensor::Key, std::vector<cplx>> acc;
        for (int t = 0; t < nterms; ++t) {
            for (int po = 0; po < 4; ++po)
                for (int pi = 0; pi < 4; ++pi) {
                    cplx v = mats[t][s][po * 4 + pi];
                    if (v == cplx{0}) continue;
                    BlockSparseTensor::Key key = {bond[t][s], local_sector(po), local_sector(pi),
                                                  bond[t][s + 1]};
                    auto shape = site.block_shape(key);
                    auto &data = acc[key];
                    if (data.empty()) data.assign(shape[0] * shape[3], cplx{0});
                    data[off[t][s] * shape[3] + off[t][s + 1]] += v;
                }
        }
        for (auto &[k, d] : acc) site.set_block(k, std::move(d));
        site.drop_zero_blocks();
        sites.push_back(std::move(site));
    }
    return MPOOperator(compress_mpo_chain(std::move(sites), cutoff), delta);
}

MPOOperator add_mpo(const MPOOperator &a, cplx alpha, const MPOOperator &b, cplx beta,
                    double cutoff) {
    const int L = a.length();
    if (b.length() != L) throw SystemSizeMismatch("add_mpo length mismatch");
    if (!(a.delta() == b.delta())) throw SectorMismatch("add_mpo delta mismatch");
    if (L == 1)
        return MPOOperator({add(a.site(0).scaled(alpha), b.site(0).scaled(beta))}, a.delta());
    std::vector<BlockSparseTensor> sites;
    for (int i = 0; i < L; ++i) {
        const auto &ta = a.site(i);
        const auto &tb = b.site(i);
        bool sum_l = (i > 0), sum_r = (i < L - 1);
        AxisSignature left = ta.axis(0), right = ta.axis(3);
        if (sum_l)
            for (auto &[s, d] : tb.axis(0).sectors) left.sectors[s] += d;
        if (sum_r)
            for (auto &[s, d] : tb.axis(3).sectors) right.sectors[s] += d;
        BlockSparseTensor t({left, physical_axis(), physical_axis().flipped(), right},
                            SectorLabel{0, 0});
        cplx sa = (i == 0) ? alpha : cplx(1.0);
        cplx sb = (i == 0) ? beta : cplx(1.0);
        auto scatter = [&t](const BlockSparseTensor &src, const BlockSparseTensor::Key &key,
                            long off_l, long off_r, cplx scale) {
            auto shape = t.block_shape(key);
            const auto *hit = t.block(key);
            std::vector<cplx> data =
                hit ? *hit : std::vector<cplx>(shape[0] * shape[3], cplx{0});
            auto ss = src.block_shape(key);
            const auto &d = *src.block(key);
            for (long l = 0; l < ss[0]; ++l)
                for (long r = 0; r < ss[3]; ++r)
                    data[(l + off_l) * shape[3] + r + off_r] += scale * d[l * ss[3] + r];
            t.set_block(key, std::move(data));
        };
        for (auto &[k, d] : ta.blocks()) scatter(ta, k, 0, 0, sa);
        for (auto &[k, d] : tb.blocks())
            scatter(tb, k, sum_l ? ta.axis(0).dim(k[0]) : 0, sum_r ? ta.axis(3).dim(k[3]) : 0,
                    sb);
        t.drop_zero_blocks();
        sites.push_back(std::move(t));
    }
    return MPOOperator(compress_mpo_chain(std::move(sites), cutoff), a.delta());
}

cplx expectation(const MPSWavefunction &bra, const MPOOperator &op, const MPSWavefunction &ket) {
    const int L = op.length();
    if (bra.length() != L || ket.length() != L)
        throw SystemSizeMismatch("operator/state length mismatch");
    if (!(bra.global_sector() == ket.global_sector() + op.delta())) return cplx{0};
    auto e = mpo_left_boundary();
    for (int i = 0; i < L; ++i) {
        e = mpo_env_step_left(e, bra.site(i), op.site(i), ket.site(i));
        if (e.empty()) return cplx{0};
    }
    cplx v{0};
    for (auto &[k, d] : e.blocks()) v += d[0];
    return v;
}

cplx expectation(const MPSWavefunction &psi, const MPOOperator &op) {
    return expectation(psi, op, psi);
}

MPSWavefunction apply_exact(const MPOOperator &op, const MPSWavefunction &psi,
                            const CompressionPolicy &policy) {
    const int L = op.length();
    if (psi.length() != L) throw SystemSizeMismatch("operator/state length mismatch");
    std::vector<BlockSparseTensor> sites;
    for (int i = 0; i < L; ++i) {
        auto t = contract(op.site(i), psi.site(i), {{2, 1}}); // [wl, p_out, wr, al, ar]
        t = t.transposed({0, 3, 1, 2, 4});                    // [wl, al, p_out, wr, ar]
        t = t.fused(0, 2).fused(2, 2);                        // [L, p_out, R]
        sites.push_back(std::move(t));
    }
    MPSWavefunction direct(std::move(sites), psi.global_sector() + op.delta(),
                           unlimited_policy());
    return compress(direct, policy).first;
}

BlockSparseTensor mpo_left_boundary() {
    BlockSparseTensor e({{AxisDir::In, {{{0, 0}, 1}}},
                         {AxisDir::Out, {{{0, 0}, 1}}},
                         {AxisDir::Out, {{{0, 0}, 1}}}},
                        SectorLabel{0, 0});
    e.set_block({{0, 0}, {0, 0}, {0, 0}}, {cplx(1.0)});
    return e;
}

BlockSparseTensor mpo_right_boundary(SectorLabel bra_sector, SectorLabel delta,
                                     SectorLabel ket_sector) {
    BlockSparseTensor e({{AxisDir::Out, {{bra_sector, 1}}},
                         {AxisDir::In, {{delta, 1}}},
                         {AxisDir::In, {{ket_sector, 1}}}},
                        SectorLabel{0, 0});
    e.set_block({bra_sector, delta, ket_sector}, {cplx(1.0)});
    return e;
}

BlockSparseTensor mpo_env_step_left(const BlockSparseTensor &env, const BlockSparseTensor &bra,
                                    const BlockSparseTensor &w, const BlockSparseTensor &ket) {
    auto tmp = contract(env, bra.conj(), {{0, 0}});
    auto tmp2 = contract(tmp, w, {{0, 0}, {2, 1}});
    return contract(tmp2, ket, {{0, 0}, {2, 1}}); // [braR (in), wR (out), ketR (out)]
}

BlockSparseTensor mpo_env_step_right(const BlockSparseTensor &env, const BlockSparseTensor &bra,
                                     const BlockSparseTensor &w, const BlockSparseTensor &ket) {
    auto t = contract(ket, env, {{2, 2}});         // [ketL, p, bra, w]
    t = contract(t, w, {{1, 2}, {3, 3}});          // [ketL, bra, wl, p_out]
    t = contract(t, bra.conj(), {{1, 2}, {3, 1}}); // [ketL, wl, braL]
    return t.transposed({2, 1, 0});                // [braL (out), wL (in), ketL (in)]
}

MPSWavefunction apply_fit(const MPOOperator &op, const MPSWavefunction &psi,
                          const CompressionPolicy &policy, int n_sweeps,
                          const MPSWavefunction *guess) {
    policy.validate();
    const int L = op.length();
    if (psi.length() != L) throw SystemSizeMismatch("operator/state length mismatch");
    SectorLabel out_sector = psi.global_sector() + op.delta();
    if (L == 1) return apply_exact(op, psi, policy);

    MPSWavefunction phi;
    if (guess) {
        if (guess->length() != L || !(guess->global_sector() == out_sector))
            throw SectorMismatch("fitting guess has the wrong length or sector");
        phi = compress(*guess, policy).first;
    } else if (op.delta() == SectorLabel{0, 0}) {
        phi = compress(psi, policy).first;
    } else {
        phi = apply_exact(op, psi, policy);
    }

    std::vector<BlockSparseTensor> sites(phi.site_tensors().begin(), phi.site_tensors().end());

    // renv[j] covers sites j..L-1, lenv[i] covers sites 0..i-1
    std::vector<BlockSparseTensor> renv(L + 1), lenv(L + 1);
    renv[L] = mpo_right_boundary(out_sector, op.delta(), psi.global_sector());
    for (int j = L - 1; j >= 2; --j)
        renv[j] = mpo_env_step_right(renv[j + 1], sites[j], op.site(j), psi.site(j));
    lenv[0] = mpo_left_boundary();

    // two-site tensor of op|psi> projected into the fixed environments
    auto local_b = [&](int i) {
        auto t = contract(lenv[i], psi.site(i), {{2, 0}});   // [phi, w, p, psiR]
        t = contract(t, op.site(i), {{1, 0}, {2, 2}});       // [phi, psiR, p_out, wr]
        t = contract(t, psi.site(i + 1), {{1, 0}});          // [phi, p_i, wr, p, psiR]
        t = contract(t, op.site(i + 1), {{2, 0}, {3, 2}});   // [phi, p_i, psiR, p_out, wr]
        return contract(t, renv[i + 2], {{2, 2}, {4, 1}});   // [phiL, p_i, p_i+1, phiR]
    };

    for (int sweep = 0; sweep < n_sweeps; ++sweep) {
        for (int i = 0; i + 1 < L; ++i) {
            auto b = local_b(i);
            if (b.empty()) return apply_exact(op, psi, policy);
            auto res = svd_truncate(b, {0, 1}, policy);
            sites[i] = res.u;
            sites[i + 1] = absorb_bond_left(res.s, res.v);
            lenv[i + 1] = mpo_env_step_left(lenv[i], sites[i], op.site(i), psi.site(i));
        }
        for (int i = L - 2; i >= 0; --i) {
            auto b = local_b(i);
            if (b.empty()) return apply_exact(op, psi, policy);
            auto res = svd_truncate(b, {0, 1}, policy);
            sites[i] = absorb_bond_right(res.u, res.s);
            sites[i + 1] = res.v;
            renv[i + 1] = mpo_env_step_right(renv[i + 2], sites[i + 1], op.site(i + 1),
                                             psi.site(i + 1));
        }
    }
    return MPSWavefunction(std::move(sites), out_sector, policy, 0);
}

} // namespace fermips
