#include <doctest.h>

#include <random>
#include <sstream>

#include "fermips/block_tensor.hpp"
#include "test_util.hpp"

using namespace fermips;
using testutil::dense_singular_values;
using testutil::dense_tensordot;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

AxisSignature bond_axis(AxisDir dir, std::initializer_list<std::pair<SectorLabel, long>> secs) {
    AxisSignature ax{dir, {}};
    for (auto &[s, d] : secs) ax.sectors[s] = d;
    return ax;
}

BlockSparseTensor identity_on(const AxisSignature &ax) {
    // rank-2 identity pairing ax (flipped) with ax
    BlockSparseTensor id({ax.flipped(), ax}, SectorLabel{0, 0});
    for (auto &[s, d] : ax.sectors) {
        std::vector<cplx> blk(d * d, cplx{0});
        for (long i = 0; i < d; ++i) blk[i * d + i] = 1.0;
        id.set_block({s, s}, std::move(blk));
    }
    return id;
}

} // namespace

TEST_CASE("contract with identity returns the tensor") {
    std::mt19937 rng(7);
    auto ax0 = bond_axis(AxisDir::In, {{{0, 0}, 2}, {{1, 1}, 3}});
    auto ax1 = bond_axis(AxisDir::Out, {{{0, 0}, 2}, {{1, 1}, 3}, {{2, 0}, 1}});
    auto t = random_tensor({ax0, ax1}, SectorLabel{0, 0}, rng);
    auto id = identity_on(ax1.flipped()); // pairs with t's outgoing axis
    // id axes: (In flipped->Out? construct to pair axis 1)
    auto id2 = identity_on(ax1);
    auto r = contract(t, id2, {{1, 0}});
    REQUIRE(r.rank() == 2);
    auto d1 = dense_embed(t);
    auto d2 = dense_embed(r);
    CHECK(max_abs_diff(d1, d2) < 1e-14);
}

TEST_CASE("contract adds fluxes of single-block tensors") {
    auto axa = bond_axis(AxisDir::In, {{{1, 1}, 1}});
    auto axm = bond_axis(AxisDir::Out, {{{0, 0}, 1}});
    auto axm2 = bond_axis(AxisDir::In, {{{0, 0}, 1}});
    BlockSparseTensor a({axa, axm}, SectorLabel{1, 1});
    a.set_block({{1, 1}, {0, 0}}, {cplx(2.0, 0)});
    auto axb = bond_axis(AxisDir::In, {{{1, -1}, 1}});
    BlockSparseTensor b({axm2, axb}, SectorLabel{1, -1});
    b.set_block({{0, 0}, {1, -1}}, {cplx(3.0, 0)});
    auto r = contract(a, b, {{1, 0}});
    CHECK(r.flux() == SectorLabel{2, 0});
    CHECK(std::abs((*r.block({{1, 1}, {1, -1}}))[0] - cplx(6.0, 0)) < 1e-15);
}

TEST_CASE("contract equals dense matrix product on random tensors") {
    std::mt19937 rng(11);
    auto mid = bond_axis(AxisDir::Out, {{{0, 0}, 2}, {{1, 1}, 2}, {{1, -1}, 1}});
    auto left = bond_axis(AxisDir::In, {{{0, 0}, 3}, {{1, 1}, 1}});
    auto right = bond_axis(AxisDir::Out, {{{1, 1}, 2}, {{2, 0}, 2}});
    for (int rep = 0; rep < 20; ++rep) {
        auto a = random_tensor({left, mid}, SectorLabel{-1, -1}, rng, 0.8);
        auto b = random_tensor({mid.flipped(), right}, SectorLabel{-1, -1}, rng, 0.8);
        if (a.empty() || b.empty()) continue;
        auto r = contract(a, b, {{1, 0}});
        auto dref = dense_tensordot(dense_embed(a), {left.total_dim(), mid.total_dim()},
                                    dense_embed(b), {mid.total_dim(), right.total_dim()}, {1}, {0});
        CHECK(max_abs_diff(dense_embed(r), dref) < 1e-12);
    }
}

TEST_CASE("contract rejects mismatched axes") {
    auto ax = bond_axis(AxisDir::In, {{{0, 0}, 2}});
    auto ax2 = bond_axis(AxisDir::In, {{{0, 0}, 3}});
    BlockSparseTensor a({ax, ax.flipped()}, SectorLabel{0, 0});
    BlockSparseTensor b({ax2, ax2.flipped()}, SectorLabel{0, 0});
    CHECK_THROWS_AS(contract(a, b, {{1, 0}}), AxisMismatch);
    CHECK_THROWS_AS(contract(a, b, {{5, 0}}), RankError);
    BlockSparseTensor c({ax, ax.flipped()}, SectorLabel{0, 0});
    CHECK_THROWS_AS(contract(a, c, {{1, 1}}), AxisMismatch); // same direction
}

TEST_CASE("add matches dense sum and handles trivial cases") {
    std::mt19937 rng(3);
    auto ax0 = bond_axis(AxisDir::In, {{{0, 0}, 2}, {{1, 1}, 2}});
    auto ax1 = bond_axis(AxisDir::Out, {{{0, 0}, 1}, {{1, 1}, 2}});
    auto t = random_tensor({ax0, ax1}, SectorLabel{0, 0}, rng);
    BlockSparseTensor zero({ax0, ax1}, SectorLabel{0, 0});
    auto r = add(t, zero);
    CHECK(max_abs_diff(dense_embed(r), dense_embed(t)) < 1e-15);
    auto n = add(t, t.scaled(-1.0));
    CHECK(n.norm() < 1e-14);
    for (int rep = 0; rep < 10; ++rep) {
        auto a = random_tensor({ax0, ax1}, SectorLabel{0, 0}, rng, 0.6);
        auto b = random_tensor({ax0, ax1}, SectorLabel{0, 0}, rng, 0.6);
        auto s = add(a, b);
        auto da = dense_embed(a), db = dense_embed(b);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += db[i];
        CHECK(max_abs_diff(dense_embed(s), da) < 1e-14);
    }
    BlockSparseTensor fluxed({ax0, ax1}, SectorLabel{1, 1});
    CHECK_THROWS_AS(add(t, fluxed), FluxMismatch);
}

TEST_CASE("dense_embed basics and sparsify round trip") {
    auto ax = bond_axis(AxisDir::In, {{{1, 1}, 2}});
    auto axo = bond_axis(AxisDir::Out, {{{1, 1}, 2}});
    BlockSparseTensor t({ax, axo}, SectorLabel{0, 0});
    t.set_block({{1, 1}, {1, 1}}, {1.0, 2.0, 3.0, 4.0});
    auto d = dense_embed(t);
    CHECK(d.size() == 4);
    CHECK(std::abs(d[2] - cplx(3.0, 0)) < 1e-15);

    BlockSparseTensor empty({ax, axo}, SectorLabel{0, 0});
    auto dz = dense_embed(empty);
    for (auto x : dz) CHECK(std::abs(x) == 0.0);

    std::mt19937 rng(19);
    auto ax0 = bond_axis(AxisDir::In, {{{0, 0}, 2}, {{1, 1}, 3}, {{2, 0}, 1}});
    auto ax1 = bond_axis(AxisDir::Out, {{{0, 0}, 2}, {{1, 1}, 3}, {{2, 0}, 1}});
    auto r = random_tensor({ax0, ax1}, SectorLabel{0, 0}, rng);
    auto rt = sparsify(dense_embed(r), {ax0, ax1}, SectorLabel{0, 0});
    CHECK(max_abs_diff(dense_embed(rt), dense_embed(r)) < 1e-15);

    std::vector<cplx> bad(dense_embed(r));
    bad[2] += 0.5; // (0,0) row against a (1,1) column: forbidden by flux
    CHECK_THROWS_AS(sparsify(bad, {ax0, ax1}, SectorLabel{0, 0}), SectorViolation);
}

TEST_CASE("svd_truncate rank-1 outer product") {
    auto ax0 = bond_axis(AxisDir::In, {{{1, 1}, 3}});
    auto ax1 = bond_axis(AxisDir::Out, {{{1, 1}, 4}});
    BlockSparseTensor t({ax0, ax1}, SectorLabel{0, 0});
    std::vector<cplx> blk(12);
    for (long i = 0; i < 3; ++i)
        for (long j = 0; j < 4; ++j) blk[i * 4 + j] = double(i + 1) * double(j + 1);
    t.set_block({{1, 1}, {1, 1}}, blk);
    auto res = svd_truncate(t, {0}, CompressionPolicy{16, 0.0});
    CHECK(res.report.kept == 1);
    CHECK(res.report.discarded_weight < 1e-12);
}

TEST_CASE("svd_truncate symmetric tie at max_bond keeps one value, weight 0.5") {
    auto ax0 = bond_axis(AxisDir::In, {{{1, 1}, 2}});
    auto ax1 = bond_axis(AxisDir::Out, {{{1, 1}, 2}});
    BlockSparseTensor t({ax0, ax1}, SectorLabel{0, 0});
    double inv = 1.0 / std::sqrt(2.0);
    t.set_block({{1, 1}, {1, 1}}, {inv, 0.0, 0.0, inv});
    auto res = svd_truncate(t, {0}, CompressionPolicy{1, 0.0});
    CHECK(res.report.kept == 1);
    CHECK(res.report.discarded_weight == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("svd_truncate matches dense SVD on random block matrices") {
    std::mt19937 rng(23);
    auto ax0 = bond_axis(AxisDir::In, {{{0, 0}, 3}, {{1, 1}, 4}, {{2, 0}, 2}});
    auto ax1 = bond_axis(AxisDir::Out, {{{0, 0}, 3}, {{1, 1}, 4}, {{2, 0}, 2}});
    for (int rep = 0; rep < 25; ++rep) {
        auto t = random_tensor({ax0, ax1}, SectorLabel{0, 0}, rng);
        auto res = svd_truncate(t, {0}, CompressionPolicy{5, 0.0});
        auto dsv = dense_singular_values(dense_embed(t), ax0.total_dim(), ax1.total_dim());
        double tot = 0, kept = 0;
        for (std::size_t i = 0; i < dsv.size(); ++i) {
            tot += dsv[i] * dsv[i];
            if (i < 5) kept += dsv[i] * dsv[i];
        }
        double want = 1.0 - kept / tot;
        CHECK(std::abs(res.report.discarded_weight - want) < 1e-12);
        // kept values equal the top-5 dense singular values
        std::vector<double> got;
        for (auto &[rho, sv] : res.s) got.insert(got.end(), sv.begin(), sv.end());
        std::sort(got.rbegin(), got.rend());
        REQUIRE(got.size() == 5);
        for (int i = 0; i < 5; ++i) CHECK(got[i] == doctest::Approx(dsv[i]).epsilon(1e-12));
    }
}

TEST_CASE("svd_truncate reconstruction error equals discarded weight") {
    std::mt19937 rng(29);
    auto l = bond_axis(AxisDir::In, {{{0, 0}, 2}, {{1, 1}, 2}});
    auto p = bond_axis(AxisDir::In, {{{0, 0}, 1}, {{1, 1}, 1}, {{1, -1}, 1}, {{2, 0}, 1}});
    auto r = bond_axis(AxisDir::Out, {{{1, 1}, 3}, {{2, 0}, 3}});
    for (int rep = 0; rep < 10; ++rep) {
        auto t = random_tensor({l, p, r}, SectorLabel{0, 0}, rng);
        if (t.empty()) continue;
        auto res = svd_truncate(t, {0, 1}, CompressionPolicy{3, 0.0});
        auto us = absorb_bond_right(res.u, res.s);
        auto rec = contract(us, res.v, {{2, 0}});
        auto dt = dense_embed(t);
        auto dr = dense_embed(rec);
        double err2 = 0, tot2 = 0;
        for (std::size_t i = 0; i < dt.size(); ++i) {
            err2 += std::norm(dt[i] - dr[i]);
            tot2 += std::norm(dt[i]);
        }
        CHECK(std::abs(err2 / tot2 - res.report.discarded_weight) < 1e-12);
    }
}

TEST_CASE("svd_truncate U has orthonormal columns per sector") {
    std::mt19937 rng(31);
    auto ax0 = bond_axis(AxisDir::In, {{{0, 0}, 4}, {{1, 1}, 3}});
    auto ax1 = bond_axis(AxisDir::Out, {{{0, 0}, 4}, {{1, 1}, 3}});
    auto t = random_tensor({ax0, ax1}, SectorLabel{0, 0}, rng);
    auto res = svd_truncate(t, {0}, CompressionPolicy{100, 0.0});
    auto gram = contract(res.u.conj(), res.u, {{0, 0}});
    for (auto &[key, blk] : gram.blocks()) {
        REQUIRE(key[0] == key[1]);
        long d = gram.block_shape(key)[0];
        for (long i = 0; i < d; ++i)
            for (long j = 0; j < d; ++j)
                CHECK(std::abs(blk[i * d + j] - (i == j ? cplx(1) : cplx(0))) < 1e-12);
    }
}

TEST_CASE("relative cutoff discards small values below max_bond") {
    auto ax0 = bond_axis(AxisDir::In, {{{1, 1}, 3}});
    auto ax1 = bond_axis(AxisDir::Out, {{{1, 1}, 3}});
    BlockSparseTensor t({ax0, ax1}, SectorLabel{0, 0});
    t.set_block({{1, 1}, {1, 1}}, {1.0, 0, 0, 0, 1e-3, 0, 0, 0, 1e-12});
    auto res = svd_truncate(t, {0}, CompressionPolicy{16, 1e-6});
    CHECK(res.report.kept == 2);
}

TEST_CASE("empty tensor svd throws") {
    auto ax = bond_axis(AxisDir::In, {{{0, 0}, 2}});
    BlockSparseTensor t({ax, ax.flipped()}, SectorLabel{0, 0});
    CHECK_THROWS_AS(svd_truncate(t, {0}, CompressionPolicy{4, 0.0}), EmptyTensor);
}

TEST_CASE("fuse is consistent across tensors sharing component axes") {
    std::mt19937 rng(37);
    auto a1 = bond_axis(AxisDir::Out, {{{0, 0}, 2}, {{1, 1}, 1}});
    auto a2 = bond_axis(AxisDir::Out, {{{0, 0}, 1}, {{1, -1}, 2}});
    auto l = bond_axis(AxisDir::In, {{{0, 0}, 2}, {{1, 1}, 2}, {{1, -1}, 2}, {{2, 0}, 2}});
    auto t = random_tensor({l, a1, a2}, SectorLabel{0, 0}, rng);
    auto f = t.fused(1, 2);
    REQUIRE(f.rank() == 2);
    // contract fused with its mirror and compare against unfused contraction
    auto t2 = random_tensor({a1.flipped(), a2.flipped(), l.flipped()}, SectorLabel{0, 0}, rng);
    auto g = t2.fused(0, 2);
    auto r1 = contract(t, t2, {{1, 0}, {2, 1}});
    auto r2 = contract(f, g, {{1, 0}});
    CHECK(max_abs_diff(dense_embed(r1), dense_embed(r2)) < 1e-12);
}

TEST_CASE("flux conservation fuzz across operations") {
    std::mt19937 rng(41);
    auto l = bond_axis(AxisDir::In, {{{0, 0}, 2}, {{1, 1}, 2}});
    auto p = bond_axis(AxisDir::In, {{{0, 0}, 1}, {{1, 1}, 1}, {{1, -1}, 1}, {{2, 0}, 1}});
    auto r = bond_axis(AxisDir::Out, {{{1, 1}, 2}, {{2, 0}, 2}});
    for (int rep = 0; rep < 100; ++rep) {
        auto a = random_tensor({l, p, r}, SectorLabel{0, 0}, rng, 0.7);
        auto b = random_tensor({r.flipped(), p.flipped()}, SectorLabel{0, 0}, rng, 0.7);
        if (a.empty() || b.empty()) continue;
        auto c = contract(a, b, {{2, 0}});
        c.check_invariants();
        auto s = add(a, a.scaled(cplx(0, 1)));
        s.check_invariants();
        if (!a.empty()) {
            auto sv = svd_truncate(a, {0, 1}, CompressionPolicy{3, 0.0});
            sv.u.check_invariants();
            sv.v.check_invariants();
        }
        a.fused(0, 2).check_invariants();
    }
}

TEST_CASE("dump emits one line per block") {
    auto ax = bond_axis(AxisDir::In, {{{1, 1}, 1}});
    BlockSparseTensor t({ax, ax.flipped()}, SectorLabel{0, 0});
    t.set_block({{1, 1}, {1, 1}}, {cplx(0.5, -0.25)});
    std::ostringstream os;
    t.dump(os);
    auto s = os.str();
    CHECK(s.find("block 1 1 1 1 : 0.5 -0.25") != std::string::npos);
}
