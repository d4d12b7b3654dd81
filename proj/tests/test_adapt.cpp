#include <doctest.h>

#include <cmath>

#include "fermips/engines.hpp"
#include "fermips/refsolver.hpp"

using namespace fermips;

namespace {
const CompressionPolicy kPolicy{64, 1e-20};
}

TEST_CASE("pool operators are anti-Hermitian and sector conserving") {
    auto pool = adapt_pool(3);
    // singles C(3,2)=3, pair doubles 3, density-assisted singles 6,
    // generalized doubles over pair pairs C(3,2)=3
    CHECK(pool.size() == 15);
    auto basis = SectorBasis::enumerate(3, 2, 1);
    for (auto &op : pool) {
        CHECK(op.uniform_delta() == SectorLabel{0, 0});
        auto m = operator_matrix(op, basis);
        CHECK((m + m.adjoint()).norm() < 1e-12);
    }
    CHECK_THROWS_AS(adapt_pool(1), InvalidSpec);
}

TEST_CASE("a commuting Hamiltonian converges in zero iterations") {
    FermionOperatorSum h(2);
    for (int i = 0; i < 2; ++i)
        h.add_term(4.0, {{i, Spin::Up, true},
                         {i, Spin::Up, false},
                         {i, Spin::Down, true},
                         {i, Spin::Down, false}});
    auto w = build_mpo(h);
    auto hf = MPSWavefunction::from_occupation({1, 2});
    auto st = adapt_vqe(w, adapt_pool(2), hf, kPolicy, {});
    CHECK(st.converged);
    CHECK(st.operators.empty());
    CHECK(st.gradient_norm_history.size() == 1);
    CHECK(st.gradient_norm_history[0] < 1e-1);
}

TEST_CASE("two-site Hubbard reaches the exact correlation energy") {
    auto h = hubbard_hamiltonian({2, 1.0, 4.0, false});
    auto w = build_mpo(h);
    auto hf = MPSWavefunction::from_occupation({3, 0});
    AdaptStopRule stop;
    stop.energy_tol = 1e-8;
    auto st = adapt_vqe(w, adapt_pool(2), hf, kPolicy, stop);
    REQUIRE(!st.energy_history.empty());
    CHECK(st.operators.size() <= 3);
    CHECK(st.energy_history.back() == doctest::Approx(2.0 - std::sqrt(8.0)).epsilon(1e-6));
    for (std::size_t k = 1; k < st.energy_history.size(); ++k)
        CHECK(st.energy_history[k] <= st.energy_history[k - 1] + 1e-9);
}

TEST_CASE("L=3 Hubbard converges toward the ED energy") {
    auto h = hubbard_hamiltonian({3, 1.0, 4.0, false});
    auto w = build_mpo(h);
    auto hf = MPSWavefunction::from_occupation({3, 1, 0});
    auto basis = SectorBasis::enumerate(3, 2, 1);
    double e_ed = ground_state(operator_matrix(h, basis)).first;
    AdaptStopRule stop;
    stop.max_iters = 10;
    auto st = adapt_vqe(w, adapt_pool(3), hf, kPolicy, stop);
    REQUIRE(!st.energy_history.empty());
    CHECK(st.energy_history.back() < e_ed + 5e-3);
    CHECK(st.energy_history.back() >= e_ed - 1e-9);
    for (std::size_t k = 1; k < st.energy_history.size(); ++k)
        CHECK(st.energy_history[k] <= st.energy_history[k - 1] + 1e-9);
}

TEST_CASE("adapt error paths") {
    auto w = build_mpo(hubbard_hamiltonian({2, 1.0, 4.0, false}));
    auto hf = MPSWavefunction::from_occupation({3, 0});
    CHECK_THROWS_AS(adapt_vqe(w, {}, hf, kPolicy, {}), EmptyPool);
    CHECK_THROWS_AS(adapt_vqe(w, adapt_pool(2), hf.scaled(0.0), kPolicy, {}), ZeroState);
}
