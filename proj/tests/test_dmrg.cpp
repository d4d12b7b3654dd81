#include <doctest.h>

#include <cmath>

#include "fermips/engines.hpp"
#include "fermips/refsolver.hpp"

using namespace fermips;

namespace {

double ed_ground(const FermionOperatorSum &h, int L, int na, int nb) {
    auto basis = SectorBasis::enumerate(L, na, nb);
    return ground_state(operator_matrix(h, basis)).first;
}

} // namespace

TEST_CASE("single site with only the U term") {
    FermionOperatorSum h(1);
    h.add_term(3.7, {{0, Spin::Up, true},
                     {0, Spin::Up, false},
                     {0, Spin::Down, true},
                     {0, Spin::Down, false}});
    auto w = build_mpo(h);
    auto psi0 = MPSWavefunction::from_occupation({3});
    auto res = dmrg(w, psi0, default_schedule(16));
    CHECK(res.energy == doctest::Approx(3.7).epsilon(1e-12));
}

TEST_CASE("two-site Hubbard reaches the analytic ground energy") {
    auto h = hubbard_hamiltonian({2, 1.0, 4.0, false});
    auto w = build_mpo(h);
    auto psi0 = MPSWavefunction::from_occupation({3, 0});
    auto res = dmrg(w, psi0, default_schedule(16));
    CHECK(res.energy == doctest::Approx(2.0 - std::sqrt(8.0)).epsilon(1e-10));
    CHECK(std::abs(res.psi.norm() - 1.0) < 1e-10);
}

TEST_CASE("L=6 Hubbard matches ED and sweeps are monotone") {
    auto h = hubbard_hamiltonian({6, 1.0, 4.0, false});
    auto w = build_mpo(h);
    auto psi0 = MPSWavefunction::from_occupation({1, 2, 1, 2, 1, 2});
    SweepSchedule sched;
    sched.stages = {{200, 0.0, 8}};
    auto res = dmrg(w, psi0, sched);
    double e_ed = ed_ground(h, 6, 3, 3);
    CHECK(std::abs(res.energy - e_ed) < 1e-8);
    CHECK(res.energy >= e_ed - 1e-10); // variational bound
    for (std::size_t k = 1; k < res.per_sweep.size(); ++k)
        CHECK(res.per_sweep[k].energy <= res.per_sweep[k - 1].energy + 1e-12);
}

TEST_CASE("extrapolation basics") {
    auto [e0, slope] = extrapolate_to_zero_truncation({{1e-6, -1.0 + 2e-6}, {2e-6, -1.0 + 4e-6}});
    CHECK(e0 == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(slope == doctest::Approx(2.0).epsilon(1e-9));
    CHECK_THROWS_AS(extrapolate_to_zero_truncation({{1e-6, -1.0}, {1e-6, -1.1}}),
                    DegeneratePoints);
    CHECK_THROWS_AS(extrapolate_to_zero_truncation({{1e-6, -1.0}}), DegeneratePoints);
}

TEST_CASE("truncation-series extrapolation beats the best raw point") {
    auto h = hubbard_hamiltonian({6, 1.0, 8.0, false});
    auto w = build_mpo(h);
    auto psi0 = MPSWavefunction::from_occupation({1, 2, 1, 2, 1, 2});
    double e_ed = ed_ground(h, 6, 3, 3);
    std::vector<std::pair<double, double>> points;
    double best = 1e300;
    for (long m : {10L, 12L, 16L, 24L}) {
        SweepSchedule sched;
        sched.stages = {{m, 0.0, 6}};
        auto res = dmrg(w, psi0, sched);
        points.push_back({res.per_sweep.back().max_discarded, res.energy});
        best = std::min(best, res.energy);
    }
    auto [e0, slope] = extrapolate_to_zero_truncation(points);
    CHECK(std::abs(e0 - e_ed) < std::abs(best - e_ed));
}

TEST_CASE("dmrg error paths") {
    auto w = build_mpo(hubbard_hamiltonian({2, 1.0, 4.0, false}));
    auto psi0 = MPSWavefunction::from_occupation({3, 0});
    CHECK_THROWS_AS(dmrg(w, psi0.scaled(0.0), default_schedule(8)), ZeroState);

    FermionOperatorSum oneway(2);
    oneway.add_term(1.0, {{0, Spin::Up, true}, {1, Spin::Up, false}});
    auto wn = build_mpo(oneway);
    auto det = MPSWavefunction::from_occupation({2, 1});
    CHECK_THROWS_AS(dmrg(wn, det, default_schedule(8)), NonHermitianGenerator);

    SweepSchedule bad;
    bad.stages = {{16, 0.0, 2}, {8, 0.0, 2}};
    CHECK_THROWS_AS(dmrg(w, psi0, bad), InvalidSpec);
}
