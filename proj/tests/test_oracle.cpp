#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"
#include "tpt/oracle.hpp"
#include "tpt/stats.hpp"

using namespace tpt;
using namespace tpt_test;

TEST_CASE("hitting times on hand-built trajectories") {
  const AbSets sets({0}, {2});  // roles: 0 = A, 1 = C, 2 = B
  SUBCASE("all four sentinels inside C") {
    const TrajectorySample traj{{1, 1, 1}, 0, 0};
    const auto h = hitting_times(traj, sets, 1);
    CHECK(h.first_entrance_a == kNeverForward);
    CHECK(h.first_entrance_b == kNeverForward);
    CHECK(h.last_exit_a == kNeverBackward);
    CHECK(h.last_exit_b == kNeverBackward);
  }
  SUBCASE("a-c-b window") {
    const TrajectorySample traj{{0, 1, 2}, 0, 0};
    const auto h = hitting_times(traj, sets, 1);
    CHECK(h.last_exit_a == 0);
    CHECK(h.first_entrance_b == 2);
    CHECK(h.last_exit_b == kNeverBackward);
    CHECK(h.first_entrance_a == kNeverForward);
  }
  SUBCASE("b-c-a window") {
    const TrajectorySample traj{{2, 1, 0}, 0, 0};
    const auto h = hitting_times(traj, sets, 1);
    CHECK(h.last_exit_b == 0);
    CHECK(h.first_entrance_a == 2);
  }
  SUBCASE("slice offsets shift the reported times") {
    const TrajectorySample traj{{0, 1, 2}, 10, 0};
    const auto h = hitting_times(traj, sets, 11);
    CHECK(h.last_exit_a == 10);
    CHECK(h.first_entrance_b == 12);
  }
}

TEST_CASE("finite-horizon enumeration is a single row sum at N=2") {
  FiniteSpec f;
  f.matrices = {TransitionMatrix::from_rows({{0.2, 0.5, 0.3}, {0.1, 0.6, 0.3}, {0, 0, 1}})};
  f.initial_density = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const AbSets sets({0}, {2});
  const auto res = enumerate_committor(ChainSpec{f}, sets, 1, 0, 8, Direction::forward);
  CHECK(res.lower_bound == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(res.truncation_bound == 0.0);
}

TEST_CASE("ruin chain enumeration converges to the closed form") {
  const ChainSpec spec = StationarySpec{path_walk_chain(4)};
  const AbSets sets({0}, {3});
  const auto at_1 = enumerate_committor(spec, sets, 1, 0, 200, Direction::forward);
  const auto at_2 = enumerate_committor(spec, sets, 2, 0, 200, Direction::forward);
  CHECK(at_1.truncation_bound < 1e-12);
  CHECK(std::abs(at_1.lower_bound - 1.0 / 3.0) < 1e-10);
  CHECK(std::abs(at_2.lower_bound - 2.0 / 3.0) < 1e-10);
}

TEST_CASE("enumeration stops once C cannot be re-entered") {
  // From the single C state the chain jumps straight into A or B.
  const TransitionMatrix p = TransitionMatrix::from_rows(
      {{0.5, 0.5, 0}, {0.5, 0, 0.5}, {0, 0.5, 0.5}});
  const ChainSpec spec = StationarySpec{p};
  const AbSets sets({0}, {2});
  const auto res = enumerate_committor(spec, sets, 1, 0, 50, Direction::forward);
  CHECK(res.truncation_bound == 0.0);
  CHECK(res.lower_bound == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("states outside C are rejected") {
  const ChainSpec spec = StationarySpec{path_walk_chain(4)};
  const AbSets sets({0}, {3});
  CHECK_THROWS_AS(enumerate_committor(spec, sets, 0, 0, 10, Direction::forward),
                  PreconditionError);
}

TEST_CASE("sandwich property against the solvers on small random chains") {
  Rng rng(101);
  for (int rep = 0; rep < 8; ++rep) {
    const int n = 3 + static_cast<int>(rng.next_u64() % 4);
    const AbSets sets = random_sets(n, rng);
    const auto roles = partition_roles(sets, n);

    SUBCASE("stationary") {}
    const ChainSpec spec = StationarySpec{random_sparse_chain(n, rng)};
    const auto field = solve_committors(spec, sets);
    for (int i = 0; i < n; ++i) {
      if (roles[i] != Role::C) continue;
      for (const auto dir : {Direction::forward, Direction::backward}) {
        const auto res = enumerate_committor(spec, sets, i, 0, 300, dir);
        const double q = dir == Direction::forward ? field.forward[0][i] : field.backward[0][i];
        CHECK(res.lower_bound <= q + 1e-12);
        CHECK(q <= res.lower_bound + res.truncation_bound + 1e-12);
      }
    }
  }
}

TEST_CASE("periodic enumeration sandwiches the periodic solver") {
  Rng rng(103);
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 3 + static_cast<int>(rng.next_u64() % 4);
    const int m_count = 2 + static_cast<int>(rng.next_u64() % 3);
    std::vector<TransitionMatrix> mats;
    for (int m = 0; m < m_count; ++m) mats.push_back(random_dense_chain(n, rng));
    const AbSets sets = random_sets(n, rng);
    const auto roles = partition_roles(sets, n);
    const ChainSpec spec = PeriodicSpec{mats};
    const auto field = solve_committors(spec, sets);
    for (int m = 0; m < m_count; ++m)
      for (int i = 0; i < n; ++i) {
        if (roles[i] != Role::C) continue;
        for (const auto dir : {Direction::forward, Direction::backward}) {
          const auto res = enumerate_committor(spec, sets, i, m, 400, dir);
          const double q = dir == Direction::forward ? field.forward[m][i] : field.backward[m][i];
          CHECK(res.lower_bound <= q + 1e-12);
          CHECK(q <= res.lower_bound + res.truncation_bound + 1e-12);
        }
      }
  }
}

TEST_CASE("finite enumeration equals the sweep solver exactly") {
  Rng rng(107);
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 3 + static_cast<int>(rng.next_u64() % 4);
    const int horizon = 3 + static_cast<int>(rng.next_u64() % 6);
    FiniteSpec f;
    for (int k = 0; k + 1 < horizon; ++k) f.matrices.push_back(random_sparse_chain(n, rng));
    f.initial_density = random_density(n, rng);
    const AbSets sets = random_sets(n, rng);
    const auto roles = partition_roles(sets, n);
    const ChainSpec spec{f};
    const auto field = solve_committors(spec, sets);
    for (int slice = 0; slice < horizon; ++slice)
      for (int i = 0; i < n; ++i) {
        if (roles[i] != Role::C) continue;
        const auto fwd = enumerate_committor(spec, sets, i, slice, horizon, Direction::forward);
        CHECK(std::abs(fwd.lower_bound - field.forward[slice][i]) < 1e-10);
        const auto bwd = enumerate_committor(spec, sets, i, slice, horizon, Direction::backward);
        CHECK(std::abs(bwd.lower_bound - field.backward[slice][i]) < 1e-10);
      }
  }
}

TEST_CASE("simulation is seed-deterministic and respects absorbing rows") {
  const TransitionMatrix p = TransitionMatrix::from_rows({{1, 0}, {0.5, 0.5}});
  FiniteSpec f;
  f.matrices.assign(9, p);
  f.initial_density = {1.0, 0.0};
  const auto a = simulate(ChainSpec{f}, 0, 42);
  const auto b = simulate(ChainSpec{f}, 0, 42);
  CHECK(a.states == b.states);
  for (int s : a.states) CHECK(s == 0);  // absorbing start
  const auto c = simulate(ChainSpec{f}, 0, 43);
  CHECK(c.states == a.states);  // still pinned to the absorbing state
}

TEST_CASE("periodic simulation applies the slice matrices in phase") {
  // P_0 funnels everything into state 0, P_1 spreads uniformly, so every
  // odd-indexed state of the sample must be 0.
  const TransitionMatrix funnel = TransitionMatrix::from_rows({{1, 0, 0}, {1, 0, 0}, {1, 0, 0}});
  const TransitionMatrix spread = TransitionMatrix::from_rows(
      {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}});
  const ChainSpec spec = PeriodicSpec{{funnel, spread}};
  const auto traj = simulate(spec, 2001, 13);
  bool odd_pinned = true;
  bool even_spreads = false;
  for (std::size_t t = 1; t < traj.states.size(); t += 2) odd_pinned &= traj.states[t] == 0;
  for (std::size_t t = 2; t < traj.states.size(); t += 2) even_spreads |= traj.states[t] != 0;
  CHECK(odd_pinned);
  CHECK(even_spreads);
}

TEST_CASE("one-step frequencies approach the transition probabilities") {
  const ChainSpec spec = StationarySpec{two_state_chain(0.2, 0.1)};
  const auto traj = simulate(spec, 1000000, 7);
  long long visits0 = 0, jumps01 = 0;
  for (std::size_t t = 0; t + 1 < traj.states.size(); ++t) {
    if (traj.states[t] == 0) {
      ++visits0;
      if (traj.states[t + 1] == 1) ++jumps01;
    }
  }
  const double phat = static_cast<double>(jumps01) / visits0;
  const double se = std::sqrt(0.2 * 0.8 / visits0);
  CHECK(std::abs(phat - 0.2) < 3.0 * se);
}

TEST_CASE("ensemble of finite realizations has the right shape") {
  Rng rng(113);
  FiniteSpec f;
  f.matrices.assign(5, random_dense_chain(3, rng));
  f.initial_density = {0.2, 0.5, 0.3};
  const auto ensemble = simulate_ensemble(f, 7, 99);
  CHECK(ensemble.size() == 7);
  for (const auto& traj : ensemble) CHECK(traj.states.size() == 6);
  const auto again = simulate_ensemble(f, 7, 99);
  for (int k = 0; k < 7; ++k) CHECK(ensemble[k].states == again[k].states);
}

TEST_CASE("ergodic estimates vanish when A is never visited") {
  const AbSets sets({0}, {2});
  TrajectorySample traj;
  traj.states.assign(1000, 1);  // stays in C
  const auto est = ergodic_estimates(traj, sets, 3);
  CHECK(est.rate == 0.0);
  CHECK(est.z == 0.0);
  for (double v : est.mu) CHECK(v == 0.0);
}

TEST_CASE("ergodic estimates match the two-state closed form") {
  const ChainSpec spec = StationarySpec{two_state_chain(0.2, 0.1)};
  const AbSets sets({0}, {1});
  const auto traj = simulate(spec, 1000000, 11);
  const auto est = ergodic_estimates(traj, sets, 2);
  const double exact = 1.0 / 15.0;
  REQUIRE(est.rate_se > 0.0);
  CHECK(std::abs(est.rate - exact) < 3.0 * est.rate_se);
}

TEST_CASE("ergodic estimates track the exact pipeline on a 5-state chain") {
  Rng rng(127);
  const TransitionMatrix p = random_dense_chain(5, rng);
  const ChainSpec spec = StationarySpec{p};
  const AbSets sets({0}, {4});
  const auto field = solve_committors(spec, sets);
  const auto densities = densities_for(spec);
  const auto stats = compute_stats(field, densities, spec, sets);

  for (const std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    const auto traj = simulate(spec, 400000, seed);
    const auto est = ergodic_estimates(traj, sets, 5);
    CHECK(std::abs(est.rate - stats.k_ab) < 4.5 * est.rate_se);
    CHECK(std::abs(est.z - *stats.z_aggregate) < 4.5 * est.z_se);
    for (int i = 0; i < 5; ++i)
      if (est.mu_se[i] > 0.0) CHECK(std::abs(est.mu[i] - stats.mu[0][i]) < 4.5 * est.mu_se[i]);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        if (est.current_se(i, j) > 0.0)
          CHECK(std::abs(est.current(i, j) - stats.current[0](i, j)) <
                4.5 * est.current_se(i, j));
  }
}

TEST_CASE("ensemble rate estimate is zero when A is unreachable") {
  FiniteSpec f;
  f.matrices.assign(3, TransitionMatrix::from_rows({{0, 1, 0}, {0, 1, 0}, {0, 0, 1}}));
  f.initial_density = {0.0, 1.0, 0.0};
  const auto est = ensemble_rate_estimate(f, AbSets({0}, {2}), 500, 3);
  CHECK(est.rate == 0.0);
}

TEST_CASE("ensemble rate estimate matches the exact window average") {
  Rng rng(131);
  FiniteSpec f;
  for (int k = 0; k < 4; ++k) f.matrices.push_back(random_dense_chain(3, rng));
  f.initial_density = random_density(3, rng);
  const AbSets sets({0}, {2});
  const ChainSpec spec{f};
  const auto field = solve_committors(spec, sets);
  const auto stats = compute_stats(field, densities_for(spec), spec, sets);
  for (const std::uint64_t seed : {10ull, 20ull, 30ull}) {
    const auto est = ensemble_rate_estimate(f, sets, 40000, seed);
    REQUIRE(est.se > 0.0);
    CHECK(std::abs(est.rate - stats.k_ab) < 4.5 * est.se);
  }
}

TEST_CASE("N=2 ensemble estimator reduces to the departure frequency") {
  FiniteSpec f;
  f.matrices = {two_state_chain(0.3, 0.2)};
  f.initial_density = {0.5, 0.5};
  const AbSets sets({0}, {1});
  const int count = 5000;
  const auto est = ensemble_rate_estimate(f, sets, count, 77);
  const auto ensemble = simulate_ensemble(f, count, 77);
  double frequency = 0.0;
  for (const auto& traj : ensemble)
    if (traj.states[0] == 0 && traj.states[1] == 1) frequency += 1.0;
  frequency /= count;
  CHECK(est.rate == doctest::Approx(frequency / 2.0).epsilon(1e-15));  // divided by N = 2
}
