#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"
#include "tpt/committor.hpp"
#include "tpt/stats.hpp"
#include "tpt/ulam.hpp"

using namespace tpt;
using namespace tpt_test;

TEST_CASE("grid geometry") {
  const UlamGrid grid = UlamGrid::square(-2.0, 2.0, -1.0, 2.0, 0.2);
  CHECK(grid.nx() == 20);
  CHECK(grid.ny() == 15);
  CHECK(grid.cell_count() == 300);
  double x, y;
  grid.midpoint(0, x, y);
  CHECK(x == doctest::Approx(-1.9));
  CHECK(y == doctest::Approx(-0.9));
  CHECK(grid.locate(x, y) == 0);
  CHECK(grid.locate(-5.0, -5.0) == 0);                      // clamped
  CHECK(grid.locate(5.0, 5.0) == grid.cell_count() - 1);    // clamped
  CHECK(grid.locate(2.0, 2.0) == grid.cell_count() - 1);    // right edge belongs to last cell
  CHECK_THROWS_AS(UlamGrid::square(0.0, 1.0, 0.0, 1.0, 0.3), PreconditionError);
}

TEST_CASE("potential is symmetric in x") {
  Rng rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const double x = rng.uniform(-2.0, 2.0);
    const double y = rng.uniform(-1.0, 2.0);
    CHECK(triple_well_energy(x, y) == doctest::Approx(triple_well_energy(-x, y)).epsilon(1e-14));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(2);
  const double h = 1e-6;
  for (int rep = 0; rep < 100; ++rep) {
    const double x = rng.uniform(-2.0, 2.0);
    const double y = rng.uniform(-1.0, 2.0);
    double gx, gy;
    triple_well_gradient(x, y, gx, gy);
    const double fx = (triple_well_energy(x + h, y) - triple_well_energy(x - h, y)) / (2 * h);
    const double fy = (triple_well_energy(x, y + h) - triple_well_energy(x, y - h)) / (2 * h);
    const double scale = std::max(1.0, std::sqrt(gx * gx + gy * gy));
    CHECK(std::abs(gx - fx) < 1e-6 * scale);
    CHECK(std::abs(gy - fy) < 1e-6 * scale);
  }
}

TEST_CASE("gradient descent finds the three wells") {
  auto descend = [](double x, double y) {
    for (int it = 0; it < 20000; ++it) {
      double gx, gy;
      triple_well_gradient(x, y, gx, gy);
      x -= 0.01 * gx;
      y -= 0.01 * gy;
    }
    return std::pair{x, y};
  };
  const auto [ax, ay] = descend(-0.8, 0.2);
  CHECK(std::abs(ax - -1.0) < 0.15);
  CHECK(std::abs(ay) < 0.15);
  const auto [bx, by] = descend(0.8, 0.2);
  CHECK(std::abs(bx - 1.0) < 0.15);
  CHECK(std::abs(by) < 0.15);
  const auto [cx, cy] = descend(0.2, 1.3);
  CHECK(std::abs(cx) < 0.15);
  CHECK(std::abs(cy - 1.5) < 0.2);
}

TEST_CASE("boltzmann weights") {
  const UlamGrid grid = UlamGrid::square(-2.0, 2.0, -1.0, 2.0, 0.2);
  SUBCASE("flat potential gives the uniform distribution") {
    LangevinSpec spec;
    spec.potential = Potential::zero();
    const auto rho = boltzmann_density(grid, spec);
    for (double v : rho) CHECK(v == doctest::Approx(1.0 / grid.cell_count()).epsilon(1e-12));
  }
  SUBCASE("smaller noise concentrates the mass") {
    LangevinSpec warm;
    warm.sigma = 1.0;
    LangevinSpec cold;
    cold.sigma = 0.5;
    const auto rho_warm = boltzmann_density(grid, warm);
    const auto rho_cold = boltzmann_density(grid, cold);
    CHECK(*std::max_element(rho_cold.begin(), rho_cold.end()) >
          *std::max_element(rho_warm.begin(), rho_warm.end()));
  }
  SUBCASE("heaviest cells sit in the deep wells") {
    LangevinSpec spec;
    const auto rho = boltzmann_density(grid, spec);
    std::vector<int> idx(rho.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + 3, idx.end(),
                      [&](int a, int b) { return rho[a] > rho[b]; });
    for (int k = 0; k < 3; ++k) {
      double x, y;
      grid.midpoint(idx[k], x, y);
      const bool near_a = std::hypot(x + 1.0, y) < 0.45;
      const bool near_b = std::hypot(x - 1.0, y) < 0.45;
      CHECK((near_a || near_b));
    }
  }
  SUBCASE("forcing is rejected") {
    LangevinSpec spec;
    spec.forcing = Forcing{1.4, 1.8};
    CHECK_THROWS_AS(boltzmann_density(grid, spec), PreconditionError);
  }
}

TEST_CASE("near-deterministic dynamics map cells to themselves") {
  const UlamGrid grid = UlamGrid::square(0.0, 1.0, 0.0, 1.0, 0.25);
  LangevinSpec spec;
  spec.potential = Potential::zero();
  spec.sigma = 1e-8;
  spec.tau = 0.1;
  spec.euler_dt = 0.01;
  spec.samples_per_cell = 200;
  const TransitionMatrix p = estimate_transition_matrix(grid, spec, 0.0, 5);
  for (int c = 0; c < grid.cell_count(); ++c) CHECK(p(c, c) == doctest::Approx(1.0));
}

TEST_CASE("constant drift shifts interior cells one column over") {
  const UlamGrid grid = UlamGrid::square(0.0, 1.0, 0.0, 1.0, 0.2);
  LangevinSpec spec;
  // drift dx/dt = 2/3, so one 0.2-cell over tau = 0.3
  spec.potential = Potential::linear(-2.0 / 3.0, 0.0);
  spec.sigma = 1e-9;
  spec.tau = 0.3;
  spec.euler_dt = 0.01;
  spec.samples_per_cell = 100;
  const TransitionMatrix p = estimate_transition_matrix(grid, spec, 0.0, 17);
  for (int iy = 0; iy < grid.ny(); ++iy)
    for (int ix = 0; ix + 1 < grid.nx(); ++ix)
      CHECK(p(grid.cell_index(ix, iy), grid.cell_index(ix + 1, iy)) == doctest::Approx(1.0));
  // last column clamps to itself
  CHECK(p(grid.cell_index(grid.nx() - 1, 0), grid.cell_index(grid.nx() - 1, 0)) ==
        doctest::Approx(1.0));
}

TEST_CASE("estimates are row-stochastic and seed-deterministic") {
  const UlamGrid grid = UlamGrid::square(-2.0, 2.0, -1.0, 2.0, 0.5);
  LangevinSpec spec;
  spec.samples_per_cell = 400;
  const TransitionMatrix a = estimate_transition_matrix(grid, spec, 0.0, 2024);
  const TransitionMatrix b = estimate_transition_matrix(grid, spec, 0.0, 2024, 1);
  for (int i = 0; i < a.n_states(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < a.n_states(); ++j) {
      sum += a(i, j);
      CHECK(a(i, j) == b(i, j));  // bitwise, independent of thread count
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  const TransitionMatrix c = estimate_transition_matrix(grid, spec, 0.0, 2025);
  bool any_different = false;
  for (int i = 0; i < a.n_states() && !any_different; ++i)
    for (int j = 0; j < a.n_states(); ++j)
      if (a(i, j) != c(i, j)) {
        any_different = true;
        break;
      }
  CHECK(any_different);
}

TEST_CASE("flux asymmetry shrinks with the sample count") {
  // The unforced dynamics are reversible, so the estimated chain drifts
  // towards detailed balance as the Monte-Carlo error ~ 1/sqrt(C) decays.
  const UlamGrid grid = UlamGrid::square(-2.0, 2.0, -1.0, 2.0, 0.5);
  auto asymmetry = [&](int samples) {
    LangevinSpec spec;
    spec.samples_per_cell = samples;
    const TransitionMatrix p = estimate_transition_matrix(grid, spec, 0.0, 3);
    const auto pi = stationary_distribution(p);
    double worst = 0.0;
    for (int i = 0; i < p.n_states(); ++i)
      for (int j = 0; j < p.n_states(); ++j)
        worst = std::max(worst, std::abs(pi[i] * p(i, j) - pi[j] * p(j, i)));
    return worst;
  };
  const double coarse = asymmetry(1000);
  const double fine = asymmetry(10000);
  CHECK(fine < coarse);
}

TEST_CASE("sigma=1 estimate is irreducible") {
  const UlamGrid grid = UlamGrid::square(-2.0, 2.0, -1.0, 2.0, 0.2);
  LangevinSpec spec;
  spec.samples_per_cell = 500;
  const TransitionMatrix p = estimate_transition_matrix(grid, spec, 0.0, 31);
  CHECK(is_strongly_connected(p.dense()));
}

TEST_CASE("cells_in_disk geometry") {
  const UlamGrid grid = UlamGrid::square(-2.0, 2.0, -1.0, 2.0, 0.2);
  SUBCASE("tiny disk at a midpoint selects exactly one cell") {
    const auto cells = cells_in_disk(grid, -1.9, -0.9, 0.05);
    CHECK(cells == std::vector<int>{0});
  }
  SUBCASE("huge disk selects every cell") {
    const auto cells = cells_in_disk(grid, 0.0, 0.5, 100.0);
    CHECK(static_cast<int>(cells.size()) == grid.cell_count());
  }
  SUBCASE("the well disk covers cells adjacent to (-1, 0)") {
    const auto cells = cells_in_disk(grid, -1.0, 0.0, 0.25);
    CHECK_FALSE(cells.empty());
    for (int c : cells) {
      double x, y;
      grid.midpoint(c, x, y);
      CHECK(std::hypot(x + 1.0, y) <= 0.25 + 1e-12);
    }
  }
  SUBCASE("empty disks are rejected") {
    CHECK_THROWS_AS(cells_in_disk(grid, -1.99, -0.99, 0.01), PreconditionError);
  }
}

TEST_CASE("forcing flips sign half a period later") {
  const Forcing forcing{1.4, 1.8};
  double fx0, fy0, fx3, fy3;
  forcing.eval(0.5, -0.3, 0.0, fx0, fy0);
  forcing.eval(0.5, -0.3, 0.9, fx3, fy3);  // t = 3 * tau = half a period
  CHECK(fx0 == doctest::Approx(1.4 * 0.3));
  CHECK(fy0 == doctest::Approx(1.4 * 0.5));
  CHECK(fx3 == doctest::Approx(-fx0));
  CHECK(fy3 == doctest::Approx(-fy0));
}

TEST_CASE("periodic family requires a matching forcing period") {
  const UlamGrid grid = UlamGrid::square(-2.0, 2.0, -1.0, 2.0, 0.5);
  LangevinSpec spec;
  spec.samples_per_cell = 50;
  CHECK_THROWS_AS(build_periodic_family(grid, spec, 6, 1), PreconditionError);
  spec.forcing = Forcing{1.4, 1.7};
  CHECK_THROWS_AS(build_periodic_family(grid, spec, 6, 1), PreconditionError);
}

TEST_CASE("zero-amplitude forcing gives statistically identical slices") {
  const UlamGrid grid = UlamGrid::square(-2.0, 2.0, -1.0, 2.0, 0.5);
  LangevinSpec spec;
  spec.samples_per_cell = 3000;
  spec.forcing = Forcing{0.0, 6 * spec.tau};
  const auto family = build_periodic_family(grid, spec, 6, 91);
  const int c = spec.samples_per_cell;
  for (int i = 0; i < grid.cell_count(); ++i)
    for (int j = 0; j < grid.cell_count(); ++j) {
      const double p0 = family[0](i, j);
      const double p3 = family[3](i, j);
      const double pooled = 0.5 * (p0 + p3);
      const double se = std::sqrt(2.0 * std::max(pooled * (1.0 - pooled), 2.0 / c) / c);
      CHECK(std::abs(p0 - p3) <= 5.0 * se);
    }
}

TEST_CASE("forced periodic pipeline end to end on a coarse grid") {
  const UlamGrid grid = UlamGrid::square(-2.0, 2.0, -1.0, 2.0, 0.5);
  LangevinSpec spec;
  spec.samples_per_cell = 1500;
  spec.forcing = Forcing{1.4, 1.8};
  const auto family = build_periodic_family(grid, spec, 6, 7);
  REQUIRE(family.size() == 6);
  const ChainSpec chain = PeriodicSpec{family};
  REQUIRE(all_valid(validate_chain(chain)));

  const AbSets sets(cells_in_disk(grid, -1.0, 0.0, 0.4), cells_in_disk(grid, 1.0, 0.0, 0.4));
  const auto augmented = solve_periodic(family, sets, PeriodicMethod::augmented);
  const auto stacked = solve_periodic(family, sets, PeriodicMethod::stacked);
  for (int m = 0; m < 6; ++m) {
    CHECK(max_abs_diff(augmented.forward[m], stacked.forward[m]) < 1e-8);
    CHECK(max_abs_diff(augmented.backward[m], stacked.backward[m]) < 1e-8);
  }
  const auto densities = densities_for(chain);
  const auto stats = compute_stats(augmented, densities, chain, sets);
  CHECK(stats.conservation.max_node_violation < 1e-10);
  CHECK(stats.conservation.boundary_residual < 1e-10);
  CHECK(stats.k_ab > 0.0);
}
