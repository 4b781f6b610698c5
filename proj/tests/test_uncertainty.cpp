#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mvtri/errors.hpp"
#include "mvtri/rng.hpp"
#include "mvtri/synthetic.hpp"
#include "mvtri/uncertainty.hpp"

using namespace mvtri;

namespace {

// A small grid populated from a separable, correctly-ordered function, all
// cells trusted.
UncertaintyGrid toy_grid() {
  UncertaintyGrid grid;
  grid.n_axis = {2, 3, 4};
  grid.e_axis = {1.0, 3.0, 5.0};
  grid.beta_axis = {2.0, 6.0};
  grid.sigma.resize(grid.cell_count());
  grid.counts.assign(grid.cell_count(), 100.0);
  for (size_t in = 0; in < 3; ++in)
    for (size_t ie = 0; ie < 3; ++ie)
      for (size_t ib = 0; ib < 2; ++ib)
        grid.at(in, ie, ib) =
            0.5 * (grid.e_axis[ie] / 5.0) / (grid.n_axis[in] * (1.0 + grid.beta_axis[ib]));
  grid.smoothed = true;
  return grid;
}

}  // namespace

TEST_CASE("default grid layout") {
  const UncertaintyGrid grid = make_default_grid();
  CHECK(grid.n_axis.size() == 49);
  CHECK(grid.n_axis.front() == 2.0);
  CHECK(grid.n_axis.back() == 50.0);
  CHECK(grid.e_axis.size() == 20);
  CHECK(grid.e_axis.front() == doctest::Approx(0.5));   // centers of 1 px bins on [0, 20]
  CHECK(grid.e_axis.back() == doctest::Approx(19.5));
  CHECK(grid.beta_axis.size() == 20);
  CHECK(grid.sigma.size() == 49 * 20 * 20);
  CHECK(std::all_of(grid.sigma.begin(), grid.sigma.end(),
                    [](double v) { return std::isnan(v); }));
}

TEST_CASE("monotone check matches the three required directions") {
  UncertaintyGrid grid = toy_grid();
  CHECK(grid.is_monotone());
  SUBCASE("violation along e") {
    grid.at(0, 2, 0) = 0.0;
    CHECK_FALSE(grid.is_monotone());
    CHECK(grid.is_monotone(1.0));  // within a loose tolerance
  }
  SUBCASE("violation along n") {
    grid.at(2, 0, 0) = 0.9;
    CHECK_FALSE(grid.is_monotone());
  }
  SUBCASE("violation along beta") {
    grid.at(0, 0, 1) = 0.9;
    CHECK_FALSE(grid.is_monotone());
  }
}

TEST_CASE("pool-adjacent-violators via smoothing: averaged plateau") {
  // A single decreasing line along e with equal weights pools into its mean.
  UncertaintyGrid grid;
  grid.n_axis = {2};
  grid.e_axis = {0.5, 1.5, 2.5};
  grid.beta_axis = {0.5};
  grid.sigma = {0.5, 0.4, 0.45};
  grid.counts = {100.0, 100.0, 100.0};
  monotone_smooth(grid);
  CHECK(grid.smoothed);
  // 0.5 and 0.4 pool to 0.45, which then ties with the final 0.45.
  CHECK(grid.at(0, 0, 0) == doctest::Approx(0.45));
  CHECK(grid.at(0, 1, 0) == doctest::Approx(0.45));
  CHECK(grid.at(0, 2, 0) == doctest::Approx(0.45));
}

TEST_CASE("smoothing weights distrust sparse cells") {
  UncertaintyGrid grid;
  grid.n_axis = {2};
  grid.e_axis = {0.5, 1.5};
  grid.beta_axis = {0.5};
  // The out-of-order first cell has a negligible count, so the trusted second
  // cell dominates the pooled value.
  grid.sigma = {0.9, 0.1};
  grid.counts = {1.0, 1000.0};
  monotone_smooth(grid);
  CHECK(grid.at(0, 0, 0) == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(grid.at(0, 1, 0) == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("smoothing output is always exactly monotone") {
  Rng rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    UncertaintyGrid grid;
    grid.n_axis = {2, 3, 4, 5};
    grid.e_axis = {0.5, 1.5, 2.5, 3.5, 4.5};
    grid.beta_axis = {1.0, 3.0, 5.0};
    grid.sigma.resize(grid.cell_count());
    grid.counts.resize(grid.cell_count());
    for (size_t i = 0; i < grid.cell_count(); ++i) {
      // Mix of empty, sparse, and trusted cells with random values.
      const double roll = rng.uniform();
      if (roll < 0.3) {
        grid.sigma[i] = std::numeric_limits<double>::quiet_NaN();
        grid.counts[i] = 0.0;
      } else {
        grid.sigma[i] = rng.uniform(0.0, 1.2);
        grid.counts[i] = roll < 0.5 ? 3.0 : 200.0;
      }
    }
    monotone_smooth(grid);
    CHECK(grid.is_monotone());
    for (double v : grid.sigma) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("smoothing is idempotent") {
  Rng rng(4321);
  UncertaintyGrid grid;
  grid.n_axis = {2, 3, 4};
  grid.e_axis = {0.5, 1.5, 2.5};
  grid.beta_axis = {1.0, 2.0};
  grid.sigma.resize(grid.cell_count());
  grid.counts.assign(grid.cell_count(), 50.0);
  for (double& v : grid.sigma) v = rng.uniform(0.0, 1.0);
  monotone_smooth(grid);
  const std::vector<double> once = grid.sigma;
  monotone_smooth(grid);
  for (size_t i = 0; i < once.size(); ++i) CHECK(grid.sigma[i] == doctest::Approx(once[i]).epsilon(1e-12));
}

TEST_CASE("smoothing an entirely empty grid throws") {
  UncertaintyGrid grid = make_default_grid();
  CHECK_THROWS_AS(monotone_smooth(grid), AllCellsEmpty);
}

TEST_CASE("trilinear interpolation: node identity") {
  const UncertaintyGrid grid = toy_grid();
  for (size_t in = 0; in < grid.n_axis.size(); ++in) {
    for (size_t ie = 0; ie < grid.e_axis.size(); ++ie) {
      for (size_t ib = 0; ib < grid.beta_axis.size(); ++ib) {
        const double v = estimate_sigma(grid, static_cast<int>(grid.n_axis[in]),
                                        grid.e_axis[ie], grid.beta_axis[ib]);
        CHECK(v == doctest::Approx(grid.at(in, ie, ib)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("trilinear interpolation: midpoints and bounds") {
  const UncertaintyGrid grid = toy_grid();
  // Halfway along e between two nodes, other coordinates on nodes.
  const double mid = estimate_sigma(grid, 3, 2.0, 2.0);
  CHECK(mid == doctest::Approx(0.5 * (grid.at(1, 0, 0) + grid.at(1, 1, 0))).epsilon(1e-12));

  // Any in-range query stays inside the value range of the grid.
  Rng rng(5);
  const double lo = *std::min_element(grid.sigma.begin(), grid.sigma.end());
  const double hi = *std::max_element(grid.sigma.begin(), grid.sigma.end());
  for (int trial = 0; trial < 500; ++trial) {
    const double v = estimate_sigma(grid, 2 + rng.uniform_int(3), rng.uniform(1.0, 5.0),
                                    rng.uniform(2.0, 6.0));
    CHECK(v >= lo - 1e-12);
    CHECK(v <= hi + 1e-12);
  }
}

TEST_CASE("out-of-range queries clamp to the boundary") {
  const UncertaintyGrid grid = toy_grid();
  CHECK(estimate_sigma(grid, 200, 35.0, 80.0) ==
        doctest::Approx(grid.at(2, 2, 1)).epsilon(1e-12));
  CHECK(estimate_sigma(grid, 1, -5.0, -1.0) ==
        doctest::Approx(grid.at(0, 0, 0)).epsilon(1e-12));
}

TEST_CASE("estimate_sigma validates the grid shape") {
  UncertaintyGrid grid = toy_grid();
  grid.sigma.pop_back();
  CHECK_THROWS_AS(estimate_sigma(grid, 3, 1.0, 2.0), InvalidGrid);
}

TEST_CASE("sampled parallax never exceeds the exhaustive maximum") {
  Rng scene_rng(606);
  for (int trial = 0; trial < 50; ++trial) {
    const SyntheticScene scene = generate_scene(12, 3.0, 1.0, 0.0, scene_rng);
    const TriangulationProblem problem = to_problem(scene);
    std::vector<int> all(12);
    std::iota(all.begin(), all.end(), 0);
    std::vector<Vec3> rays;
    for (int i : all) rays.push_back(problem.ray(i));
    const double exact = max_parallax_exhaustive(rays);
    Rng rng(trial);
    const double sampled = sampled_max_parallax(problem, all, 100, rng);
    CHECK(sampled <= exact + 1e-12);
    CHECK(sampled >= 0.0);
  }
}

TEST_CASE("sampled parallax with two inliers is exact") {
  Rng scene_rng(607);
  const SyntheticScene scene = generate_scene(2, 2.0, 0.0, 0.0, scene_rng);
  const TriangulationProblem problem = to_problem(scene);
  const std::vector<int> both = {0, 1};
  const std::vector<Vec3> rays = {problem.ray(0), problem.ray(1)};
  Rng rng(1);
  CHECK(sampled_max_parallax(problem, both, 100, rng) ==
        doctest::Approx(max_parallax_exhaustive(rays)).epsilon(1e-12));

  const std::vector<int> one = {0};
  CHECK_THROWS_AS(sampled_max_parallax(problem, one, 100, rng), TooFewInliers);
}

TEST_CASE("learn_grid rejects an empty specification") {
  CHECK_THROWS_AS(learn_grid({}, 0), EmptySpec);
}

TEST_CASE("learned grid is monotone, bounded and deterministic") {
  std::vector<SimConfig> spec = {
      {4, 2.0, 5.0, 0.5, 3.0, 400},
      {8, 2.0, 5.0, 0.5, 3.0, 400},
  };
  const UncertaintyGrid a = learn_grid(spec, 42);
  CHECK(a.smoothed);
  CHECK(a.is_monotone());
  for (double v : a.sigma) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const UncertaintyGrid b = learn_grid(spec, 42);
  CHECK(a.sigma == b.sigma);
  CHECK(a.counts == b.counts);
}

TEST_CASE("learned grid orders noise levels correctly") {
  // Same geometry, different pixel noise: the noisy grid cannot predict less
  // 3D error than the near-clean one at matched queries.
  std::vector<SimConfig> quiet = {{6, 2.0, 4.0, 0.2, 0.5, 500}};
  std::vector<SimConfig> loud = {{6, 2.0, 4.0, 4.0, 6.0, 500}};
  const UncertaintyGrid gq = learn_grid(quiet, 7);
  const UncertaintyGrid gl = learn_grid(loud, 7);
  // Compare at the populated heart of each grid: mean prediction over a
  // central query box.
  double sq = 0.0, sl = 0.0;
  int cnt = 0;
  for (double e : {0.5, 1.5, 3.0, 6.0}) {
    for (double beta : {5.0, 10.0, 15.0}) {
      sq += estimate_sigma(gq, 6, e, beta);
      sl += estimate_sigma(gl, 6, e, beta);
      ++cnt;
    }
  }
  CHECK(sl / cnt >= sq / cnt);
}
