#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvtri/config.hpp"
#include "mvtri/geometry.hpp"
#include "mvtri/rng.hpp"

namespace mvtri {

// Regular 3D grid mapping (inlier count, mean 2D error, max parallax angle)
// to RMS 3D error in geometric-span units, truncated at 1.
//
// Storage is flattened in n-major order, then e, then beta:
//   index = (in * e_axis.size() + ie) * beta_axis.size() + ib.
struct UncertaintyGrid {
  std::vector<double> n_axis;     // ascending view counts
  std::vector<double> e_axis;     // bin centers, pixels
  std::vector<double> beta_axis;  // bin centers, degrees
  std::vector<double> sigma;
  std::vector<double> counts;     // per-cell sample counts
  bool smoothed = false;
  std::string meta;               // free-form JSON blob (sim + smoothing settings)

  size_t cell_count() const { return n_axis.size() * e_axis.size() * beta_axis.size(); }
  size_t index(size_t in, size_t ie, size_t ib) const {
    return (in * e_axis.size() + ie) * beta_axis.size() + ib;
  }
  double& at(size_t in, size_t ie, size_t ib) { return sigma[index(in, ie, ib)]; }
  double at(size_t in, size_t ie, size_t ib) const { return sigma[index(in, ie, ib)]; }

  // Non-decreasing along e, non-increasing along n and beta, within tol.
  bool is_monotone(double tol = 0.0) const;
};

// Integer view counts 2..50, 20 one-pixel bins over [0, 20] px and 20
// one-degree bins over [0, 20] deg, node values at bin centers.
UncertaintyGrid make_default_grid();

// One simulation configuration: n cameras, point distance drawn uniformly
// from [d_lo, d_hi], pixel noise from [sigma_lo, sigma_hi], `runs` scenes.
struct SimConfig {
  int n = 2;
  double d_lo = 3.0, d_hi = 3.0;
  double sigma_lo = 3.0, sigma_hi = 3.0;
  int runs = 0;
};

// Simulates outlier-free scenes, triangulates each with a DLT solve followed
// by Gauss-Newton on the full (frozen) view set, aggregates RMS 3D error per
// cell, truncates at 1, fills unsimulated view counts by interpolation along
// the n axis and monotone-smooths the result. Throws EmptySpec.
UncertaintyGrid learn_grid(std::span<const SimConfig> spec, uint64_t rng_seed);

// Fills empty cells and enforces the three monotonicity constraints exactly
// (count-weighted pool-adjacent-violators swept per axis, then a final
// projection pass). Idempotent. Throws AllCellsEmpty.
void monotone_smooth(UncertaintyGrid& grid);

// Sampled variant of the max parallax angle: draws up to delta_pair random
// pairs from the inlier set. Degrees. Throws TooFewInliers.
double sampled_max_parallax(const TriangulationProblem& problem, std::span<const int> inliers,
                            int delta_pair, Rng& rng);

// Clamped trilinear interpolation at (inlier_count, mean_e2d, beta_max_deg).
// Throws InvalidGrid.
double estimate_sigma(const UncertaintyGrid& grid, int inlier_count, double mean_e2d,
                      double beta_max_deg);

}  // namespace mvtri
