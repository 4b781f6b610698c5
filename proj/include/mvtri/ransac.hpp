#pragma once

#include <cstdint>
#include <vector>

#include "mvtri/config.hpp"
#include "mvtri/geometry.hpp"
#include "mvtri/midpoint.hpp"

namespace mvtri {

struct UncertaintyGrid;

enum class TriStatus { Ok, NoHypothesis, RefinementCollapsed };

const char* to_string(TriStatus status);

struct Diagnostics {
  uint64_t hypotheses_drawn = 0;
  StageCounters stages;
  int refine_iterations = 0;
};

struct TriangulationResult {
  Vec3 x_est = Vec3::Zero();
  std::vector<int> inliers;
  double mean_e2d = std::numeric_limits<double>::infinity();
  double sigma_3d = std::numeric_limits<double>::infinity();
  TriStatus status = TriStatus::NoHypothesis;
  Diagnostics diag;
};

// Truncated squared-residual cost: inliers contribute e2d^2, all other views
// delta_2d^2.
double msac_cost(const RowVecX& e2d, const std::vector<int>& inliers, double delta_2d);

// Adaptive stopping: ceil(log(1 - eta) / log(1 - eps^2)) with
// eps = max(inlier_count, 2) / n; 0 when eps = 1, clamped to [0, max_cap].
int required_samples(int inlier_count, int n, double eta, int max_cap);

// Full pipeline: prescreened two-view RANSAC over midpoint hypotheses, MSAC
// scoring over all views, adaptive stopping, then the configured refiner and
// (when a grid is given) the interpolated 3D uncertainty.
TriangulationResult triangulate(const TriangulationProblem& problem, const RansacConfig& config,
                                const UncertaintyGrid* grid = nullptr);

// Comparator without prescreening: every sampled pair is triangulated by the
// two-view DLT, then cheirality/reprojection-checked and scored identically.
TriangulationResult baseline_triangulate(const TriangulationProblem& problem,
                                         const RansacConfig& config,
                                         const UncertaintyGrid* grid = nullptr);

}  // namespace mvtri
