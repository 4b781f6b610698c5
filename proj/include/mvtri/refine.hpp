#pragma once

#include <span>
#include <vector>

#include "mvtri/config.hpp"
#include "mvtri/geometry.hpp"

namespace mvtri {

struct RefinementState {
  Vec3 x_est = Vec3::Zero();
  std::vector<int> inliers;
  double mean_e2d = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool collapsed = false;  // inlier set fell below 2 or the solve degenerated
};

// 2x3 Jacobian of the per-view residual pair (M7_i, M8_i) w.r.t. the point,
// from the precomputed helper matrix: J = depth^-2 * vec^-1_{2x3}(A^T x~).
// Throws SingularDepth.
Eigen::Matrix<double, 2, 3> jacobian_block(const CameraView& view, const Vec3& x_est);

// Single homogeneous linear solve over the given view set (smallest singular
// vector of the stacked normalized-coordinate rows). Throws PointAtInfinity.
Vec3 dlt_solve(const TriangulationProblem& problem, std::span<const int> views);

// Gauss-Newton with the inlier set fixed (no membership updates); used for
// grid learning and the DLT-vs-GN comparison.
RefinementState refine_gn_fixed(const TriangulationProblem& problem, const Vec3& x_init,
                                std::span<const int> views, const RansacConfig& config);

// The three refiners with iterative inlier-set update, each capped at 10
// iterations.
RefinementState refine_gn(const TriangulationProblem& problem, const Vec3& x_init,
                          std::span<const int> inliers_init, const RansacConfig& config);
RefinementState refine_dlt(const TriangulationProblem& problem, const Vec3& x_init,
                           std::span<const int> inliers_init, const RansacConfig& config);
RefinementState refine_linls(const TriangulationProblem& problem, const Vec3& x_init,
                             std::span<const int> inliers_init, const RansacConfig& config);

}  // namespace mvtri
