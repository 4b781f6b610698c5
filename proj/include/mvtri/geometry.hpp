#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace mvtri {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Mat46 = Eigen::Matrix<double, 4, 6>;
using Mat4X = Eigen::Matrix<double, 4, Eigen::Dynamic>;
using RowVecX = Eigen::RowVectorXd;

// A calibrated, posed camera together with all point-independent
// precomputations used by the fast reprojection and Jacobian formulas.
struct CameraView {
  int id = -1;
  Mat3 K = Mat3::Identity();
  Mat3 R = Mat3::Identity();  // world -> camera
  Vec3 t = Vec3::Zero();
  Mat34 P = Mat34::Zero();    // [R | t]
  Vec3 c_w = Vec3::Zero();    // -R^T t
  Mat46 A = Mat46::Zero();    // Jacobian helper, columns a_1..a_6

  // Write-once memo of the unit world ray of this view's observation.
  // Unset means "not yet computed".
  mutable std::optional<Vec3> ray_cache;
};

struct Observation {
  int view_id = -1;
  Vec2 u = Vec2::Zero();  // pixels
};

// Aligned views and observations for one 3D point, with the
// point-independent row/column matrices precomputed.
struct TriangulationProblem {
  std::vector<CameraView> views;
  std::vector<Observation> observations;
  RowVecX M1, M2;      // 1 x n
  Mat4X M3, M4, M5;    // 4 x n

  int size() const { return static_cast<int>(views.size()); }

  // Unit world ray of view i's observation, memoized in the view.
  const Vec3& ray(int i) const;
};

// Per-candidate-point score: fast reprojection errors and the inlier set.
struct PointScore {
  RowVecX M6, M7, M8;  // 1 x n
  RowVecX e2d;         // pixels, +inf where the depth term vanishes
  std::vector<int> inliers;  // ascending view indices
};

// Validates (K, R, t) and fills every derived field.
// Throws NonRotation, BadIntrinsics.
CameraView build_view(int id, const Mat3& K, const Mat3& R, const Vec3& t);

// Throws SizeMismatch, TooFewViews.
TriangulationProblem precompute_problem(std::vector<CameraView> views,
                                        std::vector<Observation> observations);

PointScore score_point(const TriangulationProblem& problem, const Vec3& x_est, double delta_2d);

// f_hat^w = unit(R^T K^-1 u~), memoized into view.ray_cache.
// Throws DegenerateRay.
Vec3 world_ray(const CameraView& view, const Vec2& u);

// Exhaustive maximum pairwise parallax angle, degrees in [0, 90].
// Throws TooFewRays.
double max_parallax_exhaustive(std::span<const Vec3> rays);

// Mean of e2d over the inlier set; +inf when the set is empty.
double mean_inlier_error(const PointScore& score);

}  // namespace mvtri
