#include "mvtri/geometry.hpp"

#include <cmath>
#include <limits>

#include "mvtri/errors.hpp"

namespace mvtri {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Columns a_1..a_6 of the per-view Jacobian helper matrix, built from the
// b-vectors of the rotation/translation entries.
Mat46 jacobian_helper(const Mat3& K, const Mat3& R, const Vec3& t) {
  auto row4 = [](double a, double b, double c, double d) { return Vec4(a, b, c, d); };
  const Vec4 b1 = R(0, 0) * row4(0, R(2, 1), R(2, 2), t(2)) - R(2, 0) * row4(0, R(0, 1), R(0, 2), t(0));
  const Vec4 b2 = R(1, 0) * row4(0, R(2, 1), R(2, 2), t(2)) - R(2, 0) * row4(0, R(1, 1), R(1, 2), t(1));
  const Vec4 b3 = R(0, 1) * row4(R(2, 0), 0, R(2, 2), t(2)) - R(2, 1) * row4(R(0, 0), 0, R(0, 2), t(0));
  const Vec4 b4 = R(1, 1) * row4(R(2, 0), 0, R(2, 2), t(2)) - R(2, 1) * row4(R(1, 0), 0, R(1, 2), t(1));
  const Vec4 b5 = R(0, 2) * row4(R(2, 0), R(2, 1), 0, t(2)) - R(2, 2) * row4(R(0, 0), R(0, 1), 0, t(0));
  const Vec4 b6 = R(1, 2) * row4(R(2, 0), R(2, 1), 0, t(2)) - R(2, 2) * row4(R(1, 0), R(1, 1), 0, t(1));

  Mat46 A;
  A.col(0) = K(0, 0) * b1 + K(0, 1) * b2;
  A.col(1) = K(1, 0) * b1 + K(1, 1) * b2;
  A.col(2) = K(0, 0) * b3 + K(0, 1) * b4;
  A.col(3) = K(1, 0) * b3 + K(1, 1) * b4;
  A.col(4) = K(0, 0) * b5 + K(0, 1) * b6;
  A.col(5) = K(1, 0) * b5 + K(1, 1) * b6;
  return A;
}

}  // namespace

CameraView build_view(int id, const Mat3& K, const Mat3& R, const Vec3& t) {
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(R.determinant() - 1.0) > 1e-9) {
    throw NonRotation("view " + std::to_string(id) + ": R is not a rotation matrix");
  }
  if (K(2, 0) != 0.0 || K(2, 1) != 0.0 || K(2, 2) != 1.0) {
    throw BadIntrinsics("view " + std::to_string(id) + ": third row of K must be [0, 0, 1]");
  }
  CameraView view;
  view.id = id;
  view.K = K;
  view.R = R;
  view.t = t;
  view.P.leftCols<3>() = R;
  view.P.col(3) = t;
  view.c_w = -R.transpose() * t;
  view.A = jacobian_helper(K, R, t);
  return view;
}

Vec3 world_ray(const CameraView& view, const Vec2& u) {
  if (view.ray_cache) return *view.ray_cache;
  const Vec3 f = view.K.inverse() * Vec3(u.x(), u.y(), 1.0);
  const double norm = f.norm();
  if (norm == 0.0) throw DegenerateRay("view " + std::to_string(view.id) + ": zero backprojected ray");
  const Vec3 ray = (view.R.transpose() * f) / norm;
  view.ray_cache = ray;
  return ray;
}

const Vec3& TriangulationProblem::ray(int i) const {
  if (!views[i].ray_cache) world_ray(views[i], observations[i].u);
  return *views[i].ray_cache;
}

TriangulationProblem precompute_problem(std::vector<CameraView> views,
                                        std::vector<Observation> observations) {
  if (views.size() != observations.size()) {
    throw SizeMismatch("views and observations must be index-aligned (" +
                       std::to_string(views.size()) + " vs " + std::to_string(observations.size()) + ")");
  }
  if (views.size() < 2) throw TooFewViews("need at least 2 views");

  TriangulationProblem problem;
  const int n = static_cast<int>(views.size());
  problem.views = std::move(views);
  problem.observations = std::move(observations);
  problem.M1.resize(n);
  problem.M2.resize(n);
  problem.M3.resize(4, n);
  problem.M4.resize(4, n);
  problem.M5.resize(4, n);
  for (int i = 0; i < n; ++i) {
    const CameraView& v = problem.views[i];
    const Vec2& u = problem.observations[i].u;
    problem.M1(i) = v.K(0, 2) - u.x();
    problem.M2(i) = v.K(1, 2) - u.y();
    problem.M3.col(i) = v.K(0, 0) * v.P.row(0).transpose() + v.K(0, 1) * v.P.row(1).transpose();
    problem.M4.col(i) = v.K(1, 0) * v.P.row(0).transpose() + v.K(1, 1) * v.P.row(1).transpose();
    problem.M5.col(i) = v.P.row(2).transpose();
  }
  return problem;
}

PointScore score_point(const TriangulationProblem& problem, const Vec3& x_est, double delta_2d) {
  const int n = problem.size();
  const Vec4 x_h(x_est.x(), x_est.y(), x_est.z(), 1.0);

  PointScore score;
  score.M6 = x_h.transpose() * problem.M5;
  score.M7.resize(n);
  score.M8.resize(n);
  score.e2d.resize(n);
  const RowVecX num7 = x_h.transpose() * problem.M3;
  const RowVecX num8 = x_h.transpose() * problem.M4;
  for (int i = 0; i < n; ++i) {
    if (score.M6(i) == 0.0) {
      // Point on the principal plane: projection undefined.
      score.M7(i) = kInf;
      score.M8(i) = kInf;
      score.e2d(i) = kInf;
      continue;
    }
    score.M7(i) = problem.M1(i) + num7(i) / score.M6(i);
    score.M8(i) = problem.M2(i) + num8(i) / score.M6(i);
    score.e2d(i) = std::sqrt(score.M7(i) * score.M7(i) + score.M8(i) * score.M8(i));
    if (score.e2d(i) < delta_2d && score.M6(i) > 0.0) score.inliers.push_back(i);
  }
  return score;
}

double max_parallax_exhaustive(std::span<const Vec3> rays) {
  if (rays.size() < 2) throw TooFewRays("need at least 2 rays");
  double p_min = 1.0;
  for (size_t j = 0; j + 1 < rays.size(); ++j) {
    for (size_t k = j + 1; k < rays.size(); ++k) {
      p_min = std::min(p_min, std::abs(rays[j].dot(rays[k])));
    }
  }
  return std::acos(std::clamp(p_min, 0.0, 1.0)) * 180.0 / M_PI;
}

double mean_inlier_error(const PointScore& score) {
  if (score.inliers.empty()) return kInf;
  double sum = 0.0;
  for (int i : score.inliers) sum += score.e2d(i);
  return sum / static_cast<double>(score.inliers.size());
}

}  // namespace mvtri
