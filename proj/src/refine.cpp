#include "mvtri/refine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mvtri/errors.hpp"

namespace mvtri {

namespace {

constexpr int kMaxIterations = 10;
constexpr double kMinDepth = 1e-12;

std::vector<int> sorted(std::span<const int> indices) {
  std::vector<int> out(indices.begin(), indices.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Rows of the algebraic system for view i in normalized camera coordinates:
//   f_x * P_row3 - P_row1,  f_y * P_row3 - P_row2.
void algebraic_rows(const CameraView& v, const Vec2& u, Eigen::RowVector4d& row_x,
                    Eigen::RowVector4d& row_y) {
  const Vec3 f = v.K.inverse() * Vec3(u.x(), u.y(), 1.0);
  row_x = f.x() * v.P.row(2) - v.P.row(0);
  row_y = f.y() * v.P.row(2) - v.P.row(1);
}

}  // namespace

Eigen::Matrix<double, 2, 3> jacobian_block(const CameraView& view, const Vec3& x_est) {
  const Vec4 x_h(x_est.x(), x_est.y(), x_est.z(), 1.0);
  const double depth = view.P.row(2) * x_h;
  if (std::abs(depth) < kMinDepth) {
    throw SingularDepth("view " + std::to_string(view.id) + ": point on the principal plane");
  }
  const Eigen::Matrix<double, 6, 1> v = view.A.transpose() * x_h;
  Eigen::Matrix<double, 2, 3> J;
  // vec^-1_{2x3}, column-major
  J(0, 0) = v(0);
  J(1, 0) = v(1);
  J(0, 1) = v(2);
  J(1, 1) = v(3);
  J(0, 2) = v(4);
  J(1, 2) = v(5);
  return J / (depth * depth);
}

Vec3 dlt_solve(const TriangulationProblem& problem, std::span<const int> views) {
  Eigen::MatrixXd design(2 * views.size(), 4);
  int row = 0;
  for (int i : views) {
    Eigen::RowVector4d rx, ry;
    algebraic_rows(problem.views[i], problem.observations[i].u, rx, ry);
    design.row(row++) = rx;
    design.row(row++) = ry;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const Vec4 x_h = svd.matrixV().col(3);
  if (std::abs(x_h(3)) < 1e-12 * x_h.norm()) {
    throw PointAtInfinity("homogeneous solution has vanishing scale");
  }
  return x_h.head<3>() / x_h(3);
}

namespace {

// One Gauss-Newton step on the residuals (M7_i, M8_i) over the given set.
// Returns false when the normal matrix is rank-deficient.
bool gn_step(const TriangulationProblem& problem, const PointScore& score,
             std::span<const int> set, Vec3& x) {
  Mat3 JtJ = Mat3::Zero();
  Vec3 Jtr = Vec3::Zero();
  for (int i : set) {
    const Eigen::Matrix<double, 2, 3> Ji = jacobian_block(problem.views[i], x);
    const Vec2 ri(score.M7(i), score.M8(i));
    JtJ += Ji.transpose() * Ji;
    Jtr += Ji.transpose() * ri;
  }
  Eigen::FullPivLU<Mat3> lu(JtJ);
  if (!lu.isInvertible()) return false;
  x -= lu.solve(Jtr);
  return true;
}

}  // namespace

RefinementState refine_gn_fixed(const TriangulationProblem& problem, const Vec3& x_init,
                                std::span<const int> views, const RansacConfig& config) {
  RefinementState state;
  state.x_est = x_init;
  state.inliers = sorted(views);
  double mean = 0.0;
  PointScore score = score_point(problem, state.x_est, config.delta_2d);
  while (state.iterations < kMaxIterations) {
    ++state.iterations;
    const double mean_prev = mean;
    if (!gn_step(problem, score, state.inliers, state.x_est)) {
      state.collapsed = true;
      break;
    }
    score = score_point(problem, state.x_est, config.delta_2d);
    double sum = 0.0;
    for (int i : state.inliers) sum += score.e2d(i);
    mean = sum / static_cast<double>(state.inliers.size());
    if (std::abs(mean - mean_prev) < config.delta_update) {
      state.converged = true;
      break;
    }
  }
  state.mean_e2d = mean;
  return state;
}

RefinementState refine_gn(const TriangulationProblem& problem, const Vec3& x_init,
                          std::span<const int> inliers_init, const RansacConfig& config) {
  RefinementState state;
  state.x_est = x_init;
  state.inliers = sorted(inliers_init);
  if (state.inliers.size() < 2) {
    state.collapsed = true;
    return state;
  }
  PointScore score = score_point(problem, state.x_est, config.delta_2d);
  {
    double sum = 0.0;
    for (int i : state.inliers) sum += score.e2d(i);
    state.mean_e2d = sum / static_cast<double>(state.inliers.size());
  }
  double mean_conv = 0.0;  // convergence tracker, zero-initialized
  while (state.iterations < kMaxIterations) {
    const RefinementState prev = state;
    const double mean_prev = mean_conv;
    ++state.iterations;
    Vec3 x = state.x_est;
    if (!gn_step(problem, score, state.inliers, x)) {
      state.collapsed = true;
      return state;
    }
    score = score_point(problem, x, config.delta_2d);
    if (score.inliers.size() < 2) {
      // Return the last state that still had a usable support set.
      RefinementState out = prev;
      out.iterations = state.iterations;
      out.collapsed = true;
      return out;
    }
    const bool same_set = score.inliers == state.inliers;
    state.x_est = x;
    state.inliers = score.inliers;
    state.mean_e2d = mean_inlier_error(score);
    mean_conv = state.mean_e2d;
    if (same_set && std::abs(mean_conv - mean_prev) < config.delta_update) {
      state.converged = true;
      break;
    }
  }
  return state;
}

namespace {

// Shared outer loop of the two linear refiners.
template <typename Solve>
RefinementState refine_linear(const TriangulationProblem& problem,
                              std::span<const int> inliers_init, const RansacConfig& config,
                              Solve solve) {
  RefinementState state;
  state.inliers = sorted(inliers_init);
  if (state.inliers.size() < 2) {
    state.collapsed = true;
    return state;
  }
  while (state.iterations < kMaxIterations) {
    const RefinementState prev = state;
    ++state.iterations;
    const Vec3 x = solve(state.inliers);
    const PointScore score = score_point(problem, x, config.delta_2d);
    if (score.inliers.size() < 2) {
      RefinementState out = prev;
      out.iterations = state.iterations;
      out.collapsed = true;
      return out;
    }
    const bool same_set = score.inliers == state.inliers;
    state.x_est = x;
    state.inliers = score.inliers;
    state.mean_e2d = mean_inlier_error(score);
    if (same_set) {
      state.converged = true;
      break;
    }
  }
  return state;
}

}  // namespace

RefinementState refine_dlt(const TriangulationProblem& problem, const Vec3& /*x_init*/,
                           std::span<const int> inliers_init, const RansacConfig& config) {
  return refine_linear(problem, inliers_init, config,
                       [&](std::span<const int> set) { return dlt_solve(problem, set); });
}

RefinementState refine_linls(const TriangulationProblem& problem, const Vec3& /*x_init*/,
                             std::span<const int> inliers_init, const RansacConfig& config) {
  auto solve = [&](std::span<const int> set) {
    Mat3 AtA = Mat3::Zero();
    Vec3 Atb = Vec3::Zero();
    for (int i : set) {
      Eigen::RowVector4d rx, ry;
      algebraic_rows(problem.views[i], problem.observations[i].u, rx, ry);
      // Split [a | b]: a x = -b with the homogeneous scale fixed to 1.
      for (const auto& r : {rx, ry}) {
        const Vec3 a = r.head<3>().transpose();
        AtA += a * a.transpose();
        Atb += a * (-r(3));
      }
    }
    Eigen::FullPivLU<Mat3> lu(AtA);
    if (!lu.isInvertible()) throw SingularSystem("rank-deficient normal matrix");
    return Vec3(lu.solve(Atb));
  };
  return refine_linear(problem, inliers_init, config, solve);
}

}  // namespace mvtri
