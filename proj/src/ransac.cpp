#include "mvtri/ransac.hpp"

#include <cmath>
#include <functional>
#include <optional>

#include "mvtri/errors.hpp"
#include "mvtri/refine.hpp"
#include "mvtri/rng.hpp"
#include "mvtri/uncertainty.hpp"

namespace mvtri {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(TriStatus status) {
  switch (status) {
    case TriStatus::Ok: return "Ok";
    case TriStatus::NoHypothesis: return "NoHypothesis";
    case TriStatus::RefinementCollapsed: return "RefinementCollapsed";
  }
  return "?";
}

double msac_cost(const RowVecX& e2d, const std::vector<int>& inliers, double delta_2d) {
  double cost = static_cast<double>(e2d.size() - static_cast<long>(inliers.size())) *
                delta_2d * delta_2d;
  for (int i : inliers) cost += e2d(i) * e2d(i);
  return cost;
}

int required_samples(int inlier_count, int n, double eta, int max_cap) {
  const double eps = static_cast<double>(std::max(inlier_count, 2)) / static_cast<double>(n);
  if (eps >= 1.0) return 0;
  const double m = std::log(1.0 - eta) / std::log(1.0 - eps * eps);
  if (!std::isfinite(m)) return max_cap;
  return static_cast<int>(std::clamp(std::ceil(m), 0.0, static_cast<double>(max_cap)));
}

namespace {

// Shared RANSAC loop; `hypothesize` maps a sampled pair to a candidate point
// (or nothing, when the pair is rejected).
TriangulationResult ransac_loop(
    const TriangulationProblem& problem, const RansacConfig& config, const UncertaintyGrid* grid,
    Rng& rng,
    const std::function<std::optional<Vec3>(int, int, StageCounters&)>& hypothesize) {
  const int n = problem.size();
  const long long pair_budget =
      std::min<long long>(std::max<long long>(static_cast<long long>(n) * (n - 1) / 2, 1),
                          config.max_hypotheses);

  TriangulationResult result;
  long long m_min = pair_budget;
  double cost_min = kInf;
  Vec3 best_x = Vec3::Zero();
  PointScore best_score;

  for (long long m = 0; m < m_min; ) {
    ++m;
    ++result.diag.hypotheses_drawn;
    const auto [j, k] = rng.distinct_pair(n);
    const std::optional<Vec3> x = hypothesize(j, k, result.diag.stages);
    if (!x) continue;
    PointScore score = score_point(problem, *x, config.delta_2d);
    const double cost = msac_cost(score.e2d, score.inliers, config.delta_2d);
    if (cost >= cost_min) continue;
    cost_min = cost;
    best_x = *x;
    best_score = std::move(score);
    m_min = std::min<long long>(
        pair_budget, required_samples(static_cast<int>(best_score.inliers.size()), n,
                                      config.eta, config.max_hypotheses));
  }

  if (cost_min == kInf) {
    result.status = TriStatus::NoHypothesis;
    return result;
  }

  result.status = TriStatus::Ok;
  result.x_est = best_x;
  result.inliers = best_score.inliers;
  result.mean_e2d = mean_inlier_error(best_score);

  if (config.refiner != Refiner::None) {
    try {
      RefinementState state;
      switch (config.refiner) {
        case Refiner::GN: state = refine_gn(problem, best_x, best_score.inliers, config); break;
        case Refiner::DLT: state = refine_dlt(problem, best_x, best_score.inliers, config); break;
        case Refiner::LinLS:
          state = refine_linls(problem, best_x, best_score.inliers, config);
          break;
        case Refiner::None: break;
      }
      result.diag.refine_iterations = state.iterations;
      if (state.collapsed) {
        result.status = TriStatus::RefinementCollapsed;
      }
      if (!state.inliers.empty() || state.collapsed) {
        result.x_est = state.x_est;
        result.inliers = state.inliers;
        result.mean_e2d = state.mean_e2d;
      }
    } catch (const Error&) {
      // Degenerate solve: keep the RANSAC hypothesis, flag the refinement.
      result.status = TriStatus::RefinementCollapsed;
    }
  }

  if (grid && result.inliers.size() >= 2) {
    const double beta = sampled_max_parallax(problem, result.inliers, config.delta_pair, rng);
    result.sigma_3d = estimate_sigma(*grid, static_cast<int>(result.inliers.size()),
                                     result.mean_e2d, beta);
  }
  return result;
}

}  // namespace

TriangulationResult triangulate(const TriangulationProblem& problem, const RansacConfig& config,
                                const UncertaintyGrid* grid) {
  Rng rng(config.seed);
  auto hypothesize = [&](int j, int k, StageCounters& counters) -> std::optional<Vec3> {
    const MidpointOutcome outcome = screen_and_midpoint(problem, j, k, config, &counters);
    if (outcome.status != MidpointStatus::Accepted) return std::nullopt;
    return outcome.x_mid;
  };
  return ransac_loop(problem, config, grid, rng, hypothesize);
}

TriangulationResult baseline_triangulate(const TriangulationProblem& problem,
                                         const RansacConfig& config,
                                         const UncertaintyGrid* grid) {
  Rng rng(config.seed);
  const double limit = config.delta_2d * config.delta_2d;
  auto hypothesize = [&](int j, int k, StageCounters& counters) -> std::optional<Vec3> {
    ++counters.midpoints_computed;  // every pair pays the full two-view solve
    Vec3 x;
    try {
      const int pair[2] = {j, k};
      x = dlt_solve(problem, pair);
    } catch (const PointAtInfinity&) {
      ++counters.rejected_cheirality;
      return std::nullopt;
    }
    const Vec4 x_h(x.x(), x.y(), x.z(), 1.0);
    for (int i : {j, k}) {
      const CameraView& v = problem.views[i];
      const Vec3 xc = v.P * x_h;
      if (xc.z() < 0.0) {
        ++counters.rejected_cheirality;
        return std::nullopt;
      }
      const Vec2& u = problem.observations[i].u;
      const Vec3 e = Vec3(u.x(), u.y(), 1.0) - (v.K * xc) / xc.z();
      if (e.squaredNorm() > limit) {
        ++counters.rejected_reproj;
        return std::nullopt;
      }
    }
    ++counters.accepted;
    return x;
  };
  return ransac_loop(problem, config, grid, rng, hypothesize);
}

}  // namespace mvtri
