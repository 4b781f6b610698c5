#include "mvtri/midpoint.hpp"

#include <cmath>

#include "mvtri/errors.hpp"

namespace mvtri {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinBaseline = 1e-12;
}  // namespace

const char* to_string(MidpointStatus status) {
  switch (status) {
    case MidpointStatus::Accepted: return "Accepted";
    case MidpointStatus::RejectedEpipolar: return "RejectedEpipolar";
    case MidpointStatus::RejectedParallax: return "RejectedParallax";
    case MidpointStatus::RejectedDegeneracy: return "RejectedDegeneracy";
    case MidpointStatus::RejectedAnchorSign: return "RejectedAnchorSign";
    case MidpointStatus::RejectedCheirality: return "RejectedCheirality";
    case MidpointStatus::RejectedReprojection: return "RejectedReprojection";
    case MidpointStatus::RejectedZeroBaseline: return "RejectedZeroBaseline";
  }
  return "?";
}

PairGeometry pair_geometry(const CameraView& view_j, const CameraView& view_k,
                           const Vec3& ray_j, const Vec3& ray_k) {
  PairGeometry g;
  g.j = view_j.id;
  g.k = view_k.id;
  g.t_jk = view_j.c_w - view_k.c_w;
  g.baseline_len = g.t_jk.norm();
  if (g.baseline_len < kMinBaseline) throw ZeroBaseline("coincident camera centers");
  g.t_hat = g.t_jk / g.baseline_len;
  g.e_epi = std::abs(g.t_hat.dot(ray_j.cross(ray_k)));
  g.p = ray_j.dot(ray_k);
  g.q = ray_j.dot(g.t_hat);
  g.r = ray_k.dot(g.t_hat);
  const double denom = 1.0 - g.p * g.p;
  g.s = denom > 0.0 ? g.baseline_len / denom : kInf;
  g.mu_j = g.p * g.r - g.q;
  g.mu_k = -g.p * g.q + g.r;
  g.lambda_j = g.s * g.mu_j;
  g.lambda_k = g.s * g.mu_k;
  return g;
}

MidpointOutcome screen_and_midpoint(const TriangulationProblem& problem, int j, int k,
                                    const RansacConfig& config, StageCounters* counters) {
  StageCounters scratch;
  StageCounters& c = counters ? *counters : scratch;

  MidpointOutcome out;
  PairGeometry& g = out.stage_values;
  g.j = j;
  g.k = k;

  const CameraView& vj = problem.views[j];
  const CameraView& vk = problem.views[k];
  if (!vj.ray_cache) ++c.rays_computed;
  const Vec3& fj = problem.ray(j);
  if (!vk.ray_cache) ++c.rays_computed;
  const Vec3& fk = problem.ray(k);

  g.t_jk = vj.c_w - vk.c_w;
  g.baseline_len = g.t_jk.norm();
  if (g.baseline_len < kMinBaseline) {
    ++c.rejected_zero_baseline;
    out.status = MidpointStatus::RejectedZeroBaseline;
    return out;
  }
  g.t_hat = g.t_jk / g.baseline_len;

  ++c.entered_epipolar;
  g.e_epi = std::abs(g.t_hat.dot(fj.cross(fk)));
  if (g.e_epi > config.delta_epipolar) {
    ++c.rejected_epipolar;
    out.status = MidpointStatus::RejectedEpipolar;
    return out;
  }

  ++c.entered_parallax;
  g.p = fj.dot(fk);
  if (g.p < config.delta_lower || g.p > config.delta_upper) {
    ++c.rejected_parallax;
    out.status = MidpointStatus::RejectedParallax;
    return out;
  }

  ++c.entered_degeneracy;
  g.q = fj.dot(g.t_hat);
  g.r = fk.dot(g.t_hat);
  if (std::abs(g.q) > config.delta_upper || std::abs(g.r) > config.delta_upper) {
    ++c.rejected_degeneracy;
    out.status = MidpointStatus::RejectedDegeneracy;
    return out;
  }

  ++c.entered_anchor;
  g.mu_j = g.p * g.r - g.q;
  g.mu_k = -g.p * g.q + g.r;
  if (g.mu_j < 0.0 || g.mu_k < 0.0) {
    ++c.rejected_anchor;
    out.status = MidpointStatus::RejectedAnchorSign;
    return out;
  }

  ++c.midpoints_computed;
  const double denom = 1.0 - g.p * g.p;
  g.s = denom > 0.0 ? g.baseline_len / denom : kInf;
  g.lambda_j = g.s * g.mu_j;
  g.lambda_k = g.s * g.mu_k;
  const Vec3 x_mid = 0.5 * (vj.c_w + g.lambda_j * fj + vk.c_w + g.lambda_k * fk);

  const Vec4 x_h(x_mid.x(), x_mid.y(), x_mid.z(), 1.0);
  const Vec3 xj = vj.P * x_h;
  const Vec3 xk = vk.P * x_h;
  if (xj.z() < 0.0 || xk.z() < 0.0) {
    ++c.rejected_cheirality;
    out.status = MidpointStatus::RejectedCheirality;
    return out;
  }

  ++c.entered_reproj;
  const Vec3 uj(problem.observations[j].u.x(), problem.observations[j].u.y(), 1.0);
  const Vec3 uk(problem.observations[k].u.x(), problem.observations[k].u.y(), 1.0);
  const Vec3 ej = uj - (vj.K * xj) / xj.z();
  const Vec3 ek = uk - (vk.K * xk) / xk.z();
  const double limit = config.delta_2d * config.delta_2d;
  if (ej.squaredNorm() > limit || ek.squaredNorm() > limit) {
    ++c.rejected_reproj;
    out.status = MidpointStatus::RejectedReprojection;
    return out;
  }

  ++c.accepted;
  out.status = MidpointStatus::Accepted;
  out.x_mid = x_mid;
  return out;
}

}  // namespace mvtri
