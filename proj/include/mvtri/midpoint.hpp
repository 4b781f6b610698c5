#pragma once

#include <cstdint>
#include <optional>

#include "mvtri/config.hpp"
#include "mvtri/geometry.hpp"

namespace mvtri {

// Scalars of the two-view midpoint formulation for a pair (j, k).
struct PairGeometry {
  int j = -1, k = -1;
  Vec3 t_jk = Vec3::Zero();   // c_j^w - c_k^w
  Vec3 t_hat = Vec3::Zero();
  double baseline_len = 0.0;
  double e_epi = std::numeric_limits<double>::quiet_NaN();  // |t_hat . (f_j x f_k)|
  double p = std::numeric_limits<double>::quiet_NaN();      // f_j . f_k
  double q = std::numeric_limits<double>::quiet_NaN();      // f_j . t_hat
  double r = std::numeric_limits<double>::quiet_NaN();      // f_k . t_hat
  double s = std::numeric_limits<double>::quiet_NaN();      // |t| / (1 - p^2)
  double mu_j = std::numeric_limits<double>::quiet_NaN();   // p r - q
  double mu_k = std::numeric_limits<double>::quiet_NaN();   // -p q + r
  double lambda_j = std::numeric_limits<double>::quiet_NaN();  // s mu_j
  double lambda_k = std::numeric_limits<double>::quiet_NaN();  // s mu_k
};

enum class MidpointStatus {
  Accepted,
  RejectedEpipolar,
  RejectedParallax,
  RejectedDegeneracy,
  RejectedAnchorSign,
  RejectedCheirality,
  RejectedReprojection,
  RejectedZeroBaseline,
};

const char* to_string(MidpointStatus status);

struct MidpointOutcome {
  MidpointStatus status = MidpointStatus::RejectedZeroBaseline;
  std::optional<Vec3> x_mid;       // present iff Accepted
  PairGeometry stage_values;       // fields valid up to the reached stage
};

// Per-stage entry counters, for the operation-count comparisons.
struct StageCounters {
  uint64_t rays_computed = 0;
  uint64_t entered_epipolar = 0;
  uint64_t entered_parallax = 0;
  uint64_t entered_degeneracy = 0;
  uint64_t entered_anchor = 0;
  uint64_t midpoints_computed = 0;  // stage-5 entries (full two-view solves)
  uint64_t entered_reproj = 0;
  uint64_t accepted = 0;
  uint64_t rejected_epipolar = 0;
  uint64_t rejected_parallax = 0;
  uint64_t rejected_degeneracy = 0;
  uint64_t rejected_anchor = 0;
  uint64_t rejected_cheirality = 0;
  uint64_t rejected_reproj = 0;
  uint64_t rejected_zero_baseline = 0;
};

// All pair scalars at once (no screening). s is +inf when p^2 = 1.
// Throws ZeroBaseline.
PairGeometry pair_geometry(const CameraView& view_j, const CameraView& view_k,
                           const Vec3& ray_j, const Vec3& ray_k);

// Early-terminating midpoint for the pair (j, k): the checks run in order
// epipolar, parallax, degeneracy, anchor sign, cheirality, reprojection,
// and later stages are never evaluated once a pair is rejected.
MidpointOutcome screen_and_midpoint(const TriangulationProblem& problem, int j, int k,
                                    const RansacConfig& config,
                                    StageCounters* counters = nullptr);

}  // namespace mvtri
