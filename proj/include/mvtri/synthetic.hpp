#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvtri/config.hpp"
#include "mvtri/geometry.hpp"
#include "mvtri/rng.hpp"

namespace mvtri {

struct UncertaintyGrid;

struct SceneParams {
  int n = 2;
  double d = 3.0;
  double sigma_px = 0.0;
  double outlier_ratio = 0.0;
};

// A random benchmark scene: n cameras spanning exactly one unit (two on the
// surface of a diameter-1 sphere, antipodal; the rest strictly inside), a
// ground-truth point at (0, 0, d) visible in every 640x480 image.
struct SyntheticScene {
  Vec3 point_gt = Vec3::Zero();
  std::vector<CameraView> views;
  std::vector<Observation> obs_clean;
  std::vector<Observation> obs_noisy;
  std::vector<bool> outlier_mask;  // true where the observation was corrupted
  SceneParams params;
};

// Intrinsics used throughout the synthetic experiments: 640x480 image,
// focal length 525 px.
Mat3 synthetic_intrinsics();

// Throws VisibilityTimeout after 10000 failed re-orientation attempts.
SyntheticScene generate_scene(int n, double d, double sigma_px, double outlier_ratio, Rng& rng);

TriangulationProblem to_problem(const SyntheticScene& scene);

struct BenchConfig {
  int n = 30;
  double d = 3.0;
  double sigma_px = 3.0;
  double outlier_ratio = 0.0;
  int runs = 0;
};

struct RunRecord {
  int config_index = 0;
  int run_index = 0;
  std::string method;
  int n = 0;
  double d = 0.0;
  double sigma_px = 0.0;
  double outlier_ratio = 0.0;
  std::string status;
  double e3d = 0.0;              // |x_est - x_gt|
  double mean_e2d = 0.0;         // over the estimated inlier set
  double mean_e2d_true = 0.0;    // over all true inlying observations
  int n_inliers = 0;
  double recall = 0.0;
  double precision = 0.0;
  double sigma_3d = 0.0;
  uint64_t hypotheses = 0;
  uint64_t midpoints = 0;        // full two-view solves
  uint64_t rej_epipolar = 0, rej_parallax = 0, rej_degeneracy = 0, rej_anchor = 0;
  uint64_t rej_cheirality = 0, rej_reproj = 0;
  int refine_iterations = 0;
  double wall_ms = 0.0;          // informational only, never serialized
};

struct BenchReport {
  std::vector<BenchConfig> configs;
  std::vector<std::string> methods;
  uint64_t seed = 0;
  std::vector<RunRecord> records;

  std::string to_csv() const;
};

// Seed of the scene and RANSAC RNG for one benchmark run.
inline uint64_t bench_run_seed(uint64_t seed, size_t config_index, int run) {
  return Rng::mix(Rng::mix(seed, config_index), run);
}

// Methods: "ransac", "ransac+dlt", "ransac+linls", "ransac+gn" for the
// prescreened pipeline, and the same with a "baseline" prefix for the
// unscreened two-view-DLT comparator.
BenchReport run_benchmark(std::span<const BenchConfig> configs,
                          std::span<const std::string> methods, uint64_t seed,
                          const RansacConfig& base_config,
                          const UncertaintyGrid* grid = nullptr);

struct PruneCurvePoint {
  double delta_3d = 0.0;
  size_t retained = 0;
  double p99_e3d = 0.0;
};

// Indices of records kept under sigma_3d < delta_3d (Ok records only).
std::vector<size_t> prune_by_uncertainty(std::span<const RunRecord> records, double delta_3d);

// Trade-off curve over a descending threshold sweep.
std::vector<PruneCurvePoint> prune_curve(std::span<const RunRecord> records,
                                         std::span<const double> thresholds);

// Empirical quantile of a sample (q in [0, 1]).
double quantile(std::vector<double> values, double q);

}  // namespace mvtri
