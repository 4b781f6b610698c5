#include "mvtri/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "mvtri/errors.hpp"
#include "mvtri/ransac.hpp"
#include "mvtri/uncertainty.hpp"

namespace mvtri {

namespace {

constexpr int kVisibilityAttempts = 10000;
constexpr double kImageWidth = 640.0;
constexpr double kImageHeight = 480.0;

bool project(const CameraView& view, const Vec3& x, Vec2& u) {
  const Vec3 xc = view.R * x + view.t;
  if (xc.z() <= 0.0) return false;
  const Vec3 uh = view.K * (xc / xc.z());
  u = uh.head<2>();
  return u.x() >= 0.0 && u.x() <= kImageWidth && u.y() >= 0.0 && u.y() <= kImageHeight;
}

}  // namespace

Mat3 synthetic_intrinsics() {
  Mat3 K;
  K << 525.0, 0.0, 320.0, 0.0, 525.0, 240.0, 0.0, 0.0, 1.0;
  return K;
}

SyntheticScene generate_scene(int n, double d, double sigma_px, double outlier_ratio, Rng& rng) {
  SyntheticScene scene;
  scene.params = {n, d, sigma_px, outlier_ratio};
  scene.point_gt = Vec3(0.0, 0.0, d);
  const Mat3 K = synthetic_intrinsics();

  // Two antipodal cameras on the surface of the diameter-1 sphere, the rest
  // strictly inside; the geometric span is exactly one unit.
  std::vector<Vec3> centers;
  const Vec3 axis = rng.unit_vector();
  centers.push_back(0.5 * axis);
  centers.push_back(-0.5 * axis);
  while (static_cast<int>(centers.size()) < n) {
    const Vec3 c(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    if (c.norm() < 0.5) centers.push_back(c);
  }

  int attempts = 0;
  for (int i = 0; i < n; ++i) {
    Vec2 u;
    while (true) {
      if (++attempts > kVisibilityAttempts) {
        throw VisibilityTimeout("no visible orientation after " +
                                std::to_string(kVisibilityAttempts) + " attempts");
      }
      const Mat3 R = rng.rotation();
      const Vec3 t = -R * centers[i];
      CameraView view = build_view(i, K, R, t);
      if (project(view, scene.point_gt, u)) {
        scene.views.push_back(std::move(view));
        break;
      }
    }
    scene.obs_clean.push_back({i, u});
  }

  const int n_outliers = static_cast<int>(std::lround(outlier_ratio * n));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  scene.outlier_mask.assign(n, false);
  for (int i = 0; i < n_outliers; ++i) scene.outlier_mask[order[i]] = true;

  scene.obs_noisy = scene.obs_clean;
  for (int i = 0; i < n; ++i) {
    if (scene.outlier_mask[i]) {
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      const double mag = rng.uniform(10.0, 100.0);
      scene.obs_noisy[i].u += mag * Vec2(std::cos(angle), std::sin(angle));
    } else if (sigma_px > 0.0) {
      scene.obs_noisy[i].u += sigma_px * Vec2(rng.normal(), rng.normal());
    }
  }
  return scene;
}

TriangulationProblem to_problem(const SyntheticScene& scene) {
  return precompute_problem(scene.views, scene.obs_noisy);
}

namespace {

struct MethodSpec {
  bool baseline = false;
  Refiner refiner = Refiner::None;
};

MethodSpec parse_method(const std::string& name) {
  MethodSpec spec;
  std::string rest = name;
  if (rest.rfind("baseline", 0) == 0) {
    spec.baseline = true;
    rest = rest.size() > 8 ? rest.substr(8) : "";
  } else if (rest.rfind("ransac", 0) == 0) {
    rest = rest.size() > 6 ? rest.substr(6) : "";
  } else {
    throw ParseError("unknown method: " + name);
  }
  if (!rest.empty() && rest[0] == '+') rest = rest.substr(1);
  if (rest.empty() || rest == "none") spec.refiner = Refiner::None;
  else if (rest == "dlt") spec.refiner = Refiner::DLT;
  else if (rest == "linls") spec.refiner = Refiner::LinLS;
  else if (rest == "gn") spec.refiner = Refiner::GN;
  else throw ParseError("unknown method: " + name);
  return spec;
}

// Mean reprojection error of x against the noisy observations of the true
// inlying views.
double mean_error_true_inliers(const SyntheticScene& scene, const Vec3& x) {
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < scene.views.size(); ++i) {
    if (scene.outlier_mask[i]) continue;
    const CameraView& v = scene.views[i];
    const Vec3 xc = v.R * x + v.t;
    if (xc.z() == 0.0) return std::numeric_limits<double>::infinity();
    const Vec3 uh = v.K * (xc / xc.z());
    sum += (uh.head<2>() - scene.obs_noisy[i].u).norm();
    ++count;
  }
  return count > 0 ? sum / count : std::numeric_limits<double>::infinity();
}

std::string format_double(double v) {
  char buf[40];
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

BenchReport run_benchmark(std::span<const BenchConfig> configs,
                          std::span<const std::string> methods, uint64_t seed,
                          const RansacConfig& base_config, const UncertaintyGrid* grid) {
  BenchReport report;
  report.configs.assign(configs.begin(), configs.end());
  report.methods.assign(methods.begin(), methods.end());
  report.seed = seed;

  std::vector<MethodSpec> specs;
  for (const auto& name : methods) specs.push_back(parse_method(name));

  for (size_t ci = 0; ci < configs.size(); ++ci) {
    const BenchConfig& cfg = configs[ci];
    for (int run = 0; run < cfg.runs; ++run) {
      const uint64_t run_seed = bench_run_seed(seed, ci, run);
      Rng scene_rng(run_seed);
      SyntheticScene scene;
      try {
        scene = generate_scene(cfg.n, cfg.d, cfg.sigma_px, cfg.outlier_ratio, scene_rng);
      } catch (const VisibilityTimeout&) {
        continue;
      }
      int n_true = 0;
      for (bool o : scene.outlier_mask) n_true += o ? 0 : 1;

      for (size_t mi = 0; mi < specs.size(); ++mi) {
        // Fresh problem per method so ray memos and RANSAC draws match
        // across methods run on the same scene.
        const TriangulationProblem problem = to_problem(scene);
        RansacConfig config = base_config;
        config.seed = run_seed;
        config.refiner = specs[mi].refiner;

        const auto start = std::chrono::steady_clock::now();
        const TriangulationResult result =
            specs[mi].baseline ? baseline_triangulate(problem, config, grid)
                               : triangulate(problem, config, grid);
        const auto stop = std::chrono::steady_clock::now();

        RunRecord rec;
        rec.config_index = static_cast<int>(ci);
        rec.run_index = run;
        rec.method = methods[mi];
        rec.n = cfg.n;
        rec.d = cfg.d;
        rec.sigma_px = cfg.sigma_px;
        rec.outlier_ratio = cfg.outlier_ratio;
        rec.status = to_string(result.status);
        rec.e3d = (result.x_est - scene.point_gt).norm();
        rec.mean_e2d = result.mean_e2d;
        rec.mean_e2d_true = result.status == TriStatus::NoHypothesis
                                ? std::numeric_limits<double>::infinity()
                                : mean_error_true_inliers(scene, result.x_est);
        rec.n_inliers = static_cast<int>(result.inliers.size());
        int hits = 0;
        for (int i : result.inliers) hits += scene.outlier_mask[i] ? 0 : 1;
        rec.recall = n_true > 0 ? static_cast<double>(hits) / n_true : 0.0;
        rec.precision = result.inliers.empty()
                            ? 0.0
                            : static_cast<double>(hits) / result.inliers.size();
        rec.sigma_3d = result.sigma_3d;
        rec.hypotheses = result.diag.hypotheses_drawn;
        rec.midpoints = result.diag.stages.midpoints_computed;
        rec.rej_epipolar = result.diag.stages.rejected_epipolar;
        rec.rej_parallax = result.diag.stages.rejected_parallax;
        rec.rej_degeneracy = result.diag.stages.rejected_degeneracy;
        rec.rej_anchor = result.diag.stages.rejected_anchor;
        rec.rej_cheirality = result.diag.stages.rejected_cheirality;
        rec.rej_reproj = result.diag.stages.rejected_reproj;
        rec.refine_iterations = result.diag.refine_iterations;
        rec.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        report.records.push_back(std::move(rec));
      }
    }
  }
  return report;
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out << "config,run,method,n,d,sigma_px,outlier_ratio,status,e3d,mean_e2d,mean_e2d_true,"
         "n_inliers,recall,precision,sigma_3d,hypotheses,midpoints,rej_epipolar,rej_parallax,"
         "rej_degeneracy,rej_anchor,rej_cheirality,rej_reproj,refine_iterations\n";
  for (const RunRecord& r : records) {
    out << r.config_index << ',' << r.run_index << ',' << r.method << ',' << r.n << ','
        << format_double(r.d) << ',' << format_double(r.sigma_px) << ','
        << format_double(r.outlier_ratio) << ',' << r.status << ',' << format_double(r.e3d)
        << ',' << format_double(r.mean_e2d) << ',' << format_double(r.mean_e2d_true) << ','
        << r.n_inliers << ',' << format_double(r.recall) << ',' << format_double(r.precision)
        << ',' << format_double(r.sigma_3d) << ',' << r.hypotheses << ',' << r.midpoints << ','
        << r.rej_epipolar << ',' << r.rej_parallax << ',' << r.rej_degeneracy << ','
        << r.rej_anchor << ',' << r.rej_cheirality << ',' << r.rej_reproj << ','
        << r.refine_iterations << '\n';
  }
  return out.str();
}

std::vector<size_t> prune_by_uncertainty(std::span<const RunRecord> records, double delta_3d) {
  std::vector<size_t> kept;
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].status == "Ok" && records[i].sigma_3d < delta_3d) kept.push_back(i);
  }
  return kept;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return values[lo] + t * (values[hi] - values[lo]);
}

std::vector<PruneCurvePoint> prune_curve(std::span<const RunRecord> records,
                                         std::span<const double> thresholds) {
  std::vector<PruneCurvePoint> curve;
  for (double delta : thresholds) {
    const std::vector<size_t> kept = prune_by_uncertainty(records, delta);
    std::vector<double> errors;
    errors.reserve(kept.size());
    for (size_t i : kept) errors.push_back(records[i].e3d);
    curve.push_back({delta, kept.size(), quantile(std::move(errors), 0.99)});
  }
  return curve;
}

}  // namespace mvtri
