// mvtri: robust uncertainty-aware multiview triangulation.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "mvtri/errors.hpp"
#include "mvtri/io.hpp"
#include "mvtri/ransac.hpp"
#include "mvtri/refine.hpp"
#include "mvtri/synthetic.hpp"
#include "mvtri/uncertainty.hpp"

namespace {

using nlohmann::json;
using namespace mvtri;

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    json doc;
    in >> doc;
    return doc;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::pair<double, double> range_field(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return {fallback, fallback};
  const json& v = obj.at(key);
  if (v.is_array()) return {v.at(0).get<double>(), v.at(1).get<double>()};
  return {v.get<double>(), v.get<double>()};
}

struct TriangulateArgs {
  std::string cameras_path, tracks_path, grid_path, out_path, report_path;
  int min_views = 3;
  double eta = 0.99, delta_2d = 10.0, delta_epipolar = 0.01;
  double min_parallax_deg = 4.0, max_parallax_deg = 90.0;
  double delta_update = 0.1;
  int delta_pair = 100;
  std::string refiner = "gn";
  uint64_t seed = 0;
};

Refiner parse_refiner(const std::string& name) {
  if (name == "gn") return Refiner::GN;
  if (name == "dlt") return Refiner::DLT;
  if (name == "linls") return Refiner::LinLS;
  if (name == "none") return Refiner::None;
  throw ParseError("unknown refiner: " + name);
}

int cmd_triangulate(const TriangulateArgs& args) {
  RansacConfig config;
  config.eta = args.eta;
  config.delta_2d = args.delta_2d;
  config.delta_epipolar = args.delta_epipolar;
  config.delta_upper = deg_to_cos(args.min_parallax_deg);
  config.delta_lower = deg_to_cos(args.max_parallax_deg);
  config.delta_update = args.delta_update;
  config.delta_pair = args.delta_pair;
  config.refiner = parse_refiner(args.refiner);

  const std::vector<CameraView> cameras = load_cameras(args.cameras_path);
  std::map<int, const CameraView*> by_id;
  for (const CameraView& v : cameras) by_id[v.id] = &v;
  const std::vector<Track> tracks = load_tracks(args.tracks_path, cameras);

  UncertaintyGrid grid;
  const bool has_grid = !args.grid_path.empty();
  if (has_grid) grid = read_grid(args.grid_path);

  std::vector<PlyPoint> points;
  std::ostringstream report;
  report << "point_id,status,x,y,z,n_inliers,mean_e2d,sigma_3d\n";
  for (const Track& track : tracks) {
    if (static_cast<int>(track.observations.size()) < args.min_views) {
      std::cerr << "warning: point " << track.point_id << " has "
                << track.observations.size() << " views (< " << args.min_views
                << "), skipped\n";
      continue;
    }
    std::vector<CameraView> views;
    std::vector<Observation> observations;
    for (size_t i = 0; i < track.observations.size(); ++i) {
      CameraView view = *by_id.at(track.observations[i].view_id);
      view.ray_cache.reset();
      views.push_back(std::move(view));
      observations.push_back({static_cast<int>(i), track.observations[i].u});
    }
    const TriangulationProblem problem =
        precompute_problem(std::move(views), std::move(observations));
    config.seed = Rng::mix(args.seed, static_cast<uint64_t>(track.point_id));
    const TriangulationResult result =
        triangulate(problem, config, has_grid ? &grid : nullptr);
    report << track.point_id << ',' << to_string(result.status) << ','
           << fmt(result.x_est.x()) << ',' << fmt(result.x_est.y()) << ','
           << fmt(result.x_est.z()) << ',' << result.inliers.size() << ','
           << fmt(result.mean_e2d) << ',' << fmt(result.sigma_3d) << '\n';
    if (result.status == TriStatus::Ok) {
      points.push_back({result.x_est, result.sigma_3d, result.mean_e2d,
                        static_cast<int>(result.inliers.size())});
    }
  }
  write_ply(args.out_path, points);
  if (!args.report_path.empty()) write_text_file(args.report_path, report.str());
  return 0;
}

int cmd_learn_grid(const std::string& spec_path, uint64_t seed, const std::string& out_path) {
  const json doc = load_json(spec_path);
  std::vector<SimConfig> spec;
  for (const json& c : doc.at("configs")) {
    SimConfig sc;
    sc.n = c.at("n").get<int>();
    std::tie(sc.d_lo, sc.d_hi) = range_field(c, "d", 3.0);
    std::tie(sc.sigma_lo, sc.sigma_hi) = range_field(c, "sigma", 3.0);
    sc.runs = c.at("runs").get<int>();
    spec.push_back(sc);
  }
  write_grid(out_path, learn_grid(spec, seed));
  return 0;
}

std::vector<BenchConfig> parse_bench_configs(const json& doc) {
  std::vector<BenchConfig> configs;
  for (const json& c : doc.at("configs")) {
    BenchConfig bc;
    bc.n = c.at("n").get<int>();
    bc.d = c.value("d", 3.0);
    bc.sigma_px = c.value("sigma", 3.0);
    bc.outlier_ratio = c.value("outlier_ratio", 0.0);
    bc.runs = c.at("runs").get<int>();
    configs.push_back(bc);
  }
  return configs;
}

void dump_scenes(const std::string& dir, std::span<const BenchConfig> configs, uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<CameraView> cameras;
  std::vector<Track> tracks;
  std::ostringstream gt;
  gt << "point_id,x,y,z\n";
  int view_offset = 0;
  long point_id = 0;
  for (size_t ci = 0; ci < configs.size(); ++ci) {
    for (int run = 0; run < configs[ci].runs; ++run) {
      Rng rng(bench_run_seed(seed, ci, run));
      SyntheticScene scene;
      try {
        scene = generate_scene(configs[ci].n, configs[ci].d, configs[ci].sigma_px,
                               configs[ci].outlier_ratio, rng);
      } catch (const VisibilityTimeout&) {
        continue;
      }
      Track track;
      track.point_id = point_id;
      for (size_t i = 0; i < scene.views.size(); ++i) {
        CameraView view = scene.views[i];
        view.id = view_offset + static_cast<int>(i);
        view.ray_cache.reset();
        cameras.push_back(std::move(view));
        track.observations.push_back({view_offset + static_cast<int>(i), scene.obs_noisy[i].u});
      }
      tracks.push_back(std::move(track));
      gt << point_id << ',' << fmt(scene.point_gt.x()) << ',' << fmt(scene.point_gt.y()) << ','
         << fmt(scene.point_gt.z()) << '\n';
      view_offset += configs[ci].n;
      ++point_id;
    }
  }
  write_cameras(dir + "/cameras.txt", cameras);
  write_tracks(dir + "/tracks.txt", tracks);
  write_text_file(dir + "/ground_truth.csv", gt.str());
}

int cmd_bench(const std::string& spec_path, uint64_t seed, const std::string& out_path,
              const std::string& grid_path, const std::string& dump_dir) {
  const json doc = load_json(spec_path);
  const std::vector<BenchConfig> configs = parse_bench_configs(doc);
  std::vector<std::string> methods =
      doc.value("methods", std::vector<std::string>{"ransac+gn"});

  UncertaintyGrid grid;
  const bool has_grid = !grid_path.empty();
  if (has_grid) grid = read_grid(grid_path);

  if (!dump_dir.empty()) dump_scenes(dump_dir, configs, seed);

  const BenchReport report =
      run_benchmark(configs, methods, seed, RansacConfig{}, has_grid ? &grid : nullptr);
  write_text_file(out_path, report.to_csv());
  return 0;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

int cmd_prune(const std::string& points_path, const std::string& grid_path, double delta_3d,
              const std::string& out_path, const std::string& curve_path) {
  // The grid file is validated even when sigma values are already present in
  // the report.
  if (!grid_path.empty()) read_grid(grid_path);
  const auto rows = read_csv(points_path);
  if (rows.empty()) throw ParseError(points_path + ": empty CSV");
  const auto& header = rows.front();
  auto column = [&](const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ParseError(points_path + ": missing column " + name);
  };
  const size_t sigma_col = column("sigma_3d");

  std::ostringstream out;
  for (size_t r = 0; r < rows.size(); ++r) {
    if (r == 0) {
      for (size_t i = 0; i < rows[r].size(); ++i) out << (i ? "," : "") << rows[r][i];
      out << '\n';
      continue;
    }
    const double sigma = std::strtod(rows[r][sigma_col].c_str(), nullptr);
    if (!(sigma < delta_3d)) continue;
    for (size_t i = 0; i < rows[r].size(); ++i) out << (i ? "," : "") << rows[r][i];
    out << '\n';
  }
  write_text_file(out_path, out.str());

  if (!curve_path.empty()) {
    const size_t e3d_col = column("e3d");
    std::vector<double> sigmas, errors;
    for (size_t r = 1; r < rows.size(); ++r) {
      sigmas.push_back(std::strtod(rows[r][sigma_col].c_str(), nullptr));
      errors.push_back(std::strtod(rows[r][e3d_col].c_str(), nullptr));
    }
    std::ostringstream curve;
    curve << "delta_3d,retained,p99_e3d\n";
    for (double q : {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1}) {
      std::vector<double> s = sigmas;
      const double threshold = quantile(std::move(s), q) + 1e-12;
      std::vector<double> kept;
      for (size_t i = 0; i < sigmas.size(); ++i)
        if (sigmas[i] < threshold) kept.push_back(errors[i]);
      curve << fmt(threshold) << ',' << kept.size() << ',' << fmt(quantile(kept, 0.99)) << '\n';
    }
    write_text_file(curve_path, curve.str());
  }
  return 0;
}

int cmd_compare_opt(const std::string& spec_path, uint64_t seed, const std::string& out_path) {
  const json doc = load_json(spec_path);
  std::ostringstream out;
  out << "config,run,n,d,sigma_px,e2d_dlt,e2d_gn,delta_e2d,e3d_dlt,e3d_gn\n";
  RansacConfig config;
  size_t ci = 0;
  for (const json& c : doc.at("configs")) {
    const int n = c.at("n").get<int>();
    const double d = c.value("d", 3.0);
    const double sigma = c.value("sigma", 1.0);
    const int runs = c.at("runs").get<int>();
    for (int run = 0; run < runs; ++run) {
      Rng rng(bench_run_seed(seed, ci, run));
      SyntheticScene scene;
      try {
        scene = generate_scene(n, d, sigma, 0.0, rng);
      } catch (const VisibilityTimeout&) {
        continue;
      }
      const TriangulationProblem problem = to_problem(scene);
      std::vector<int> all(n);
      for (int i = 0; i < n; ++i) all[i] = i;
      Vec3 x_dlt;
      try {
        x_dlt = dlt_solve(problem, all);
      } catch (const PointAtInfinity&) {
        continue;
      }
      const PointScore dlt_score = score_point(problem, x_dlt, config.delta_2d);
      double e2d_dlt = 0.0;
      for (int i = 0; i < n; ++i) e2d_dlt += dlt_score.e2d(i);
      e2d_dlt /= n;
      const RefinementState gn = refine_gn_fixed(problem, x_dlt, all, config);
      out << ci << ',' << run << ',' << n << ',' << fmt(d) << ',' << fmt(sigma) << ','
          << fmt(e2d_dlt) << ',' << fmt(gn.mean_e2d) << ',' << fmt(e2d_dlt - gn.mean_e2d)
          << ',' << fmt((x_dlt - scene.point_gt).norm()) << ','
          << fmt((gn.x_est - scene.point_gt).norm()) << '\n';
    }
    ++ci;
  }
  write_text_file(out_path, out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust uncertainty-aware multiview triangulation"};
  app.require_subcommand(1);

  TriangulateArgs tri;
  CLI::App* c_tri = app.add_subcommand("triangulate", "Triangulate tracks from a dataset");
  c_tri->add_option("--cameras", tri.cameras_path, "Cameras file")->required();
  c_tri->add_option("--tracks", tri.tracks_path, "Tracks file")->required();
  c_tri->add_option("--grid", tri.grid_path, "Uncertainty grid file");
  c_tri->add_option("--min-views", tri.min_views, "Minimum views per point")->capture_default_str();
  c_tri->add_option("--eta", tri.eta, "RANSAC confidence")->capture_default_str();
  c_tri->add_option("--delta-2d", tri.delta_2d, "Inlier threshold, px")->capture_default_str();
  c_tri->add_option("--delta-epipolar", tri.delta_epipolar, "Normalized epipolar error bound")
      ->capture_default_str();
  c_tri->add_option("--min-parallax-deg", tri.min_parallax_deg,
                    "Min pair parallax, deg (cosine becomes delta_upper)")
      ->capture_default_str();
  c_tri->add_option("--max-parallax-deg", tri.max_parallax_deg,
                    "Max pair parallax, deg (cosine becomes delta_lower)")
      ->capture_default_str();
  c_tri->add_option("--delta-update", tri.delta_update, "Refinement convergence, px")
      ->capture_default_str();
  c_tri->add_option("--delta-pair", tri.delta_pair, "Pair budget for max parallax sampling")
      ->capture_default_str();
  c_tri->add_option("--refiner", tri.refiner, "gn|dlt|linls|none")->capture_default_str();
  c_tri->add_option("--seed", tri.seed, "RNG seed")->capture_default_str();
  c_tri->add_option("--out", tri.out_path, "Output PLY")->required();
  c_tri->add_option("--report", tri.report_path, "Per-point CSV report");

  std::string spec_path, out_path, grid_path, dump_dir, points_path, curve_path;
  uint64_t seed = 0;
  double delta_3d = 1.0;

  CLI::App* c_grid = app.add_subcommand("learn-grid", "Learn the uncertainty grid");
  c_grid->add_option("--spec", spec_path, "Simulation spec (JSON)")->required();
  c_grid->add_option("--seed", seed, "RNG seed")->capture_default_str();
  c_grid->add_option("--out", out_path, "Output grid file")->required();

  CLI::App* c_bench = app.add_subcommand("bench", "Run the synthetic benchmark");
  c_bench->add_option("--spec", spec_path, "Benchmark spec (JSON)")->required();
  c_bench->add_option("--seed", seed, "RNG seed")->capture_default_str();
  c_bench->add_option("--out", out_path, "Output CSV report")->required();
  c_bench->add_option("--grid", grid_path, "Uncertainty grid file");
  c_bench->add_option("--dump", dump_dir, "Also dump the scenes as a cameras/tracks dataset");

  CLI::App* c_prune = app.add_subcommand("prune", "Prune points by estimated uncertainty");
  c_prune->add_option("--points", points_path, "Bench/report CSV with a sigma_3d column")
      ->required();
  c_prune->add_option("--grid", grid_path, "Uncertainty grid file");
  c_prune->add_option("--delta-3d", delta_3d, "Keep points with sigma_3d below this")
      ->required();
  c_prune->add_option("--out", out_path, "Filtered CSV")->required();
  c_prune->add_option("--curve-out", curve_path, "Trade-off curve CSV");

  CLI::App* c_cmp = app.add_subcommand("compare-opt", "DLT vs GN 2D-error comparison");
  c_cmp->add_option("--spec", spec_path, "Simulation spec (JSON)")->required();
  c_cmp->add_option("--seed", seed, "RNG seed")->capture_default_str();
  c_cmp->add_option("--out", out_path, "Output CSV")->required();

  try {
    app.parse(argc, argv);
    if (c_tri->parsed()) return cmd_triangulate(tri);
    if (c_grid->parsed()) return cmd_learn_grid(spec_path, seed, out_path);
    if (c_bench->parsed()) return cmd_bench(spec_path, seed, out_path, grid_path, dump_dir);
    if (c_prune->parsed()) return cmd_prune(points_path, grid_path, delta_3d, out_path, curve_path);
    if (c_cmp->parsed()) return cmd_compare_opt(spec_path, seed, out_path);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mvtri::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
