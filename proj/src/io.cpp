#include "mvtri/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unordered_set>

#include "mvtri/errors.hpp"

namespace mvtri {

namespace {

using nlohmann::json;

constexpr int kGridFormatVersion = 1;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return in;
}

json axis_header(const std::vector<double>& centers) {
  const double width = centers.size() > 1 ? centers[1] - centers[0] : 1.0;
  return {{"min", centers.front() - 0.5 * width},
          {"max", centers.back() + 0.5 * width},
          {"bins", centers.size()}};
}

std::vector<double> axis_centers(const json& header) {
  const double lo = header.at("min").get<double>();
  const double hi = header.at("max").get<double>();
  const size_t bins = header.at("bins").get<size_t>();
  if (bins == 0 || !(hi > lo)) throw ShapeMismatch("degenerate axis header");
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> centers(bins);
  for (size_t i = 0; i < bins; ++i) centers[i] = lo + (i + 0.5) * width;
  return centers;
}

}  // namespace

void write_ply(const std::string& path, std::span<const PlyPoint> points) {
  std::ofstream out = open_out(path);
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << points.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "property double sigma3d\nproperty double mean_e2d\n"
      << "property int n_inliers\nend_header\n";
  for (const PlyPoint& p : points) {
    out << fmt(p.x.x()) << ' ' << fmt(p.x.y()) << ' ' << fmt(p.x.z()) << ' '
        << fmt(p.sigma_3d) << ' ' << fmt(p.mean_e2d) << ' ' << p.n_inliers << '\n';
  }
}

std::vector<PlyPoint> read_ply(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  size_t count = 0;
  bool in_header = true;
  while (in_header && std::getline(in, line)) {
    if (line.rfind("element vertex ", 0) == 0) count = std::stoul(line.substr(15));
    if (line == "end_header") in_header = false;
  }
  if (in_header) throw ParseError(path + ": missing PLY header terminator");
  std::vector<PlyPoint> points;
  points.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    PlyPoint p;
    if (!(in >> p.x.x() >> p.x.y() >> p.x.z() >> p.sigma_3d >> p.mean_e2d >> p.n_inliers)) {
      throw ParseError(path + ": truncated vertex list (expected " + std::to_string(count) +
                       " vertices, found " + std::to_string(i) + ")");
    }
    points.push_back(p);
  }
  return points;
}

void write_grid(const std::string& path, const UncertaintyGrid& grid) {
  json doc;
  doc["format_version"] = kGridFormatVersion;
  doc["n_axis"] = grid.n_axis;
  doc["e_axis"] = axis_header(grid.e_axis);
  doc["beta_axis"] = axis_header(grid.beta_axis);
  doc["smoothed"] = grid.smoothed;
  doc["meta"] = json::accept(grid.meta) ? json::parse(grid.meta) : json(grid.meta);
  // Non-finite cells (possible only on unsmoothed grids) serialize as null.
  json sigma = json::array();
  for (double v : grid.sigma) sigma.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  doc["sigma"] = std::move(sigma);
  doc["counts"] = grid.counts;
  open_out(path) << doc.dump() << '\n';
}

UncertaintyGrid read_grid(const std::string& path) {
  json doc;
  try {
    open_in(path) >> doc;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kGridFormatVersion) {
      throw VersionMismatch(path + ": unsupported grid format version " +
                            doc.at("format_version").dump());
    }
    UncertaintyGrid grid;
    grid.n_axis = doc.at("n_axis").get<std::vector<double>>();
    grid.e_axis = axis_centers(doc.at("e_axis"));
    grid.beta_axis = axis_centers(doc.at("beta_axis"));
    grid.smoothed = doc.at("smoothed").get<bool>();
    grid.meta = doc.at("meta").is_string() ? doc.at("meta").get<std::string>()
                                           : doc.at("meta").dump();
    for (const json& v : doc.at("sigma")) {
      grid.sigma.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                       : v.get<double>());
    }
    grid.counts = doc.at("counts").get<std::vector<double>>();
    if (grid.sigma.size() != grid.cell_count() || grid.counts.size() != grid.cell_count()) {
      throw ShapeMismatch(path + ": expected " + std::to_string(grid.cell_count()) +
                          " cells, found " + std::to_string(grid.sigma.size()) + " sigma / " +
                          std::to_string(grid.counts.size()) + " count values");
    }
    if (grid.smoothed && !grid.is_monotone()) {
      throw NonMonotoneGrid(path + ": grid claims smoothed=true but violates monotonicity");
    }
    return grid;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

namespace {

std::vector<std::string> data_lines(std::ifstream& in, std::vector<int>& line_numbers) {
  std::vector<std::string> lines;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(line);
    line_numbers.push_back(number);
  }
  return lines;
}

}  // namespace

std::vector<CameraView> load_cameras(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<int> numbers;
  const std::vector<std::string> lines = data_lines(in, numbers);
  std::vector<CameraView> cameras;
  std::unordered_set<int> ids;
  for (size_t li = 0; li < lines.size(); ++li) {
    std::istringstream ss(lines[li]);
    int id = 0;
    Mat3 K, R;
    Vec3 t;
    ss >> id;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) ss >> K(r, c);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) ss >> R(r, c);
    ss >> t.x() >> t.y() >> t.z();
    if (!ss) {
      throw ParseError(path + ":" + std::to_string(numbers[li]) +
                       ": expected 'id K(9) R(9) t(3)'");
    }
    if (!ids.insert(id).second) {
      throw ParseError(path + ":" + std::to_string(numbers[li]) + ": duplicate view id " +
                       std::to_string(id));
    }
    try {
      cameras.push_back(build_view(id, K, R, t));
    } catch (const Error& e) {
      throw ParseError(path + ":" + std::to_string(numbers[li]) + ": " + e.what());
    }
  }
  return cameras;
}

std::vector<Track> load_tracks(const std::string& path, const std::vector<CameraView>& cameras) {
  std::unordered_set<int> known;
  for (const CameraView& v : cameras) known.insert(v.id);

  std::ifstream in = open_in(path);
  std::vector<int> numbers;
  const std::vector<std::string> lines = data_lines(in, numbers);
  std::vector<Track> tracks;
  for (size_t li = 0; li < lines.size(); ++li) {
    std::istringstream ss(lines[li]);
    Track track;
    if (!(ss >> track.point_id)) {
      throw ParseError(path + ":" + std::to_string(numbers[li]) + ": expected a point id");
    }
    Observation obs;
    while (ss >> obs.view_id) {
      if (!(ss >> obs.u.x() >> obs.u.y())) {
        throw ParseError(path + ":" + std::to_string(numbers[li]) +
                         ": expected 'view_id u v' triples");
      }
      if (!known.count(obs.view_id)) {
        throw ParseError(path + ":" + std::to_string(numbers[li]) + ": unknown view id " +
                         std::to_string(obs.view_id));
      }
      track.observations.push_back(obs);
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

void write_cameras(const std::string& path, std::span<const CameraView> cameras) {
  std::ofstream out = open_out(path);
  out << "# id k11..k33 r11..r33 t1 t2 t3\n";
  for (const CameraView& v : cameras) {
    out << v.id;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << ' ' << fmt(v.K(r, c));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << ' ' << fmt(v.R(r, c));
    out << ' ' << fmt(v.t.x()) << ' ' << fmt(v.t.y()) << ' ' << fmt(v.t.z()) << '\n';
  }
}

void write_tracks(const std::string& path, std::span<const Track> tracks) {
  std::ofstream out = open_out(path);
  out << "# point_id (view_id u v)+\n";
  for (const Track& t : tracks) {
    out << t.point_id;
    for (const Observation& o : t.observations) {
      out << ' ' << o.view_id << ' ' << fmt(o.u.x()) << ' ' << fmt(o.u.y());
    }
    out << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  open_out(path) << contents;
}

}  // namespace mvtri
