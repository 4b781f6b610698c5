#pragma once

#include <span>
#include <string>
#include <vector>

#include "mvtri/geometry.hpp"
#include "mvtri/uncertainty.hpp"

namespace mvtri {

struct PlyPoint {
  Vec3 x = Vec3::Zero();
  double sigma_3d = 0.0;
  double mean_e2d = 0.0;
  int n_inliers = 0;
};

// ASCII PLY with double x/y/z/sigma3d/mean_e2d and int n_inliers vertex
// properties, written at full precision.
void write_ply(const std::string& path, std::span<const PlyPoint> points);
std::vector<PlyPoint> read_ply(const std::string& path);

// Versioned self-describing grid file (JSON). Write -> read round-trips
// finite values bit-exactly. Read throws VersionMismatch, ShapeMismatch, and
// NonMonotoneGrid when a file claims smoothed=true but is not.
void write_grid(const std::string& path, const UncertaintyGrid& grid);
UncertaintyGrid read_grid(const std::string& path);

// Line-oriented dataset inputs:
//   cameras: id k11..k33 r11..r33 t1 t2 t3      (row-major, one view per line)
//   tracks:  point_id (view_id u v)+            (one point per line)
// '#' starts a comment. Throws ParseError naming file and line.
std::vector<CameraView> load_cameras(const std::string& path);

struct Track {
  long point_id = 0;
  std::vector<Observation> observations;  // view_id refers to the cameras file
};

// Validates that every referenced view id is declared.
std::vector<Track> load_tracks(const std::string& path, const std::vector<CameraView>& cameras);

void write_cameras(const std::string& path, std::span<const CameraView> cameras);
void write_tracks(const std::string& path, std::span<const Track> tracks);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace mvtri
