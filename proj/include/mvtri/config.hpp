#pragma once

#include <climits>
#include <cmath>
#include <cstdint>

namespace mvtri {

enum class Refiner { DLT, LinLS, GN, None };

// RANSAC and refinement thresholds. Defaults are the evaluation settings:
// eta = 0.99, delta_2d = 10 px, delta_epipolar = 0.01, delta_update = 0.1 px,
// delta_lower = 0 (90 deg), delta_upper = cos(4 deg), delta_pair = 100.
struct RansacConfig {
  double eta = 0.99;
  double delta_2d = 10.0;          // pixels
  double delta_epipolar = 0.01;
  double delta_lower = 0.0;        // cosine of the max parallax angle
  double delta_upper = std::cos(4.0 * M_PI / 180.0);  // cosine of the min parallax angle
  double delta_update = 0.1;       // pixels
  int delta_pair = 100;            // pair budget for the sampled max parallax
  uint64_t seed = 0;
  int max_hypotheses = INT_MAX;
  Refiner refiner = Refiner::GN;
};

inline double deg_to_cos(double deg) { return std::cos(deg * M_PI / 180.0); }

}  // namespace mvtri
