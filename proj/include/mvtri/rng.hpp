#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>
#include <random>

namespace mvtri {

// Seeded RNG with explicitly-coded draw routines so that a given seed
// reproduces the same stream on every build of this project.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return mag * std::cos(2.0 * M_PI * u2);
  }

  Eigen::Vector3d unit_vector() {
    // Marsaglia rejection on the unit ball, normalized.
    while (true) {
      const Eigen::Vector3d v(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
      const double n = v.norm();
      if (n > 1e-6 && n <= 1.0) return v / n;
    }
  }

  // Uniform rotation via Shoemake's quaternion method.
  Eigen::Matrix3d rotation() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double u3 = uniform();
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    const Eigen::Quaterniond q(a * std::sin(2.0 * M_PI * u2), a * std::cos(2.0 * M_PI * u2),
                               b * std::sin(2.0 * M_PI * u3), b * std::cos(2.0 * M_PI * u3));
    return q.normalized().toRotationMatrix();
  }

  // Unordered distinct pair from {0, ..., n-1}, uniform with replacement
  // across calls.
  std::pair<int, int> distinct_pair(int n) {
    const int j = uniform_int(n);
    int k = uniform_int(n - 1);
    if (k >= j) ++k;
    return {j, k};
  }

  // splitmix64-style mixing for deriving per-run seeds.
  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mvtri
