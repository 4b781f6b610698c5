#include "mvtri/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "mvtri/errors.hpp"
#include "mvtri/refine.hpp"
#include "mvtri/synthetic.hpp"

namespace mvtri {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTruncate = 1.0;
constexpr int kMinCellCount = 10;
constexpr double kPavTol = 1e-6;
constexpr int kPavMaxSweeps = 100;

bool is_empty_cell(double v) { return std::isnan(v); }

// Weighted pool-adjacent-violators for a non-decreasing fit, in place.
void pav_increasing(std::span<double> values, std::span<const double> weights) {
  const size_t n = values.size();
  std::vector<double> level(n), weight(n);
  std::vector<size_t> width(n);
  size_t blocks = 0;
  for (size_t i = 0; i < n; ++i) {
    level[blocks] = values[i];
    weight[blocks] = weights[i];
    width[blocks] = 1;
    ++blocks;
    while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
      const double w = weight[blocks - 2] + weight[blocks - 1];
      level[blocks - 2] = (level[blocks - 2] * weight[blocks - 2] +
                           level[blocks - 1] * weight[blocks - 1]) / w;
      weight[blocks - 2] = w;
      width[blocks - 2] += width[blocks - 1];
      --blocks;
    }
  }
  size_t pos = 0;
  for (size_t b = 0; b < blocks; ++b) {
    for (size_t i = 0; i < width[b]; ++i) values[pos++] = level[b];
  }
}

}  // namespace

bool UncertaintyGrid::is_monotone(double tol) const {
  const size_t Nn = n_axis.size(), Ne = e_axis.size(), Nb = beta_axis.size();
  for (size_t in = 0; in < Nn; ++in) {
    for (size_t ie = 0; ie < Ne; ++ie) {
      for (size_t ib = 0; ib < Nb; ++ib) {
        const double v = at(in, ie, ib);
        if (in + 1 < Nn && at(in + 1, ie, ib) > v + tol) return false;   // non-increasing in n
        if (ie + 1 < Ne && at(in, ie + 1, ib) < v - tol) return false;   // non-decreasing in e
        if (ib + 1 < Nb && at(in, ie, ib + 1) > v + tol) return false;   // non-increasing in beta
      }
    }
  }
  return true;
}

UncertaintyGrid make_default_grid() {
  UncertaintyGrid grid;
  for (int n = 2; n <= 50; ++n) grid.n_axis.push_back(static_cast<double>(n));
  for (int i = 0; i < 20; ++i) grid.e_axis.push_back(0.5 + i);
  for (int i = 0; i < 20; ++i) grid.beta_axis.push_back(0.5 + i);
  grid.sigma.assign(grid.cell_count(), kNaN);
  grid.counts.assign(grid.cell_count(), 0.0);
  return grid;
}

namespace {

// Bin index for a uniformly-spaced center axis, clamping out-of-range values
// into the boundary bins.
size_t bin_index(const std::vector<double>& axis, double v) {
  const double width = axis.size() > 1 ? axis[1] - axis[0] : 1.0;
  const double lo = axis.front() - 0.5 * width;
  const double idx = std::floor((v - lo) / width);
  return static_cast<size_t>(std::clamp(idx, 0.0, static_cast<double>(axis.size() - 1)));
}

size_t n_index(const std::vector<double>& axis, int n) {
  const double v = std::min(static_cast<double>(n), axis.back());
  const auto it = std::lower_bound(axis.begin(), axis.end(), v);
  return static_cast<size_t>(it - axis.begin());
}

void seed_empty_cells(UncertaintyGrid& grid) {
  const size_t Nn = grid.n_axis.size(), Ne = grid.e_axis.size(), Nb = grid.beta_axis.size();
  std::deque<std::array<size_t, 3>> frontier;
  for (size_t in = 0; in < Nn; ++in)
    for (size_t ie = 0; ie < Ne; ++ie)
      for (size_t ib = 0; ib < Nb; ++ib)
        if (!is_empty_cell(grid.at(in, ie, ib))) frontier.push_back({in, ie, ib});
  if (frontier.empty()) throw AllCellsEmpty("no populated cells to smooth");
  // Multi-source BFS: each empty cell inherits its nearest populated value.
  while (!frontier.empty()) {
    const auto [in, ie, ib] = frontier.front();
    frontier.pop_front();
    const double v = grid.at(in, ie, ib);
    const long coords[3] = {static_cast<long>(in), static_cast<long>(ie), static_cast<long>(ib)};
    const long dims[3] = {static_cast<long>(Nn), static_cast<long>(Ne), static_cast<long>(Nb)};
    for (int axis = 0; axis < 3; ++axis) {
      for (int step : {-1, 1}) {
        long c[3] = {coords[0], coords[1], coords[2]};
        c[axis] += step;
        if (c[axis] < 0 || c[axis] >= dims[axis]) continue;
        double& cell = grid.at(c[0], c[1], c[2]);
        if (is_empty_cell(cell)) {
          cell = v;
          frontier.push_back({static_cast<size_t>(c[0]), static_cast<size_t>(c[1]),
                              static_cast<size_t>(c[2])});
        }
      }
    }
  }
}

}  // namespace

void monotone_smooth(UncertaintyGrid& grid) {
  const size_t Nn = grid.n_axis.size(), Ne = grid.e_axis.size(), Nb = grid.beta_axis.size();
  if (grid.sigma.size() != grid.cell_count() || grid.counts.size() != grid.cell_count()) {
    throw InvalidGrid("sigma/counts size does not match the axes");
  }
  // Cells refilled by seeding get a tiny weight so they conform to the data.
  std::vector<double> weight(grid.cell_count());
  for (size_t i = 0; i < grid.cell_count(); ++i) {
    weight[i] = (!is_empty_cell(grid.sigma[i]) && grid.counts[i] >= kMinCellCount)
                    ? grid.counts[i]
                    : 1e-9;
  }
  seed_empty_cells(grid);

  // Cyclic per-axis weighted PAV. sigma decreases with n and beta_max and
  // increases with e2d, so the n and beta lines are fitted reversed.
  std::vector<double> line_v, line_w;
  auto sweep_axis = [&](int axis, bool increasing) {
    double max_change = 0.0;
    const size_t dims[3] = {Nn, Ne, Nb};
    const size_t len = dims[axis];
    const size_t outer_a = dims[(axis + 1) % 3], outer_b = dims[(axis + 2) % 3];
    line_v.resize(len);
    line_w.resize(len);
    for (size_t a = 0; a < outer_a; ++a) {
      for (size_t b = 0; b < outer_b; ++b) {
        for (size_t i = 0; i < len; ++i) {
          size_t c[3];
          c[axis] = increasing ? i : len - 1 - i;
          c[(axis + 1) % 3] = a;
          c[(axis + 2) % 3] = b;
          const size_t idx = grid.index(c[0], c[1], c[2]);
          line_v[i] = grid.sigma[idx];
          line_w[i] = weight[idx];
        }
        pav_increasing(line_v, line_w);
        for (size_t i = 0; i < len; ++i) {
          size_t c[3];
          c[axis] = increasing ? i : len - 1 - i;
          c[(axis + 1) % 3] = a;
          c[(axis + 2) % 3] = b;
          const size_t idx = grid.index(c[0], c[1], c[2]);
          max_change = std::max(max_change, std::abs(grid.sigma[idx] - line_v[i]));
          grid.sigma[idx] = line_v[i];
        }
      }
    }
    return max_change;
  };

  for (int sweep = 0; sweep < kPavMaxSweeps; ++sweep) {
    double change = 0.0;
    change = std::max(change, sweep_axis(1, true));    // e: non-decreasing
    change = std::max(change, sweep_axis(0, false));   // n: non-increasing
    change = std::max(change, sweep_axis(2, false));   // beta: non-increasing
    if (change < kPavTol) break;
  }

  // Final projection clears any residual violation exactly: running maxima
  // taken in this order preserve the previously enforced directions.
  for (size_t in = 0; in < Nn; ++in)
    for (size_t ib = 0; ib < Nb; ++ib)
      for (size_t ie = 1; ie < Ne; ++ie)
        grid.at(in, ie, ib) = std::max(grid.at(in, ie, ib), grid.at(in, ie - 1, ib));
  for (size_t ie = 0; ie < Ne; ++ie)
    for (size_t ib = 0; ib < Nb; ++ib)
      for (size_t in = Nn; in-- > 1;)
        grid.at(in - 1, ie, ib) = std::max(grid.at(in - 1, ie, ib), grid.at(in, ie, ib));
  for (size_t in = 0; in < Nn; ++in)
    for (size_t ie = 0; ie < Ne; ++ie)
      for (size_t ib = Nb; ib-- > 1;)
        grid.at(in, ie, ib - 1) = std::max(grid.at(in, ie, ib - 1), grid.at(in, ie, ib));

  for (double& v : grid.sigma) v = std::clamp(v, 0.0, kTruncate);
  grid.smoothed = true;
}

UncertaintyGrid learn_grid(std::span<const SimConfig> spec, uint64_t rng_seed) {
  if (spec.empty()) throw EmptySpec("no simulation configurations");
  UncertaintyGrid grid = make_default_grid();
  std::vector<double> sumsq(grid.cell_count(), 0.0);
  std::vector<bool> simulated_n(grid.n_axis.size(), false);

  RansacConfig config;  // only delta_2d / delta_update are relevant here
  for (size_t ci = 0; ci < spec.size(); ++ci) {
    const SimConfig& sc = spec[ci];
    simulated_n[n_index(grid.n_axis, sc.n)] = true;
    for (int run = 0; run < sc.runs; ++run) {
      Rng rng(Rng::mix(Rng::mix(rng_seed, ci), run));
      const double d = rng.uniform(sc.d_lo, sc.d_hi);
      const double sigma_px = rng.uniform(sc.sigma_lo, sc.sigma_hi);
      SyntheticScene scene;
      try {
        scene = generate_scene(sc.n, d, sigma_px, 0.0, rng);
      } catch (const VisibilityTimeout&) {
        continue;
      }
      const TriangulationProblem problem = to_problem(scene);
      std::vector<int> all(sc.n);
      for (int i = 0; i < sc.n; ++i) all[i] = i;

      Vec3 x;
      try {
        x = dlt_solve(problem, all);
      } catch (const PointAtInfinity&) {
        continue;
      }
      const RefinementState state = refine_gn_fixed(problem, x, all, config);
      const double e3d = (state.x_est - scene.point_gt).norm();
      if (!std::isfinite(e3d) || !std::isfinite(state.mean_e2d)) continue;

      std::vector<Vec3> rays(sc.n);
      for (int i = 0; i < sc.n; ++i) rays[i] = problem.ray(i);
      const double beta = max_parallax_exhaustive(rays);

      const size_t idx = grid.index(n_index(grid.n_axis, sc.n),
                                    bin_index(grid.e_axis, state.mean_e2d),
                                    bin_index(grid.beta_axis, beta));
      sumsq[idx] += e3d * e3d;
      grid.counts[idx] += 1.0;
    }
  }

  for (size_t i = 0; i < grid.cell_count(); ++i) {
    if (grid.counts[i] >= kMinCellCount) {
      grid.sigma[i] = std::min(std::sqrt(sumsq[i] / grid.counts[i]), kTruncate);
    }
  }

  // Fill unsimulated view counts by linear interpolation between the nearest
  // simulated, populated nodes along the n axis.
  const size_t Nn = grid.n_axis.size(), Ne = grid.e_axis.size(), Nb = grid.beta_axis.size();
  for (size_t ie = 0; ie < Ne; ++ie) {
    for (size_t ib = 0; ib < Nb; ++ib) {
      size_t prev = Nn;  // last simulated populated node seen
      for (size_t in = 0; in < Nn; ++in) {
        if (!simulated_n[in] || is_empty_cell(grid.at(in, ie, ib))) continue;
        if (prev != Nn && in > prev + 1) {
          const double v0 = grid.at(prev, ie, ib), v1 = grid.at(in, ie, ib);
          const double n0 = grid.n_axis[prev], n1 = grid.n_axis[in];
          for (size_t mid = prev + 1; mid < in; ++mid) {
            if (!is_empty_cell(grid.at(mid, ie, ib))) continue;
            const double t = (grid.n_axis[mid] - n0) / (n1 - n0);
            grid.at(mid, ie, ib) = v0 + t * (v1 - v0);
          }
        }
        prev = in;
      }
    }
  }

  std::ostringstream meta;
  meta << "{\"min_cell_count\":" << kMinCellCount << ",\"truncate\":" << kTruncate
       << ",\"pav_tol\":" << kPavTol << ",\"pav_max_sweeps\":" << kPavMaxSweeps
       << ",\"seed\":" << rng_seed << ",\"configs\":[";
  for (size_t ci = 0; ci < spec.size(); ++ci) {
    const SimConfig& sc = spec[ci];
    if (ci) meta << ",";
    meta << "{\"n\":" << sc.n << ",\"d\":[" << sc.d_lo << "," << sc.d_hi << "],\"sigma\":["
         << sc.sigma_lo << "," << sc.sigma_hi << "],\"runs\":" << sc.runs << "}";
  }
  meta << "]}";
  grid.meta = meta.str();

  monotone_smooth(grid);
  return grid;
}

double sampled_max_parallax(const TriangulationProblem& problem, std::span<const int> inliers,
                            int delta_pair, Rng& rng) {
  const int m = static_cast<int>(inliers.size());
  if (m < 2) throw TooFewInliers("need at least 2 inliers for a parallax angle");
  const long long all_pairs = static_cast<long long>(m) * (m - 1) / 2;
  const long long budget = std::min<long long>(delta_pair, all_pairs);
  double p_min = 1.0;
  for (long long drawn = 0; drawn < budget; ++drawn) {
    const auto [a, b] = rng.distinct_pair(m);
    const double p = std::abs(problem.ray(inliers[a]).dot(problem.ray(inliers[b])));
    p_min = std::min(p_min, p);
  }
  return std::acos(std::clamp(p_min, 0.0, 1.0)) * 180.0 / M_PI;
}

namespace {

// Bracketing index and interpolation weight along one axis, with the query
// clamped into [axis.front(), axis.back()].
std::pair<size_t, double> locate(const std::vector<double>& axis, double v) {
  v = std::clamp(v, axis.front(), axis.back());
  if (axis.size() == 1) return {0, 0.0};
  size_t i = static_cast<size_t>(std::upper_bound(axis.begin(), axis.end(), v) - axis.begin());
  i = std::clamp<size_t>(i, 1, axis.size() - 1) - 1;
  const double t = (v - axis[i]) / (axis[i + 1] - axis[i]);
  return {i, t};
}

}  // namespace

double estimate_sigma(const UncertaintyGrid& grid, int inlier_count, double mean_e2d,
                      double beta_max_deg) {
  if (grid.n_axis.empty() || grid.e_axis.empty() || grid.beta_axis.empty() ||
      grid.sigma.size() != grid.cell_count()) {
    throw InvalidGrid("grid axes and sigma array are inconsistent");
  }
  const auto [in, tn] = locate(grid.n_axis, std::min(static_cast<double>(inlier_count), 50.0));
  const auto [ie, te] = locate(grid.e_axis, std::min(mean_e2d, 20.0));
  const auto [ib, tb] = locate(grid.beta_axis, std::min(beta_max_deg, 20.0));

  auto node = [&](size_t dn, size_t de, size_t db) {
    return grid.at(std::min(in + dn, grid.n_axis.size() - 1),
                   std::min(ie + de, grid.e_axis.size() - 1),
                   std::min(ib + db, grid.beta_axis.size() - 1));
  };
  double result = 0.0;
  for (int dn = 0; dn < 2; ++dn) {
    for (int de = 0; de < 2; ++de) {
      for (int db = 0; db < 2; ++db) {
        const double w = (dn ? tn : 1.0 - tn) * (de ? te : 1.0 - te) * (db ? tb : 1.0 - tb);
        if (w != 0.0) result += w * node(dn, de, db);
      }
    }
  }
  return result;
}

}  // namespace mvtri
