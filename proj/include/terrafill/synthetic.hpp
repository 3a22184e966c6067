// SPDX-License-Identifier: Apache-2.0
//
// Synthetic terrain for demos and benchmarks: a smooth undulation plus
// band-limited noise sampled on a regular grid, with an irregular blob
// carved out.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "terrafill/pointcloud/point_cloud.hpp"
#include "terrafill/types.hpp"

namespace terrafill::synthetic {

struct TerrainOptions {
  std::size_t grid = 300;        // samples per side over [0,1]^2
  double noise_amplitude = 0.02;
  std::size_t noise_waves = 8;
  double min_wavenumber = 6.0;   // cycles per unit length
  double max_wavenumber = 14.0;
  double hole_fraction = 0.1;
  std::uint64_t seed = 7;
};

struct Terrain {
  cloud::PointCloud full;
  cloud::PointCloud carved;   // full minus the blob
  cloud::PointCloud removed;  // the blob: ground truth for the hole
};

class TerrainFunction {
 public:
  explicit TerrainFunction(const TerrainOptions& opt) : amp_(opt.noise_amplitude) {
    Rng rng(opt.seed);
    double norm = 0.0;
    for (std::size_t k = 0; k < opt.noise_waves; ++k) {
      Wave w;
      const double f = rng.uniform(opt.min_wavenumber, opt.max_wavenumber);
      const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
      w.kx = 2.0 * std::numbers::pi * f * std::cos(dir);
      w.ky = 2.0 * std::numbers::pi * f * std::sin(dir);
      w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      w.a = rng.uniform(0.5, 1.0);
      norm += w.a;
      waves_.push_back(w);
    }
    for (auto& w : waves_) w.a /= norm;
  }

  double base(double x, double y) const { return 0.2 * std::sin(3.0 * x) * std::cos(2.0 * y); }

  /// Noise in [-1, 1] before scaling.
  double noise(double x, double y) const {
    double s = 0.0;
    for (const auto& w : waves_) s += w.a * std::sin(w.kx * x + w.ky * y + w.phase);
    return s;
  }

  double operator()(double x, double y) const { return base(x, y) + amp_ * noise(x, y); }

 private:
  struct Wave {
    double kx, ky, phase, a;
  };
  double amp_;
  std::vector<Wave> waves_;
};

inline Terrain make_terrain(const TerrainOptions& opt = {}) {
  const TerrainFunction f(opt);
  Rng rng(opt.seed ^ 0xB10Bull);
  const double phi1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double phi2 = rng.uniform(0.0, 2.0 * std::numbers::pi);

  Terrain t;
  const std::size_t n = opt.grid;
  std::vector<double> ratio;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(n - 1);
      const double y = static_cast<double>(j) / static_cast<double>(n - 1);
      t.full.points.emplace_back(x, y, f(x, y));
      // Distance from the blob center relative to the blob's radius profile.
      const double dx = x - 0.5, dy = y - 0.5;
      const double th = std::atan2(dy, dx);
      const double prof = 1.0 + 0.3 * std::sin(3.0 * th + phi1) + 0.15 * std::sin(5.0 * th + phi2);
      ratio.push_back(std::hypot(dx, dy) / prof);
    }
  }
  const auto carve =
      static_cast<std::size_t>(std::llround(opt.hole_fraction * static_cast<double>(t.full.size())));
  std::vector<std::size_t> order(t.full.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ratio[a] < ratio[b]; });
  std::vector<char> in_hole(t.full.size(), 0);
  for (std::size_t k = 0; k < carve; ++k) in_hole[order[k]] = 1;
  for (std::size_t k = 0; k < t.full.size(); ++k) {
    (in_hole[k] ? t.removed : t.carved).points.push_back(t.full.points[k]);
  }
  return t;
}

}  // namespace terrafill::synthetic
