// SPDX-License-Identifier: Apache-2.0
//
// New points for former holes: beta = S(alpha) + I(alpha) * n(alpha), with
// alpha drawn from a Halton stream and I interpolated from the filled map.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "terrafill/bspline/footprint.hpp"
#include "terrafill/bspline/surface.hpp"
#include "terrafill/heightfield/height_field.hpp"
#include "terrafill/heightfield/raster.hpp"
#include "terrafill/pointcloud/point_cloud.hpp"
#include "terrafill/reconstruct/halton.hpp"

namespace terrafill::reconstruct {

struct ReconstructionSample {
  ParamPoint param;
  Point3 surface_point = Point3::Zero();
  Vector3 normal = Vector3::UnitZ();
  double intensity = 0.0;
  Point3 output_point = Point3::Zero();
};

/// Unit normal S_u x S_v.
inline Vector3 surface_normal(const bspline::BSplineSurface& s, const ParamPoint& p) {
  const auto d = s.derivatives(p, 1);
  const Vector3 n = d.su.cross(d.sv);
  const double len = n.norm();
  if (!(len >= 1e-12)) {
    throw DegenerateTangent("surface_normal: tangents are parallel at (" + std::to_string(p.u) + ", " +
                            std::to_string(p.v) + ")");
  }
  return n / len;
}

/// Bilinear interpolation over cell centers; (u, v) maps to lattice
/// coordinates (u r - 0.5, v r - 0.5), clamped to the outermost centers.
inline double sample_intensity(const heightfield::HeightField& h, const ParamPoint& p) {
  if (h.r == 0) throw InvalidParameter("sample_intensity: empty height field");
  const double hi = static_cast<double>(h.r - 1);
  const double fx = std::clamp(p.u * static_cast<double>(h.r) - 0.5, 0.0, hi);
  const double fy = std::clamp(p.v * static_cast<double>(h.r) - 0.5, 0.0, hi);
  const auto x0 = static_cast<std::size_t>(std::floor(fx));
  const auto y0 = static_cast<std::size_t>(std::floor(fy));
  const std::size_t x1 = std::min(x0 + 1, h.r - 1), y1 = std::min(y0 + 1, h.r - 1);
  const double tx = fx - static_cast<double>(x0), ty = fy - static_cast<double>(y0);
  const double a = h.at(x0, y0), b = h.at(x1, y0), c = h.at(x0, y1), d = h.at(x1, y1);
  if (std::isnan(a) || std::isnan(b) || std::isnan(c) || std::isnan(d)) {
    throw InvalidParameter("sample_intensity: height field still has holes");
  }
  return (1.0 - ty) * ((1.0 - tx) * a + tx * b) + ty * ((1.0 - tx) * c + tx * d);
}

inline ReconstructionSample make_sample(const bspline::BSplineSurface& s, const heightfield::HeightField& h,
                                        const ParamPoint& p) {
  ReconstructionSample out;
  out.param = p;
  out.surface_point = s.evaluate(p);
  out.normal = surface_normal(s, p);
  out.intensity = sample_intensity(h, p);
  out.output_point = out.surface_point + out.intensity * out.normal;
  return out;
}

struct FillResult {
  std::vector<ReconstructionSample> samples;
  std::size_t target = 0;  // requested number of new points
  std::size_t draws = 0;   // Halton points consumed
  std::size_t hole_cells = 0;
  double mean_count = 0.0;  // projections per known cell of the original map

  cloud::PointCloud cloud() const {
    cloud::PointCloud c;
    c.points.reserve(samples.size());
    for (const auto& s : samples) c.points.push_back(s.output_point);
    return c;
  }
};

/// Cell mask (row-major, nonzero = excluded) of hole cells whose center
/// maps outside the footprint hull of the input cloud. Those cells lie
/// beyond the data rather than inside a gap in it.
inline std::vector<std::uint8_t> exterior_holes(const bspline::BSplineSurface& s,
                                                const heightfield::HeightField& before,
                                                const bspline::FootprintHull& hull) {
  std::vector<std::uint8_t> mask(before.values.size(), 0);
  for (std::size_t y = 0; y < before.r; ++y) {
    for (std::size_t x = 0; x < before.r; ++x) {
      if (!before.is_hole(x, y)) continue;
      const ParamPoint p{(static_cast<double>(x) + 0.5) / static_cast<double>(before.r),
                         (static_cast<double>(y) + 0.5) / static_cast<double>(before.r)};
      mask[before.index(x, y)] = hull.contains(s.evaluate(p)) ? 0 : 1;
    }
  }
  return mask;
}

namespace detail {
inline bool excluded(const std::vector<std::uint8_t>& mask, std::size_t i) { return !mask.empty() && mask[i]; }
}  // namespace detail

inline std::size_t fill_target(const heightfield::HeightField& before, double density_factor, double* mean_out = nullptr,
                               const std::vector<std::uint8_t>& exclude = {}) {
  if (!exclude.empty() && exclude.size() != before.values.size()) {
    throw InvalidParameter("fill_target: exclusion mask does not match the height field");
  }
  std::size_t holes = 0, known = 0;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < before.values.size(); ++i) {
    if (before.is_hole(i)) {
      if (!detail::excluded(exclude, i)) ++holes;
    } else {
      ++known;
      total += before.counts[i];
    }
  }
  const double mean = known ? static_cast<double>(total) / static_cast<double>(known) : 0.0;
  if (mean_out) *mean_out = mean;
  return static_cast<std::size_t>(std::llround(static_cast<double>(holes) * mean * density_factor));
}

/// Samples new points in the cells that were holes in `before`, using the
/// filled values of `after`. The count matches the mean number of
/// projections per known cell, scaled by `density_factor`. Hole cells set in
/// `exclude` receive no points.
inline FillResult fill_holes(const bspline::BSplineSurface& s, const heightfield::HeightField& before,
                             const heightfield::HeightField& after, double density_factor = 1.0,
                             std::size_t halton_skip = kDefaultHaltonSkip,
                             const std::vector<std::uint8_t>& exclude = {}) {
  if (before.r != after.r) throw InvalidParameter("fill_holes: height fields differ in resolution");
  if (!(density_factor >= 0.0) || !std::isfinite(density_factor)) {
    throw InvalidParameter("fill_holes: density factor must be nonnegative");
  }
  if (after.hole_count() != 0) throw InvalidParameter("fill_holes: filled height field still has holes");
  FillResult res;
  res.target = fill_target(before, density_factor, &res.mean_count, exclude);
  for (std::size_t i = 0; i < before.values.size(); ++i) {
    if (before.is_hole(i) && !detail::excluded(exclude, i)) ++res.hole_cells;
  }
  if (res.hole_cells == 0 || res.target == 0) return res;

  const std::size_t cap = 1000 * res.target;
  std::vector<ParamPoint> chosen;
  chosen.reserve(res.target);
  std::uint64_t index = halton_skip;
  while (chosen.size() < res.target) {
    if (res.draws >= cap) {
      throw HoleCoverageFailure("fill_holes: only " + std::to_string(chosen.size()) + " of " +
                                std::to_string(res.target) + " points landed in holes after " +
                                std::to_string(cap) + " draws");
    }
    const ParamPoint p = halton_point(++index);
    ++res.draws;
    const std::size_t x = heightfield::cell_of(p.u, before.r), y = heightfield::cell_of(p.v, before.r);
    const std::size_t i = before.index(x, y);
    if (before.is_hole(i) && !detail::excluded(exclude, i)) chosen.push_back(p);
  }
  res.samples.reserve(chosen.size());
  for (const auto& p : chosen) res.samples.push_back(make_sample(s, after, p));
  return res;
}

/// One point per known cell, placed at the cell center. Used to measure how
/// faithfully the surface plus height map represent a cloud.
inline cloud::PointCloud synthesize_cell_centers(const bspline::BSplineSurface& s, const heightfield::HeightField& h) {
  cloud::PointCloud out;
  for (std::size_t y = 0; y < h.r; ++y) {
    for (std::size_t x = 0; x < h.r; ++x) {
      if (h.is_hole(x, y)) continue;
      const ParamPoint p{(static_cast<double>(x) + 0.5) / static_cast<double>(h.r),
                         (static_cast<double>(y) + 0.5) / static_cast<double>(h.r)};
      out.points.push_back(s.evaluate(p) + h.at(x, y) * surface_normal(s, p));
    }
  }
  return out;
}

}  // namespace terrafill::reconstruct
