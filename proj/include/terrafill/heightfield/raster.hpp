// SPDX-License-Identifier: Apache-2.0
//
// Adaptive raster resolution and extremum rasterization of signed distances.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "terrafill/heightfield/height_field.hpp"
#include "terrafill/heightfield/projection.hpp"
#include "terrafill/pointcloud/kd_index.hpp"

namespace terrafill::heightfield {

inline constexpr std::size_t kDefaultDensityK = 8;
inline constexpr std::size_t kDefaultMaxResolution = 4096;

/// Mean over points of the median distance to their k nearest neighbors in
/// parameter space.
inline double estimate_density(const std::vector<ParamPoint>& params, std::size_t k = kDefaultDensityK) {
  if (k < 1) throw InvalidParameter("estimate_density: k must be at least 1");
  if (params.size() < k + 1) {
    throw InvalidParameter("estimate_density: need at least k+1 points, got " + std::to_string(params.size()));
  }
  const auto index = cloud::build_index(params);
  double total = 0.0;
  std::vector<double> d;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto nb = index.knn({params[i].u, params[i].v}, k + 1);
    d.clear();
    bool skipped_self = false;
    for (const auto& n : nb) {
      if (!skipped_self && n.index == i) {
        skipped_self = true;
        continue;
      }
      d.push_back(std::sqrt(n.distance2));
    }
    // Self may be displaced by an exact duplicate ranked ahead of it.
    if (!skipped_self) d.pop_back();
    const double med = (k % 2 == 1) ? d[k / 2] : 0.5 * (d[k / 2 - 1] + d[k / 2]);
    total += med;
  }
  return total / static_cast<double>(params.size());
}

inline std::vector<ParamPoint> valid_params(const std::vector<SignedProjection>& proj) {
  std::vector<ParamPoint> out;
  out.reserve(proj.size());
  for (const auto& p : proj) {
    if (p.valid) out.push_back(p.param);
  }
  return out;
}

inline std::size_t choose_resolution(double rho, std::size_t r_max = kDefaultMaxResolution) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidParameter("choose_resolution: density must be positive");
  if (r_max < 2) throw InvalidParameter("choose_resolution: maximum resolution must be at least 2");
  const double r = std::round(1.0 / rho);
  return static_cast<std::size_t>(std::clamp(r, 2.0, static_cast<double>(r_max)));
}

/// Cell index along one axis; t = 1 falls in the last cell.
inline std::size_t cell_of(double t, std::size_t r) {
  const auto c = static_cast<std::ptrdiff_t>(std::floor(t * static_cast<double>(r)));
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(r) - 1));
}

/// Each cell keeps the maximum of its distances when positives are at least
/// as many as non-positives, else the minimum. Invalid projections are
/// skipped; empty cells are holes.
inline HeightField rasterize(const std::vector<SignedProjection>& proj, std::size_t r, double rho = 0.0) {
  if (r < 2) throw InvalidParameter("rasterize: resolution must be at least 2");
  HeightField h(r, rho);
  const std::size_t cells = r * r;
  std::vector<std::uint32_t> pos(cells, 0), neg(cells, 0);
  std::vector<double> hi(cells, -std::numeric_limits<double>::infinity());
  std::vector<double> lo(cells, std::numeric_limits<double>::infinity());
  for (const auto& p : proj) {
    if (!p.valid) continue;
    const std::size_t i = h.index(cell_of(p.param.u, r), cell_of(p.param.v, r));
    (p.signed_distance > 0.0 ? pos : neg)[i]++;
    hi[i] = std::max(hi[i], p.signed_distance);
    lo[i] = std::min(lo[i], p.signed_distance);
  }
  for (std::size_t i = 0; i < cells; ++i) {
    h.counts[i] = pos[i] + neg[i];
    if (h.counts[i] > 0) h.values[i] = pos[i] >= neg[i] ? hi[i] : lo[i];
  }
  return h;
}

}  // namespace terrafill::heightfield
