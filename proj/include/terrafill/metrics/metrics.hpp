// SPDX-License-Identifier: Apache-2.0
//
// Cloud-to-cloud quality measures: point-to-plane PSNR, volume-normalized
// symmetric Hausdorff distance, surface-fit NRMSE, height-map RMSE and
// per-point nearest-neighbor error maps.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "terrafill/bspline/projection.hpp"
#include "terrafill/file_io.hpp"
#include "terrafill/heightfield/height_field.hpp"
#include "terrafill/pointcloud/kd_index.hpp"
#include "terrafill/pointcloud/normals.hpp"
#include "terrafill/pointcloud/obb.hpp"

namespace terrafill::metrics {

struct GpsnrOptions {
  bool symmetric = true;   // average both directions; false: only a -> b
  bool union_peak = false; // peak from the OBB of a and b together
  std::size_t normal_k = cloud::kDefaultNormalK;
};

struct Gpsnr {
  double db = 0.0;
  bool saturated = false;
  double mse = 0.0;   // mean squared point-to-plane distance
  double peak = 0.0;  // bounding-box diagonal
};

namespace detail {

inline const std::vector<Vector3>& normals_of(const cloud::PointCloud& c, std::size_t k,
                                              std::optional<std::vector<Vector3>>& storage) {
  if (c.normals) return *c.normals;
  if (c.size() < 4) throw InvalidParameter("gpsnr: need at least 4 points to estimate normals");
  storage = *cloud::estimate_normals(c, std::min(k, c.size() - 1)).cloud.normals;
  return *storage;
}

/// Mean of squared distances from each point of `from` to the tangent plane
/// at its nearest point in `to`.
inline double point_to_plane_mse(const cloud::PointCloud& from, const cloud::PointCloud& to,
                                 const std::vector<Vector3>& to_normals) {
  const auto index = cloud::build_index(to);
  double sum = 0.0;
  for (const auto& p : from.points) {
    const auto nb = index.nearest(cloud::to_coord(p));
    const double d = (p - to.points[nb.index]).dot(to_normals[nb.index]);
    sum += d * d;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace detail

inline Gpsnr gpsnr(const cloud::PointCloud& a, const cloud::PointCloud& b, const GpsnrOptions& opt = {}) {
  cloud::require_nonempty(a, "gpsnr");
  cloud::require_nonempty(b, "gpsnr");
  Gpsnr out;
  if (opt.union_peak) {
    out.peak = cloud::compute_obb(cloud::concatenate(a, b)).diagonal();
  } else {
    out.peak = cloud::compute_obb(a).diagonal();
  }
  std::optional<std::vector<Vector3>> store_a, store_b;
  const double ab = detail::point_to_plane_mse(a, b, detail::normals_of(b, opt.normal_k, store_b));
  if (opt.symmetric) {
    const double ba = detail::point_to_plane_mse(b, a, detail::normals_of(a, opt.normal_k, store_a));
    out.mse = 0.5 * (ab + ba);
  } else {
    out.mse = ab;
  }
  const double p2 = out.peak * out.peak;
  if (out.mse < 1e-24 * p2 || p2 == 0.0) {
    out.saturated = true;
    out.db = std::numeric_limits<double>::infinity();
  } else {
    out.db = 10.0 * std::log10(p2 / out.mse);
  }
  return out;
}

/// Largest distance from a point of `from` to its nearest point in `to`.
inline double one_sided_hausdorff(const cloud::PointCloud& from, const cloud::PointCloud& to) {
  cloud::require_nonempty(from, "hausdorff");
  cloud::require_nonempty(to, "hausdorff");
  const auto index = cloud::build_index(to);
  double worst = 0.0;
  for (const auto& p : from.points) worst = std::max(worst, index.nearest(cloud::to_coord(p)).distance2);
  return std::sqrt(worst);
}

struct Nshd {
  double value = 0.0;
  double ohd_ab = 0.0;
  double ohd_ba = 0.0;
  double normalizer = 0.0;       // OBB volume of a, or its diagonal when degenerate
  bool degenerate_volume = false;
};

inline Nshd nshd(const cloud::PointCloud& a, const cloud::PointCloud& b) {
  cloud::require_nonempty(a, "nshd");
  cloud::require_nonempty(b, "nshd");
  Nshd out;
  out.ohd_ab = one_sided_hausdorff(a, b);
  out.ohd_ba = one_sided_hausdorff(b, a);
  const auto box = cloud::compute_obb(a);
  out.normalizer = box.volume();
  if (out.normalizer < 1e-18) {
    out.degenerate_volume = true;
    out.normalizer = box.diagonal();
  }
  const double h = std::max(out.ohd_ab, out.ohd_ba);
  out.value = out.normalizer > 0.0 ? h / out.normalizer : (h == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return out;
}

/// Root-mean-square point-to-surface distance over the OBB diagonal of the
/// cloud, clamped to [0, 1].
inline double nrmse_fit(const cloud::PointCloud& c, const bspline::BSplineSurface& s,
                        const bspline::ProjectionOptions& opt = {}) {
  cloud::require_nonempty(c, "nrmse");
  const bspline::SurfaceProjector projector(s, opt);
  double sum = 0.0;
  for (const auto& p : c.points) {
    const double d = projector.project(p).distance;
    sum += d * d;
  }
  const double rms = std::sqrt(sum / static_cast<double>(c.size()));
  const double range = cloud::compute_obb(c).diagonal();
  if (!(range > 0.0)) return rms == 0.0 ? 0.0 : 1.0;
  return std::clamp(rms / range, 0.0, 1.0);
}

/// Distance from every result point to its nearest truth point.
inline std::vector<double> error_map(const cloud::PointCloud& result, const cloud::PointCloud& truth) {
  cloud::require_nonempty(result, "error_map");
  cloud::require_nonempty(truth, "error_map");
  const auto index = cloud::build_index(truth);
  std::vector<double> out;
  out.reserve(result.size());
  for (const auto& p : result.points) out.push_back(std::sqrt(index.nearest(cloud::to_coord(p)).distance2));
  return out;
}

/// RMSE over cells valued in both maps.
inline double rmse(const heightfield::HeightField& a, const heightfield::HeightField& b) {
  if (a.r != b.r) throw InvalidParameter("rmse: height fields differ in resolution");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.is_hole(i) || b.is_hole(i)) continue;
    const double d = a.values[i] - b.values[i];
    sum += d * d;
    ++n;
  }
  if (n == 0) throw InvalidParameter("rmse: no cell is valued in both height fields");
  return std::sqrt(sum / static_cast<double>(n));
}

struct MetricReport {
  Gpsnr gpsnr;
  Nshd nshd;
  std::optional<double> nrmse;
  std::optional<double> rmse;
  std::vector<double> error_map;
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string format_key_values(const MetricReport& m) {
  std::string out;
  out += "gpsnr_db=" + (m.gpsnr.saturated ? std::string("saturated") : format_number(m.gpsnr.db)) + "\n";
  out += "gpsnr_mse=" + format_number(m.gpsnr.mse) + "\n";
  out += "gpsnr_peak=" + format_number(m.gpsnr.peak) + "\n";
  out += "nshd=" + format_number(m.nshd.value) + "\n";
  out += "nshd_ohd_ab=" + format_number(m.nshd.ohd_ab) + "\n";
  out += "nshd_ohd_ba=" + format_number(m.nshd.ohd_ba) + "\n";
  out += "nshd_normalizer=" + format_number(m.nshd.normalizer) + "\n";
  out += std::string("nshd_degenerate_volume=") + (m.nshd.degenerate_volume ? "1" : "0") + "\n";
  out += "nrmse=" + (m.nrmse ? format_number(*m.nrmse) : std::string("na")) + "\n";
  out += "rmse=" + (m.rmse ? format_number(*m.rmse) : std::string("na")) + "\n";
  return out;
}

inline std::string format_csv(const MetricReport& m) {
  std::string out = "gpsnr_db,nshd,nrmse,rmse\n";
  out += (m.gpsnr.saturated ? std::string("saturated") : format_number(m.gpsnr.db)) + "," +
         format_number(m.nshd.value) + "," + (m.nrmse ? format_number(*m.nrmse) : std::string("")) + "," +
         (m.rmse ? format_number(*m.rmse) : std::string("")) + "\n";
  return out;
}

/// Four columns: x y z distance.
inline std::string format_error_map(const cloud::PointCloud& result, const std::vector<double>& dist) {
  if (dist.size() != result.size()) throw InvalidParameter("error map length does not match the cloud");
  std::string out;
  char buf[128];
  for (std::size_t i = 0; i < result.size(); ++i) {
    const auto& p = result.points[i];
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g\n", p.x(), p.y(), p.z(), dist[i]);
    out += buf;
  }
  return out;
}

}  // namespace terrafill::metrics
