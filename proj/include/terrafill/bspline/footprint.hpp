// SPDX-License-Identifier: Apache-2.0
//
// Planar footprint frame of a cloud: the plane spanned by the two dominant
// OBB axes, with in-plane axes aligned to the minimum-area bounding rectangle
// of the projected points. Uniform parameterization and the initial control
// net are both expressed in this frame.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "terrafill/bspline/surface.hpp"
#include "terrafill/pointcloud/obb.hpp"
#include "terrafill/pointcloud/point_cloud.hpp"
#include "terrafill/types.hpp"

namespace terrafill::bspline {

struct FootprintFrame {
  Point3 center = Point3::Zero();
  Vector3 axis_u = Vector3::UnitX();
  Vector3 axis_v = Vector3::UnitY();
  Vector3 normal = Vector3::UnitZ();  // axis_u x axis_v
  double min_u = 0.0;                 // footprint bounds relative to center
  double min_v = 0.0;
  double extent_u = 0.0;
  double extent_v = 0.0;

  double coord_u(const Point3& p) const { return (p - center).dot(axis_u); }
  double coord_v(const Point3& p) const { return (p - center).dot(axis_v); }
  double height(const Point3& p) const { return (p - center).dot(normal); }

  /// World point at normalized footprint coordinates (s,t) and height h.
  Point3 to_world(double s, double t, double h) const {
    return center + (min_u + s * extent_u) * axis_u + (min_v + t * extent_v) * axis_v + h * normal;
  }
  double scale() const { return std::max(extent_u, extent_v); }
};

namespace detail {

using Vec2 = std::array<double, 2>;

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

/// Andrew's monotone chain; collinear points dropped, counter-clockwise.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace detail

inline FootprintFrame compute_footprint(const cloud::PointCloud& cloud) {
  cloud::require_nonempty(cloud, "footprint");
  const cloud::OrientedBoundingBox box = cloud::compute_obb(cloud);
  const Vector3 e1 = box.axes[0];
  const Vector3 e2 = box.axes[1];

  std::vector<detail::Vec2> flat;
  flat.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    const Vector3 d = p - box.center;
    flat.push_back({d.dot(e1), d.dot(e2)});
  }
  const auto hull = detail::convex_hull(flat);

  // Minimum-area rectangle: one side is collinear with a hull edge.
  double best_area = std::numeric_limits<double>::infinity();
  double best_c = 1.0, best_s = 0.0;
  for (std::size_t i = 0; hull.size() >= 3 && i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    if (len <= 0.0) continue;
    const double c = (b[0] - a[0]) / len, s = (b[1] - a[1]) / len;
    double lo0 = std::numeric_limits<double>::infinity(), hi0 = -lo0, lo1 = lo0, hi1 = -lo0;
    for (const auto& q : hull) {
      const double x = c * q[0] + s * q[1];
      const double y = -s * q[0] + c * q[1];
      lo0 = std::min(lo0, x);
      hi0 = std::max(hi0, x);
      lo1 = std::min(lo1, y);
      hi1 = std::max(hi1, y);
    }
    const double area = (hi0 - lo0) * (hi1 - lo1);
    if (area < best_area * (1.0 - 1e-12)) {
      best_area = area;
      best_c = c;
      best_s = s;
      if (hi1 - lo1 > hi0 - lo0) {  // keep u along the longer side
        best_c = -s;
        best_s = c;
      }
    }
  }

  FootprintFrame f;
  f.center = box.center;
  f.normal = box.axes[2];
  Vector3 u = best_c * e1 + best_s * e2;
  if (u.dot(e1) < 0.0 || (u.dot(e1) == 0.0 && u.dot(e2) < 0.0)) u = -u;
  f.axis_u = u.normalized();
  f.axis_v = f.normal.cross(f.axis_u).normalized();

  double lo_u = std::numeric_limits<double>::infinity(), hi_u = -lo_u, lo_v = lo_u, hi_v = -lo_u;
  for (const auto& p : cloud.points) {
    const double a = f.coord_u(p), b = f.coord_v(p);
    lo_u = std::min(lo_u, a);
    hi_u = std::max(hi_u, a);
    lo_v = std::min(lo_v, b);
    hi_v = std::max(hi_v, b);
  }
  f.min_u = lo_u;
  f.min_v = lo_v;
  f.extent_u = hi_u - lo_u;
  f.extent_v = hi_v - lo_v;
  return f;
}

/// Affine footprint coordinates; the extreme points map to exactly 0 and 1.
inline std::vector<ParamPoint> parameterize_uniform(const cloud::PointCloud& cloud, const FootprintFrame& f) {
  if (!(f.extent_u > 0.0) || !(f.extent_v > 0.0)) {
    throw DegenerateFootprint("parameterize_uniform: footprint has zero extent along an axis");
  }
  std::vector<ParamPoint> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    const double u = (f.coord_u(p) - f.min_u) / f.extent_u;
    const double v = (f.coord_v(p) - f.min_v) / f.extent_v;
    out.push_back({std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)});
  }
  return out;
}

inline std::vector<ParamPoint> parameterize_uniform(const cloud::PointCloud& cloud) {
  return parameterize_uniform(cloud, compute_footprint(cloud));
}

/// Convex hull of a cloud projected onto its principal plane.
struct FootprintHull {
  Point3 center = Point3::Zero();
  Vector3 e1 = Vector3::UnitX();
  Vector3 e2 = Vector3::UnitY();
  std::vector<std::array<double, 2>> polygon;  // counter-clockwise
  double tolerance = 0.0;

  /// True when the projection of `p` lies inside the hull or within
  /// `tolerance` of it. Degenerate hulls contain every point.
  bool contains(const Point3& p) const {
    if (polygon.size() < 3) return true;
    const Vector3 d = p - center;
    const detail::Vec2 q{d.dot(e1), d.dot(e2)};
    for (std::size_t i = 0; i < polygon.size(); ++i) {
      const auto& a = polygon[i];
      const auto& b = polygon[(i + 1) % polygon.size()];
      const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
      if (detail::cross2(a, b, q) < -tolerance * len) return false;
    }
    return true;
  }
};

inline FootprintHull footprint_hull(const cloud::PointCloud& cloud) {
  cloud::require_nonempty(cloud, "footprint_hull");
  const cloud::OrientedBoundingBox box = cloud::compute_obb(cloud);
  FootprintHull h;
  h.center = box.center;
  h.e1 = box.axes[0];
  h.e2 = box.axes[1];
  std::vector<detail::Vec2> flat;
  flat.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    const Vector3 d = p - box.center;
    flat.push_back({d.dot(h.e1), d.dot(h.e2)});
  }
  h.polygon = detail::convex_hull(std::move(flat));
  h.tolerance = 1e-9 * box.diagonal();
  return h;
}

/// Bilinear patch spanning the footprint rectangle at zero height: the
/// footprint plane itself, parameterized like parameterize_uniform().
inline BSplineSurface plane_surface(const FootprintFrame& f) {
  std::vector<Point3> control{f.to_world(0, 0, 0), f.to_world(0, 1, 0), f.to_world(1, 0, 0), f.to_world(1, 1, 0)};
  return BSplineSurface::clamped_uniform(1, 1, 1, std::move(control));
}

}  // namespace terrafill::bspline
