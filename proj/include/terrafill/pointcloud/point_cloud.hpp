// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "terrafill/error.hpp"
#include "terrafill/types.hpp"

namespace terrafill::cloud {

/// Ordered point set with optional per-point unit normals.
struct PointCloud {
  std::vector<Point3> points;
  std::optional<std::vector<Vector3>> normals;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> pts) : points(std::move(pts)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return normals.has_value(); }

  friend bool operator==(const PointCloud& a, const PointCloud& b) {
    return a.points == b.points && a.normals == b.normals;
  }
};

/// Throws InvalidParameter when a coordinate is not finite or a normal is not
/// unit length (within 1e-6) or the normal array length differs.
inline void validate(const PointCloud& c) {
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    if (!is_finite(c.points[i])) {
      throw InvalidParameter("point " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
  if (c.normals) {
    if (c.normals->size() != c.points.size()) {
      throw InvalidParameter("normal count does not match point count");
    }
    for (std::size_t i = 0; i < c.normals->size(); ++i) {
      if (std::abs((*c.normals)[i].norm() - 1.0) > 1e-6) {
        throw InvalidParameter("normal " + std::to_string(i) + " is not unit length");
      }
    }
  }
}

inline void require_nonempty(const PointCloud& c, const char* what) {
  if (c.empty()) throw EmptyCloud(std::string(what) + ": point cloud is empty");
}

inline PointCloud concatenate(const PointCloud& a, const PointCloud& b) {
  PointCloud out;
  out.points.reserve(a.size() + b.size());
  out.points.insert(out.points.end(), a.points.begin(), a.points.end());
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  if (a.normals && b.normals) {
    std::vector<Vector3> n;
    n.reserve(out.points.size());
    n.insert(n.end(), a.normals->begin(), a.normals->end());
    n.insert(n.end(), b.normals->begin(), b.normals->end());
    out.normals = std::move(n);
  }
  return out;
}

}  // namespace terrafill::cloud
