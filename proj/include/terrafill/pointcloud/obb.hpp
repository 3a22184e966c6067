// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <limits>
#include <span>

#include "terrafill/pointcloud/point_cloud.hpp"

namespace terrafill::cloud {

/// Covariance-aligned bounding box. axes[0] is the direction of largest
/// variance, axes[2] of smallest; each axis is sign-normalized so that its
/// largest-magnitude component is positive.
struct OrientedBoundingBox {
  Point3 center = Point3::Zero();
  std::array<Vector3, 3> axes{Vector3::UnitX(), Vector3::UnitY(), Vector3::UnitZ()};
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();

  std::size_t longest_axis() const {
    std::size_t k = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (half_extents[static_cast<int>(i)] > half_extents[static_cast<int>(k)]) k = i;
    }
    return k;
  }
  double longest_half_extent() const { return half_extents.maxCoeff(); }
  double diagonal() const { return 2.0 * half_extents.norm(); }
  double volume() const { return 8.0 * half_extents.prod(); }
};

inline Vector3 canonical_sign(Vector3 a) {
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(a[i]) > std::abs(a[k])) k = i;
  }
  return a[k] < 0.0 ? Vector3(-a) : a;
}

/// Mean and covariance of a point set.
inline std::pair<Point3, Eigen::Matrix3d> covariance(std::span<const Point3> pts) {
  Point3 mean = Point3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    const Vector3 d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());
  return {mean, cov};
}

inline OrientedBoundingBox compute_obb(std::span<const Point3> pts) {
  if (pts.empty()) throw EmptyCloud("compute_obb: point cloud is empty");
  auto [mean, cov] = covariance(pts);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  OrientedBoundingBox box;
  // Eigen returns ascending eigenvalues.
  for (int i = 0; i < 3; ++i) {
    box.axes[static_cast<std::size_t>(i)] = canonical_sign(es.eigenvectors().col(2 - i).normalized());
  }

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& p : pts) {
    const Vector3 d = p - mean;
    for (int i = 0; i < 3; ++i) {
      const double t = d.dot(box.axes[static_cast<std::size_t>(i)]);
      lo[i] = std::min(lo[i], t);
      hi[i] = std::max(hi[i], t);
    }
  }
  box.center = mean;
  for (int i = 0; i < 3; ++i) {
    box.center += 0.5 * (lo[i] + hi[i]) * box.axes[static_cast<std::size_t>(i)];
    box.half_extents[i] = 0.5 * (hi[i] - lo[i]);
  }
  return box;
}

inline OrientedBoundingBox compute_obb(const PointCloud& c) { return compute_obb(std::span<const Point3>(c.points)); }

}  // namespace terrafill::cloud
