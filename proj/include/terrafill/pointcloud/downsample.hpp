// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "terrafill/pointcloud/obb.hpp"
#include "terrafill/pointcloud/point_cloud.hpp"

namespace terrafill::cloud {

struct VoxelGrid {
  Point3 origin = Point3::Zero();
  double edge = 0.0;
  std::array<std::int64_t, 3> dims{1, 1, 1};

  /// Axis-aligned cell of p. Points on the upper bound fall in the last cell.
  std::array<std::int64_t, 3> key(const Point3& p) const {
    std::array<std::int64_t, 3> k{};
    for (int d = 0; d < 3; ++d) {
      auto c = static_cast<std::int64_t>(std::floor((p[d] - origin[d]) / edge));
      k[static_cast<std::size_t>(d)] = std::clamp<std::int64_t>(c, 0, dims[static_cast<std::size_t>(d)] - 1);
    }
    return k;
  }
};

/// Voxel edge = ratio x (longest OBB axis length), grid anchored at the
/// cloud's axis-aligned minimum corner.
inline VoxelGrid make_voxel_grid(const PointCloud& cloud, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw InvalidParameter("voxel_downsample: ratio must be in (0, 1]");
  }
  require_nonempty(cloud, "voxel_downsample");
  const OrientedBoundingBox box = compute_obb(cloud);
  VoxelGrid g;
  g.edge = ratio * 2.0 * box.longest_half_extent();
  Point3 lo = cloud.points.front();
  Point3 hi = lo;
  for (const auto& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  g.origin = lo;
  if (g.edge <= 0.0) {
    g.edge = 1.0;  // single distinct point: one voxel
    return g;
  }
  for (int d = 0; d < 3; ++d) {
    g.dims[static_cast<std::size_t>(d)] =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((hi[d] - lo[d]) / g.edge)));
  }
  return g;
}

/// Replaces the points of every occupied voxel by their centroid. Output
/// order follows the first occurrence of each voxel in the input.
inline PointCloud voxel_downsample(const PointCloud& cloud, double ratio) {
  const VoxelGrid grid = make_voxel_grid(cloud, ratio);

  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
      std::uint64_t h = 1469598103934665603ull;
      for (auto v : k) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::size_t, KeyHash> slot;
  std::vector<Point3> sums;
  std::vector<std::size_t> counts;
  for (const auto& p : cloud.points) {
    auto [it, inserted] = slot.try_emplace(grid.key(p), sums.size());
    if (inserted) {
      sums.push_back(Point3::Zero());
      counts.push_back(0);
    }
    sums[it->second] += p;
    ++counts[it->second];
  }
  PointCloud out;
  out.points.reserve(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out.points.push_back(sums[i] / static_cast<double>(counts[i]));
  }
  return out;
}

}  // namespace terrafill::cloud
