// SPDX-License-Identifier: Apache-2.0
//
// PCA normal estimation over k-nearest-neighbour patches and sign propagation
// along a minimum spanning tree of the k-NN graph.

#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <queue>
#include <tuple>
#include <vector>

#include "terrafill/pointcloud/kd_index.hpp"
#include "terrafill/pointcloud/obb.hpp"
#include "terrafill/pointcloud/point_cloud.hpp"

namespace terrafill::cloud {

inline constexpr std::size_t kDefaultNormalK = 16;

struct NormalEstimate {
  PointCloud cloud;
  /// Points whose neighbourhood covariance had rank <= 1; their normal is an
  /// arbitrary perpendicular of the dominant direction.
  std::vector<std::size_t> degenerate;
};

namespace detail {

inline Vector3 any_perpendicular(const Vector3& d) {
  const Vector3 helper = std::abs(d.x()) < 0.9 ? Vector3::UnitX() : Vector3::UnitY();
  return d.cross(helper).normalized();
}

}  // namespace detail

/// Unit normal per point from the covariance of the point and its k nearest
/// neighbours (eigenvector of the smallest eigenvalue). Signs are arbitrary.
inline NormalEstimate estimate_normals(const PointCloud& cloud, std::size_t k = kDefaultNormalK) {
  if (k < 3) throw InvalidParameter("estimate_normals: k must be at least 3");
  if (cloud.size() < k + 1) {
    throw InvalidParameter("estimate_normals: need at least k+1 points");
  }
  const KdIndex3 index = build_index(cloud);

  NormalEstimate out;
  out.cloud.points = cloud.points;
  std::vector<Vector3> normals(cloud.size());
  std::vector<Point3> patch;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nbrs = index.knn(to_coord(cloud.points[i]), k + 1);
    patch.clear();
    for (const auto& nb : nbrs) patch.push_back(cloud.points[nb.index]);
    const auto [mean, cov] = covariance(patch);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    const Eigen::Vector3d ev = es.eigenvalues();
    if (ev[2] <= 0.0 || ev[1] <= 1e-12 * ev[2]) {
      out.degenerate.push_back(i);
      normals[i] = ev[2] <= 0.0 ? Vector3::UnitZ()
                                : detail::any_perpendicular(es.eigenvectors().col(2).normalized());
    } else {
      normals[i] = es.eigenvectors().col(0).normalized();
    }
  }
  out.cloud.normals = std::move(normals);
  return out;
}

/// Symmetrised k-NN adjacency (self excluded), each list sorted by index.
inline std::vector<std::vector<std::uint32_t>> knn_graph(const PointCloud& cloud, std::size_t k) {
  const KdIndex3 index = build_index(cloud);
  std::vector<std::vector<std::uint32_t>> adj(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (const auto& nb : index.knn(to_coord(cloud.points[i]), k + 1)) {
      if (nb.index == i) continue;
      adj[i].push_back(static_cast<std::uint32_t>(nb.index));
      adj[nb.index].push_back(static_cast<std::uint32_t>(i));
    }
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

struct OrientationResult {
  PointCloud cloud;
  std::size_t flips = 0;
  std::size_t components = 0;
  std::vector<std::uint32_t> component;  // per-point component label
};

/// Makes normal signs consistent. Each connected component of the k-NN graph
/// is seeded at its point of maximal coordinate along the shortest OBB axis
/// (normal forced positive along that axis) and signs are propagated along
/// the minimum spanning tree with edge weight 1 - |n_a . n_b|.
inline OrientationResult orient_normals_report(const PointCloud& cloud, std::size_t k = kDefaultNormalK) {
  if (!cloud.normals) throw InvalidParameter("orient_normals: cloud has no normals");
  OrientationResult res;
  res.cloud = cloud;
  const std::size_t n = cloud.size();
  if (n == 0) return res;
  auto& normals = *res.cloud.normals;
  const std::vector<Vector3> original = normals;

  const Vector3 up = compute_obb(cloud).axes[2];
  const auto adj = knn_graph(cloud, std::min(k, n - 1));

  // Component labelling so every component gets its own seed.
  std::vector<std::int64_t> comp(n, -1);
  std::vector<std::vector<std::uint32_t>> members;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    const auto id = static_cast<std::int64_t>(members.size());
    members.emplace_back();
    std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(s)};
    comp[s] = id;
    while (!stack.empty()) {
      const std::uint32_t a = stack.back();
      stack.pop_back();
      members.back().push_back(a);
      for (std::uint32_t b : adj[a]) {
        if (comp[b] < 0) {
          comp[b] = id;
          stack.push_back(b);
        }
      }
    }
  }
  res.components = members.size();
  res.component.assign(comp.begin(), comp.end());

  std::vector<char> done(n, 0);
  using Item = std::tuple<double, std::uint32_t, std::uint32_t>;  // weight, node, parent
  for (const auto& group : members) {
    std::uint32_t seed = group.front();
    double best = cloud.points[seed].dot(up);
    for (std::uint32_t i : group) {
      const double h = cloud.points[i].dot(up);
      if (h > best || (h == best && i < seed)) {
        best = h;
        seed = i;
      }
    }
    if (normals[seed].dot(up) < 0.0) normals[seed] = -normals[seed];

    // Prim's algorithm; heap order (weight, node) keeps the tree deterministic.
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, seed, seed);
    while (!heap.empty()) {
      const auto [w, node, parent] = heap.top();
      heap.pop();
      if (done[node]) continue;
      done[node] = 1;
      if (node != parent && normals[node].dot(normals[parent]) < 0.0) normals[node] = -normals[node];
      for (std::uint32_t nb : adj[node]) {
        if (done[nb]) continue;
        const double weight = 1.0 - std::abs(normals[node].dot(normals[nb]));
        heap.emplace(weight, nb, node);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (normals[i].dot(original[i]) < 0.0) ++res.flips;
  }
  return res;
}

inline PointCloud orient_normals(const PointCloud& cloud, std::size_t k = kDefaultNormalK) {
  return orient_normals_report(cloud, k).cloud;
}

}  // namespace terrafill::cloud
