// SPDX-License-Identifier: Apache-2.0
//
// Balanced kd-tree over a fixed point snapshot. Query results are exact and
// ordered by (squared distance, point index), so they match a brute-force
// scan element for element.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "terrafill/pointcloud/point_cloud.hpp"
#include "terrafill/types.hpp"

namespace terrafill::cloud {

struct Neighbor {
  std::size_t index;
  double distance2;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.index < b.index);
}

template <int Dim>
class KdIndex {
 public:
  using Coord = std::array<double, Dim>;

  KdIndex() = default;

  explicit KdIndex(std::vector<Coord> points) : points_(std::move(points)) { build(); }

  std::size_t size() const { return points_.size(); }
  const Coord& point(std::size_t i) const { return points_[i]; }

  static double distance2(const Coord& a, const Coord& b) {
    double s = 0.0;
    for (int d = 0; d < Dim; ++d) {
      const double t = a[d] - b[d];
      s += t * t;
    }
    return s;
  }

  /// The min(k, N) nearest points, ascending by distance, ties by index.
  std::vector<Neighbor> knn(const Coord& q, std::size_t k) const {
    std::vector<Neighbor> best;
    k = std::min(k, points_.size());
    if (k == 0) return best;
    best.reserve(k + 1);
    search(0, q, k, best);
    return best;
  }

  Neighbor nearest(const Coord& q) const { return knn(q, 1).front(); }

 private:
  static constexpr std::size_t kLeafSize = 12;

  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  void build() {
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
    nodes_.clear();
    if (points_.empty()) return;
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build_node(0, static_cast<std::uint32_t>(points_.size()));
  }

  std::int32_t build_node(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Coord lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (std::uint32_t i = begin; i < end; ++i) {
      const Coord& p = points_[order_[i]];
      for (int d = 0; d < Dim; ++d) {
        lo[d] = std::min(lo[d], p[d]);
        hi[d] = std::max(hi[d], p[d]);
      }
    }
    int axis = 0;
    for (int d = 1; d < Dim; ++d) {
      if (hi[d] - lo[d] > hi[axis] - lo[axis]) axis = d;
    }
    if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident

    const std::uint32_t mid = begin + (end - begin) / 2;
    auto less = [&](std::uint32_t a, std::uint32_t b) {
      const double ca = points_[a][axis];
      const double cb = points_[b][axis];
      return ca < cb || (ca == cb && a < b);
    };
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, less);

    const double split = points_[order_[mid]][axis];
    const std::int32_t l = build_node(begin, mid);
    const std::int32_t r = build_node(mid, end);
    Node& n = nodes_[static_cast<std::size_t>(id)];
    n.axis = axis;
    n.split = split;
    n.left = l;
    n.right = r;
    return id;
  }

  static void offer(std::vector<Neighbor>& best, std::size_t k, const Neighbor& cand) {
    if (best.size() == k && !closer(cand, best.back())) return;
    auto pos = std::upper_bound(best.begin(), best.end(), cand, closer);
    best.insert(pos, cand);
    if (best.size() > k) best.pop_back();
  }

  void search(std::int32_t id, const Coord& q, std::size_t k, std::vector<Neighbor>& best) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = order_[i];
        offer(best, k, Neighbor{idx, distance2(q, points_[idx])});
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::int32_t near_child = diff <= 0.0 ? n.left : n.right;
    const std::int32_t far_child = diff <= 0.0 ? n.right : n.left;
    search(near_child, q, k, best);
    // Equal-distance candidates may still win on index, so prune strictly.
    if (best.size() < k || diff * diff <= best.back().distance2) {
      search(far_child, q, k, best);
    }
  }

  std::vector<Coord> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

using KdIndex3 = KdIndex<3>;
using KdIndex2 = KdIndex<2>;

inline KdIndex3::Coord to_coord(const Point3& p) { return {p.x(), p.y(), p.z()}; }

inline KdIndex3 build_index(const std::vector<Point3>& pts) {
  std::vector<KdIndex3::Coord> coords;
  coords.reserve(pts.size());
  for (const auto& p : pts) coords.push_back(to_coord(p));
  return KdIndex3(std::move(coords));
}

inline KdIndex3 build_index(const PointCloud& c) { return build_index(c.points); }

inline KdIndex2 build_index(const std::vector<ParamPoint>& params) {
  std::vector<KdIndex2::Coord> coords;
  coords.reserve(params.size());
  for (const auto& p : params) coords.push_back({p.u, p.v});
  return KdIndex2(std::move(coords));
}

}  // namespace terrafill::cloud
