// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used as test oracles. Nothing here
// calls into the library code it is meant to check.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "terrafill/pointcloud/point_cloud.hpp"

namespace oracle {

using terrafill::Point3;
using terrafill::cloud::PointCloud;

/// Textbook Cox-de Boor recursion, half-open spans, patched so the last
/// basis function is 1 at the right end of the domain.
inline double cox_de_boor(const std::vector<double>& t, int p, std::size_t i, double x) {
  const std::size_t nbasis = t.size() - static_cast<std::size_t>(p) - 1;
  if (x == t.back()) return i == nbasis - 1 ? 1.0 : 0.0;
  if (p == 0) return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
  double left = 0.0, right = 0.0;
  const double d1 = t[i + static_cast<std::size_t>(p)] - t[i];
  const double d2 = t[i + static_cast<std::size_t>(p) + 1] - t[i + 1];
  if (d1 > 0.0) left = (x - t[i]) / d1 * cox_de_boor(t, p - 1, i, x);
  if (d2 > 0.0) right = (t[i + static_cast<std::size_t>(p) + 1] - x) / d2 * cox_de_boor(t, p - 1, i + 1, x);
  return left + right;
}

/// de Boor's algorithm for a curve with scalar coefficients.
inline double de_boor_curve(const std::vector<double>& t, int p, const std::vector<double>& c, double x) {
  std::size_t k = static_cast<std::size_t>(p);
  while (k + 1 < c.size() && x >= t[k + 1]) ++k;
  std::vector<double> d(static_cast<std::size_t>(p) + 1);
  for (int j = 0; j <= p; ++j) d[static_cast<std::size_t>(j)] = c[j + k - static_cast<std::size_t>(p)];
  for (int r = 1; r <= p; ++r) {
    for (int j = p; j >= r; --j) {
      const std::size_t idx = j + k - static_cast<std::size_t>(p);
      const double a = (x - t[idx]) / (t[idx + static_cast<std::size_t>(p) + 1 - static_cast<std::size_t>(r)] - t[idx]);
      d[static_cast<std::size_t>(j)] = (1.0 - a) * d[static_cast<std::size_t>(j) - 1] + a * d[static_cast<std::size_t>(j)];
    }
  }
  return d[static_cast<std::size_t>(p)];
}

/// Direct double sum of the tensor-product formula.
inline Point3 surface_sum(const std::vector<double>& tu, const std::vector<double>& tv, int p, int q, std::size_t rows,
                          std::size_t cols, const std::vector<Point3>& ctrl, double u, double v) {
  Point3 s = Point3::Zero();
  for (std::size_t i = 0; i < rows; ++i) {
    const double bu = cox_de_boor(tu, p, i, u);
    if (bu == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) s += bu * cox_de_boor(tv, q, j, v) * ctrl[i * cols + j];
  }
  return s;
}

/// Brute-force k nearest neighbours, ascending by distance then index.
inline std::vector<std::pair<double, std::size_t>> knn(const std::vector<Point3>& pts, const Point3& q,
                                                       std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  all.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) all.emplace_back((pts[i] - q).squaredNorm(), i);
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  return all;
}

inline double nearest_distance(const std::vector<Point3>& pts, const Point3& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::min(best, (p - q).norm());
  return best;
}

inline double one_sided_hausdorff(const PointCloud& a, const PointCloud& b) {
  double worst = 0.0;
  for (const auto& p : a.points) worst = std::max(worst, nearest_distance(b.points, p));
  return worst;
}

inline PointCloud random_cloud(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> U(0.0, scale);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(U(rng), U(rng), U(rng));
  return c;
}

/// Fresh, empty scratch directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("terrafill_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
