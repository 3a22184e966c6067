// SPDX-License-Identifier: Apache-2.0
//
// Least-squares B-spline surface fitting by alternating a linear control-net
// solve (fit step) with closest-point reparameterization (correct step).

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "terrafill/bspline/footprint.hpp"
#include "terrafill/bspline/projection.hpp"
#include "terrafill/bspline/surface.hpp"
#include "terrafill/pointcloud/point_cloud.hpp"

namespace terrafill::bspline {

struct FitConfig {
  std::size_t m = 19;  // control rows - 1
  std::size_t n = 19;  // control columns - 1
  int degree = 3;
  int iterations = 10;
  /// Weight of the second-difference penalty on the control net. Negative
  /// selects default_regularization().
  double regularization_weight = -1.0;
  ProjectionOptions projection;

  void validate() const {
    if (degree < 1 || degree > kMaxDegree) throw InvalidParameter("fit: degree must be in [1, 7]");
    if (m < static_cast<std::size_t>(degree) || n < static_cast<std::size_t>(degree)) {
      throw InvalidParameter("fit: m and n must be at least the degree");
    }
    if (iterations < 1) throw InvalidParameter("fit: iterations must be at least 1");
  }
};

/// Default weight: the mean number of points per control point, so the
/// smoothness term keeps the same relative weight at any cloud size or scale.
inline double default_regularization(std::size_t point_count, const FitConfig& cfg) {
  return static_cast<double>(point_count) / static_cast<double>((cfg.m + 1) * (cfg.n + 1));
}

inline double effective_regularization(std::size_t point_count, const FitConfig& cfg) {
  return cfg.regularization_weight >= 0.0 ? cfg.regularization_weight : default_regularization(point_count, cfg);
}

/// Control net on a regular grid over the footprint, each control point lifted
/// to the mean height of the points in its cell (global mean for empty cells).
inline BSplineSurface initialize_surface(const cloud::PointCloud& cloud, const FitConfig& cfg,
                                         const FootprintFrame& frame) {
  cfg.validate();
  cloud::require_nonempty(cloud, "initialize_surface");
  const std::size_t rows = cfg.m + 1, cols = cfg.n + 1;
  std::vector<double> sum(rows * cols, 0.0);
  std::vector<std::size_t> count(rows * cols, 0);
  double total = 0.0;
  auto cell = [](double coord, double lo, double extent, std::size_t cells) -> std::size_t {
    if (!(extent > 0.0)) return 0;
    const double s = (coord - lo) / extent;
    const auto c = static_cast<std::ptrdiff_t>(std::floor(s * static_cast<double>(cells)));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(cells) - 1));
  };
  for (const auto& p : cloud.points) {
    const double h = frame.height(p);
    const std::size_t i = cell(frame.coord_u(p), frame.min_u, frame.extent_u, rows);
    const std::size_t j = cell(frame.coord_v(p), frame.min_v, frame.extent_v, cols);
    sum[i * cols + j] += h;
    ++count[i * cols + j];
    total += h;
  }
  const double mean = total / static_cast<double>(cloud.size());
  std::vector<Point3> control(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t k = i * cols + j;
      const double h = count[k] ? sum[k] / static_cast<double>(count[k]) : mean;
      control[k] = frame.to_world(static_cast<double>(i) / static_cast<double>(cfg.m),
                                  static_cast<double>(j) / static_cast<double>(cfg.n), h);
    }
  }
  return BSplineSurface::clamped_uniform(cfg.m, cfg.n, cfg.degree, std::move(control));
}

inline BSplineSurface initialize_surface(const cloud::PointCloud& cloud, const FitConfig& cfg) {
  return initialize_surface(cloud, cfg, compute_footprint(cloud));
}

/// Greville abscissae: the parameter each control point is associated with.
inline std::vector<double> greville_abscissae(const std::vector<double>& knots, int degree) {
  const std::size_t count = basis_count(knots, degree);
  std::vector<double> g(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    double s = 0.0;
    for (int k = 1; k <= degree; ++k) s += knots[i + static_cast<std::size_t>(k)];
    g[i] = s / degree;
  }
  return g;
}

/// Weights (a, b, c) of the second difference a B[i-1] + b B[i] + c B[i+1]
/// for every interior index i. Differences are divided by the Greville
/// spacing and rescaled by the interior spacing, so they reduce to
/// (1, -2, 1) on uniform stretches and vanish for any affine net.
inline std::vector<std::array<double, 3>> second_difference_weights(const std::vector<double>& knots, int degree) {
  const auto g = greville_abscissae(knots, degree);
  std::vector<std::array<double, 3>> w(g.size(), {0.0, 0.0, 0.0});
  const std::size_t spans = g.size() - static_cast<std::size_t>(degree);
  const double ref = 1.0 / static_cast<double>(spans);
  for (std::size_t i = 1; i + 1 < g.size(); ++i) {
    const double left = g[i] - g[i - 1], right = g[i + 1] - g[i];
    const double a = left > 0.0 ? ref / left : 1.0;
    const double c = right > 0.0 ? ref / right : 1.0;
    w[i] = {a, -(a + c), c};
  }
  return w;
}

/// Sum of squared second differences of the control net along both grid
/// directions (see second_difference_weights).
inline double smoothness_penalty(const BSplineSurface& s) {
  const auto wu = second_difference_weights(s.knots_u(), s.degree_u());
  const auto wv = second_difference_weights(s.knots_v(), s.degree_v());
  double pen = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = 0; j < s.cols(); ++j) {
      if (i >= 1 && i + 1 < s.rows()) {
        const auto& w = wu[i];
        pen += (w[0] * s.control(i - 1, j) + w[1] * s.control(i, j) + w[2] * s.control(i + 1, j)).squaredNorm();
      }
      if (j >= 1 && j + 1 < s.cols()) {
        const auto& w = wv[j];
        pen += (w[0] * s.control(i, j - 1) + w[1] * s.control(i, j) + w[2] * s.control(i, j + 1)).squaredNorm();
      }
    }
  }
  return pen;
}

inline double data_term(const cloud::PointCloud& cloud, const std::vector<ParamPoint>& params,
                        const BSplineSurface& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) sum += (s.evaluate(params[i]) - cloud.points[i]).squaredNorm();
  return sum;
}

struct FitStepResult {
  BSplineSurface surface;
  double data_term = 0.0;  // sum of squared residuals at the given params
  double penalty = 0.0;    // unweighted smoothness penalty
  double lambda = 0.0;
  double objective() const { return data_term + lambda * penalty; }
};

/// Solves for the control net minimizing
///   sum_i |S(u_i, v_i) - p_i|^2 + lambda * smoothness_penalty
/// with the knots and degrees of `layout` held fixed.
inline FitStepResult fit_step(const cloud::PointCloud& cloud, const std::vector<ParamPoint>& params,
                              const FitConfig& cfg, const BSplineSurface& layout) {
  if (params.size() != cloud.size()) throw InvalidParameter("fit_step: params and cloud differ in length");
  cloud::require_nonempty(cloud, "fit_step");
  const double lambda = effective_regularization(cloud.size(), cfg);
  const std::size_t rows = layout.rows(), cols = layout.cols();
  const auto K = static_cast<Eigen::Index>(rows * cols);
  const int pu = layout.degree_u(), pv = layout.degree_v();

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> trip;
  trip.reserve(cloud.size() * static_cast<std::size_t>((pu + 1) * (pv + 1)));
  Eigen::MatrixXd rhs_points(static_cast<Eigen::Index>(cloud.size()), 3);
  for (std::size_t r = 0; r < cloud.size(); ++r) {
    if (!in_unit_square(params[r])) throw InvalidParameter("fit_step: parameter outside [0,1]^2");
    const auto bu = basis_derivatives(layout.knots_u(), pu, params[r].u, 0);
    const auto bv = basis_derivatives(layout.knots_v(), pv, params[r].v, 0);
    const std::size_t i0 = bu.span - static_cast<std::size_t>(pu);
    const std::size_t j0 = bv.span - static_cast<std::size_t>(pv);
    for (int a = 0; a <= pu; ++a) {
      for (int b = 0; b <= pv; ++b) {
        const double w = bu.ders[0][static_cast<std::size_t>(a)] * bv.ders[0][static_cast<std::size_t>(b)];
        if (w == 0.0) continue;
        const std::size_t col = (i0 + static_cast<std::size_t>(a)) * cols + j0 + static_cast<std::size_t>(b);
        trip.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col), w);
      }
    }
    rhs_points.row(static_cast<Eigen::Index>(r)) = cloud.points[r].transpose();
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(cloud.size()), K);
  A.setFromTriplets(trip.begin(), trip.end());

  Eigen::SparseMatrix<double> normal = (A.transpose() * A).pruned();
  if (lambda > 0.0) {
    std::vector<Triplet> rt;
    Eigen::Index row = 0;
    auto idx = [&](std::size_t i, std::size_t j) { return static_cast<Eigen::Index>(i * cols + j); };
    const auto wu = second_difference_weights(layout.knots_u(), pu);
    const auto wv = second_difference_weights(layout.knots_v(), pv);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        if (i >= 1 && i + 1 < rows) {
          rt.emplace_back(row, idx(i - 1, j), wu[i][0]);
          rt.emplace_back(row, idx(i, j), wu[i][1]);
          rt.emplace_back(row, idx(i + 1, j), wu[i][2]);
          ++row;
        }
        if (j >= 1 && j + 1 < cols) {
          rt.emplace_back(row, idx(i, j - 1), wv[j][0]);
          rt.emplace_back(row, idx(i, j), wv[j][1]);
          rt.emplace_back(row, idx(i, j + 1), wv[j][2]);
          ++row;
        }
      }
    }
    Eigen::SparseMatrix<double> R(row, K);
    R.setFromTriplets(rt.begin(), rt.end());
    normal += lambda * (R.transpose() * R);
  } else {
    for (Eigen::Index k = 0; k < K; ++k) {
      if (normal.coeff(k, k) == 0.0) {
        throw SingularSystem("fit_step: control point " + std::to_string(k) +
                             " has no data support and the regularization weight is zero");
      }
    }
  }

  const Eigen::MatrixXd rhs = A.transpose() * rhs_points;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(normal);
  if (solver.info() != Eigen::Success) throw SingularSystem("fit_step: normal equations are singular");
  Eigen::MatrixXd x = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !x.allFinite()) throw SingularSystem("fit_step: solve failed");
  // One round of iterative refinement against the assembled system.
  const Eigen::MatrixXd resid = rhs - normal * x;
  x += solver.solve(resid);

  std::vector<Point3> control(rows * cols);
  for (Eigen::Index k = 0; k < K; ++k) control[static_cast<std::size_t>(k)] = x.row(k).transpose();

  FitStepResult out{BSplineSurface(pu, pv, layout.knots_u(), layout.knots_v(), rows, cols, std::move(control))};
  out.lambda = lambda;
  out.penalty = smoothness_penalty(out.surface);
  out.data_term = data_term(cloud, params, out.surface);
  return out;
}

struct FitResult {
  BSplineSurface surface;
  FootprintFrame frame;
  std::vector<ParamPoint> params;     // corrected after the final fit step
  std::vector<double> distances;      // point-to-surface distances at params
  std::vector<double> objectives;     // fit-step objective per iteration
  double initial_objective = 0.0;     // initialized net at uniform params
  double lambda = 0.0;

  double max_distance() const {
    return distances.empty() ? 0.0 : *std::max_element(distances.begin(), distances.end());
  }
};

/// Fits over the parameter domain defined by `frame`; points outside the
/// frame's rectangle are clamped to its edge.
inline FitResult fit_surface(const cloud::PointCloud& cloud, const FitConfig& cfg, const FootprintFrame& frame) {
  cfg.validate();
  cloud::require_nonempty(cloud, "fit_surface");
  FitResult res;
  res.frame = frame;
  const BSplineSurface init = initialize_surface(cloud, cfg, res.frame);
  res.params = parameterize_uniform(cloud, res.frame);
  res.lambda = effective_regularization(cloud.size(), cfg);
  res.initial_objective = data_term(cloud, res.params, init) + res.lambda * smoothness_penalty(init);

  BSplineSurface current = init;
  res.distances.assign(cloud.size(), 0.0);
  for (int it = 0; it < cfg.iterations; ++it) {
    FitStepResult step = fit_step(cloud, res.params, cfg, current);
    res.objectives.push_back(step.objective());
    current = std::move(step.surface);
    const SurfaceProjector projector(current, cfg.projection);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const ProjectionResult pr = projector.project(cloud.points[i], res.params[i]);
      res.params[i] = pr.param;
      res.distances[i] = pr.distance;
    }
  }
  res.surface = std::move(current);
  return res;
}

inline FitResult fit_surface(const cloud::PointCloud& cloud, const FitConfig& cfg) {
  cloud::require_nonempty(cloud, "fit_surface");
  return fit_surface(cloud, cfg, compute_footprint(cloud));
}

}  // namespace terrafill::bspline
