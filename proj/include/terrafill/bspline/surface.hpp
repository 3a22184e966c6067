// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "terrafill/bspline/basis.hpp"
#include "terrafill/error.hpp"
#include "terrafill/types.hpp"

namespace terrafill::bspline {

struct Partials {
  Point3 s = Point3::Zero();
  Vector3 su = Vector3::Zero();
  Vector3 sv = Vector3::Zero();
  Vector3 suu = Vector3::Zero();
  Vector3 suv = Vector3::Zero();
  Vector3 svv = Vector3::Zero();
};

/// Tensor-product B-spline surface over [0,1]^2 with clamped knots. The
/// control net is stored row-major with rows along u: control(i, j) is the
/// point weighted by N_i(u) N_j(v).
class BSplineSurface {
 public:
  BSplineSurface() = default;

  BSplineSurface(int degree_u, int degree_v, std::vector<double> knots_u, std::vector<double> knots_v,
                 std::size_t rows, std::size_t cols, std::vector<Point3> control)
      : degree_u_(degree_u),
        degree_v_(degree_v),
        knots_u_(std::move(knots_u)),
        knots_v_(std::move(knots_v)),
        rows_(rows),
        cols_(cols),
        control_(std::move(control)) {
    validate();
  }

  /// Clamped uniform layout with (m+1) x (n+1) control points.
  static BSplineSurface clamped_uniform(std::size_t m, std::size_t n, int degree, std::vector<Point3> control) {
    return BSplineSurface(degree, degree, clamped_uniform_knots(m + 1, degree), clamped_uniform_knots(n + 1, degree),
                          m + 1, n + 1, std::move(control));
  }

  int degree_u() const { return degree_u_; }
  int degree_v() const { return degree_v_; }
  const std::vector<double>& knots_u() const { return knots_u_; }
  const std::vector<double>& knots_v() const { return knots_v_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<Point3>& control() const { return control_; }
  std::vector<Point3>& control() { return control_; }
  const Point3& control(std::size_t i, std::size_t j) const { return control_[i * cols_ + j]; }
  Point3& control(std::size_t i, std::size_t j) { return control_[i * cols_ + j]; }

  Point3 evaluate(const ParamPoint& p) const {
    check_domain(p);
    return partials(p, 0).s;
  }

  /// Position and partial derivatives up to `order` (0, 1 or 2).
  Partials derivatives(const ParamPoint& p, int order) const {
    check_domain(p);
    if (order < 0 || order > 2) throw InvalidParameter("derivative order must be 0, 1 or 2");
    return partials(p, order);
  }

  friend bool operator==(const BSplineSurface&, const BSplineSurface&) = default;

 private:
  void validate() const {
    auto check_knots = [](const std::vector<double>& k, int deg, std::size_t count, const char* dir) {
      if (deg < 1 || deg > kMaxDegree) throw InvalidParameter(std::string("bad degree in ") + dir);
      if (k.size() != count + static_cast<std::size_t>(deg) + 1) {
        throw InvalidParameter(std::string("knot count does not match control count in ") + dir);
      }
      for (std::size_t i = 1; i < k.size(); ++i) {
        if (!(k[i] >= k[i - 1])) throw InvalidParameter(std::string("knots not nondecreasing in ") + dir);
      }
      for (int i = 0; i <= deg; ++i) {
        if (k[static_cast<std::size_t>(i)] != 0.0 || k[k.size() - 1 - static_cast<std::size_t>(i)] != 1.0) {
          throw InvalidParameter(std::string("knots must be clamped to [0,1] in ") + dir);
        }
      }
    };
    check_knots(knots_u_, degree_u_, rows_, "u");
    check_knots(knots_v_, degree_v_, cols_, "v");
    if (control_.size() != rows_ * cols_) throw InvalidParameter("control grid is not rectangular");
  }

  static void check_domain(const ParamPoint& p) {
    if (!in_unit_square(p)) {
      throw InvalidParameter("parameter (" + std::to_string(p.u) + ", " + std::to_string(p.v) +
                             ") outside [0,1]^2");
    }
  }

  Partials partials(const ParamPoint& p, int order) const {
    const auto bu = basis_derivatives(knots_u_, degree_u_, p.u, order);
    const auto bv = basis_derivatives(knots_v_, degree_v_, p.v, order);
    const std::size_t i0 = bu.span - static_cast<std::size_t>(degree_u_);
    const std::size_t j0 = bv.span - static_cast<std::size_t>(degree_v_);
    Partials out;
    for (int a = 0; a <= degree_u_; ++a) {
      // Row combination along v for each derivative order in v.
      Vector3 r0 = Vector3::Zero(), r1 = Vector3::Zero(), r2 = Vector3::Zero();
      const Point3* row = &control_[(i0 + static_cast<std::size_t>(a)) * cols_ + j0];
      for (int b = 0; b <= degree_v_; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        r0 += bv.ders[0][ub] * row[b];
        if (order >= 1) r1 += bv.ders[1][ub] * row[b];
        if (order >= 2) r2 += bv.ders[2][ub] * row[b];
      }
      const auto ua = static_cast<std::size_t>(a);
      out.s += bu.ders[0][ua] * r0;
      if (order >= 1) {
        out.su += bu.ders[1][ua] * r0;
        out.sv += bu.ders[0][ua] * r1;
      }
      if (order >= 2) {
        out.suu += bu.ders[2][ua] * r0;
        out.suv += bu.ders[1][ua] * r1;
        out.svv += bu.ders[0][ua] * r2;
      }
    }
    return out;
  }

  int degree_u_ = 3;
  int degree_v_ = 3;
  std::vector<double> knots_u_;
  std::vector<double> knots_v_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Point3> control_;
};

}  // namespace terrafill::bspline
