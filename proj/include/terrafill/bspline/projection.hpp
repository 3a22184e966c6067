// SPDX-License-Identifier: Apache-2.0
//
// Closest-point projection onto a B-spline surface: seed from a uniform
// parameter grid, then damped two-variable Newton on |p - S(u,v)|^2 with the
// iterate kept inside [0,1]^2.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "terrafill/bspline/surface.hpp"
#include "terrafill/pointcloud/kd_index.hpp"

namespace terrafill::bspline {

struct ProjectionOptions {
  int grid_u = 64;  // seed grid is (grid_u+1) x (grid_v+1) samples
  int grid_v = 64;
  int max_iter = 30;
  double tol = 1e-10;  // parameter-space step
};

struct ProjectionResult {
  ParamPoint param;
  Point3 foot = Point3::Zero();
  double distance = 0.0;
  int iterations_used = 0;
  bool converged = false;
  /// Final parameter lies on the edge of the domain.
  bool on_boundary = false;
};

class SurfaceProjector {
 public:
  explicit SurfaceProjector(BSplineSurface surface, ProjectionOptions opt = {})
      : surface_(std::move(surface)), opt_(opt) {
    if (opt_.grid_u < 1 || opt_.grid_v < 1) throw InvalidParameter("projection seed grid must be at least 1x1");
    if (!(opt_.tol > 0.0)) throw InvalidParameter("projection tolerance must be positive");
    std::vector<cloud::KdIndex3::Coord> samples;
    samples.reserve(static_cast<std::size_t>((opt_.grid_u + 1) * (opt_.grid_v + 1)));
    for (int k = 0; k <= opt_.grid_u; ++k) {
      for (int l = 0; l <= opt_.grid_v; ++l) {
        const ParamPoint t{static_cast<double>(k) / opt_.grid_u, static_cast<double>(l) / opt_.grid_v};
        samples.push_back(cloud::to_coord(surface_.evaluate(t)));
      }
    }
    seeds_ = cloud::KdIndex3(std::move(samples));
  }

  const BSplineSurface& surface() const { return surface_; }
  const ProjectionOptions& options() const { return opt_; }

  /// Parameter of the closest seed-grid sample.
  ParamPoint seed(const Point3& p) const {
    const auto nb = seeds_.nearest(cloud::to_coord(p));
    const auto k = static_cast<int>(nb.index) / (opt_.grid_v + 1);
    const auto l = static_cast<int>(nb.index) % (opt_.grid_v + 1);
    return {static_cast<double>(k) / opt_.grid_u, static_cast<double>(l) / opt_.grid_v};
  }

  ProjectionResult project(const Point3& p) const { return newton(p, seed(p)); }

  /// As project(), but also considers `hint` as a starting point and starts
  /// from whichever of hint and grid seed is closer.
  ProjectionResult project(const Point3& p, const ParamPoint& hint) const {
    const ParamPoint g = seed(p);
    const double dg = (surface_.evaluate(g) - p).squaredNorm();
    const ParamPoint h{std::clamp(hint.u, 0.0, 1.0), std::clamp(hint.v, 0.0, 1.0)};
    const double dh = (surface_.evaluate(h) - p).squaredNorm();
    return newton(p, dh < dg ? h : g);
  }

 private:
  ProjectionResult newton(const Point3& p, ParamPoint x) const {
    Partials d = surface_.derivatives(x, 2);
    Vector3 r = d.s - p;
    double f = r.squaredNorm();

    ProjectionResult res;
    int it = 0;
    for (; it < opt_.max_iter; ++it) {
      const double gu = r.dot(d.su);
      const double gv = r.dot(d.sv);
      const bool fix_u = (x.u <= 0.0 && gu > 0.0) || (x.u >= 1.0 && gu < 0.0);
      const bool fix_v = (x.v <= 0.0 && gv > 0.0) || (x.v >= 1.0 && gv < 0.0);
      if ((fix_u || gu == 0.0) && (fix_v || gv == 0.0)) {
        res.converged = true;
        break;
      }

      const double juu = d.su.dot(d.su), juv = d.su.dot(d.sv), jvv = d.sv.dot(d.sv);
      const double huu = juu + r.dot(d.suu), huv = juv + r.dot(d.suv), hvv = jvv + r.dot(d.svv);
      double du = 0.0, dv = 0.0;
      auto solve2 = [&](double a, double b, double c) {
        const double det = a * c - b * b;
        if (!(a > 0.0) || !(det > 0.0)) return false;
        du = -(c * gu - b * gv) / det;
        dv = -(a * gv - b * gu) / det;
        return true;
      };
      if (!fix_u && !fix_v) {
        if (!solve2(huu, huv, hvv) && !solve2(juu, juv, jvv)) {
          const double scale = juu + jvv > 0.0 ? 1.0 / (juu + jvv) : 1.0;
          du = -gu * scale;
          dv = -gv * scale;
        }
      } else if (!fix_u) {
        du = -gu / (huu > 0.0 ? huu : (juu > 0.0 ? juu : 1.0));
      } else {
        dv = -gv / (hvv > 0.0 ? hvv : (jvv > 0.0 ? jvv : 1.0));
      }

      // Halve the step until the squared distance does not increase.
      double t = 1.0;
      bool accepted = false;
      ParamPoint xn = x;
      Partials dn;
      double fn = f;
      for (int h = 0; h <= 20; ++h, t *= 0.5) {
        xn = {std::clamp(x.u + t * du, 0.0, 1.0), std::clamp(x.v + t * dv, 0.0, 1.0)};
        dn = surface_.derivatives(xn, 2);
        fn = (dn.s - p).squaredNorm();
        if (fn <= f) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        res.converged = std::hypot(du, dv) < std::sqrt(opt_.tol);
        break;
      }
      const double step = std::hypot(xn.u - x.u, xn.v - x.v);
      x = xn;
      d = dn;
      r = d.s - p;
      f = fn;
      if (step < opt_.tol) {
        res.converged = true;
        ++it;
        break;
      }
    }
    res.param = x;
    res.foot = d.s;
    res.distance = r.norm();
    res.iterations_used = it;
    res.on_boundary = x.u <= 0.0 || x.u >= 1.0 || x.v <= 0.0 || x.v >= 1.0;
    return res;
  }

  BSplineSurface surface_;
  ProjectionOptions opt_;
  cloud::KdIndex3 seeds_;
};

/// One-shot projection with a (grid_u x grid_v) seed grid.
inline ProjectionResult project_point(const BSplineSurface& s, const Point3& p, int grid_u = 64, int grid_v = 64,
                                      int max_iter = 30, double tol = 1e-10) {
  return SurfaceProjector(s, {grid_u, grid_v, max_iter, tol}).project(p);
}

}  // namespace terrafill::bspline
