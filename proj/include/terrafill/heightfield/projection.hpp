// SPDX-License-Identifier: Apache-2.0
//
// Signed projection of a cloud onto a fitted surface.

#pragma once

#include <cmath>
#include <vector>

#include "terrafill/bspline/projection.hpp"
#include "terrafill/pointcloud/normals.hpp"

namespace terrafill::heightfield {

struct SignedProjection {
  ParamPoint param;
  Point3 foot = Point3::Zero();
  double signed_distance = 0.0;
  std::size_t source_index = 0;
  bool valid = true;
};

struct ProjectionConfig {
  std::size_t normal_k = cloud::kDefaultNormalK;
  double epsilon = 1e-3;  // validity threshold on 1 - |n . R|
  /// A point whose foot is clamped to the domain edge lies beyond the
  /// surface. It is kept when its offset along the surface, measured from the
  /// foot, is at most this fraction of the control-net diagonal; its height
  /// is then its offset along the foot normal.
  double boundary_reach = 0.05;
  /// Distances below this fraction of the control-net diagonal are roundoff:
  /// the point is on the surface and gets distance +0.
  double on_surface_tol = 1e-12;
  bspline::ProjectionOptions newton;
};

struct ProjectionReport {
  std::vector<SignedProjection> projections;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  std::size_t boundary = 0;  // valid projections whose foot is on the domain edge
  std::size_t unconverged = 0;
};

/// Projects every point, estimates foot-point normals by PCA and orients them
/// consistently, then signs each distance by the side of the foot normal the
/// point lies on. Each connected group of foot normals is flipped, if needed,
/// to agree with the analytic surface normal so that positive heights point
/// along S_u x S_v.
inline ProjectionReport project_cloud(const cloud::PointCloud& input, const bspline::BSplineSurface& s,
                                      const ProjectionConfig& cfg = {}) {
  cloud::require_nonempty(input, "project_cloud");
  if (!(cfg.epsilon >= 0.0)) throw InvalidParameter("project_cloud: epsilon must be nonnegative");
  if (!(cfg.boundary_reach >= 0.0)) throw InvalidParameter("project_cloud: boundary reach must be nonnegative");
  const bspline::SurfaceProjector projector(s, cfg.newton);

  ProjectionReport rep;
  rep.projections.resize(input.size());
  std::vector<char> on_edge(input.size(), 0);
  cloud::PointCloud feet;
  feet.points.resize(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const auto pr = projector.project(input.points[i]);
    auto& sp = rep.projections[i];
    sp.param = pr.param;
    sp.foot = pr.foot;
    sp.signed_distance = pr.distance;
    sp.source_index = i;
    on_edge[i] = pr.on_boundary ? 1 : 0;
    rep.unconverged += pr.converged ? 0 : 1;
    feet.points[i] = pr.foot;
  }

  std::vector<Vector3> normals;
  if (feet.size() > cfg.normal_k) {
    const auto est = cloud::estimate_normals(feet, cfg.normal_k);
    auto oriented = cloud::orient_normals_report(est.cloud, cfg.normal_k);
    normals = std::move(*oriented.cloud.normals);
    std::vector<double> agreement(oriented.components, 0.0);
    for (std::size_t i = 0; i < normals.size(); ++i) {
      const auto d = s.derivatives(rep.projections[i].param, 1);
      const Vector3 n = d.su.cross(d.sv);
      agreement[oriented.component[i]] += normals[i].dot(n.norm() > 0.0 ? Vector3(n.normalized()) : Vector3::Zero());
    }
    for (std::size_t i = 0; i < normals.size(); ++i) {
      if (agreement[oriented.component[i]] < 0.0) normals[i] = -normals[i];
    }
  } else {
    // Too few feet for a neighborhood fit: fall back to the analytic normal.
    normals.resize(feet.size());
    for (std::size_t i = 0; i < feet.size(); ++i) {
      const auto d = s.derivatives(rep.projections[i].param, 1);
      const Vector3 n = d.su.cross(d.sv);
      normals[i] = n.norm() > 0.0 ? Vector3(n.normalized()) : Vector3::UnitZ();
    }
  }

  Point3 lo = s.control().front(), hi = lo;
  for (const auto& c : s.control()) {
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  const double zero_dist = cfg.on_surface_tol * (hi - lo).norm();
  const double reach = cfg.boundary_reach * (hi - lo).norm();
  for (std::size_t i = 0; i < input.size(); ++i) {
    auto& sp = rep.projections[i];
    const double dist = sp.signed_distance;
    if (dist <= zero_dist) {
      sp.signed_distance = 0.0;
    } else {
      const Vector3 R = (input.points[i] - sp.foot) / dist;
      const double c = normals[i].dot(R);
      if (on_edge[i]) {
        const double along = dist * std::sqrt(std::max(0.0, 1.0 - c * c));
        sp.valid = along <= reach;
        sp.signed_distance = dist * c;
      } else {
        sp.valid = 1.0 - std::abs(c) < cfg.epsilon;
        sp.signed_distance = c < 0.0 ? -dist : dist;
      }
    }
    if (sp.valid) {
      ++rep.valid;
      rep.boundary += on_edge[i] ? 1 : 0;
    } else {
      ++rep.invalid;
    }
  }
  if (rep.valid == 0) throw EmptyProjection("project_cloud: every projection failed the validity test");
  return rep;
}

}  // namespace terrafill::heightfield
