// SPDX-License-Identifier: Apache-2.0
//
// Discrete Poisson fill: hole values whose 5-point Laplacian matches the
// divergence of a guidance gradient field, with the surrounding known cells
// as Dirichlet data and reflecting (Neumann) image borders.

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <vector>

#include "terrafill/heightfield/height_field.hpp"
#include "terrafill/inpaint/config.hpp"
#include "terrafill/inpaint/gradients.hpp"

namespace terrafill::inpaint {

struct PoissonSystem {
  std::vector<std::size_t> cells;        // unknown index -> cell index
  std::vector<std::int64_t> unknown;     // cell index -> unknown index or -1
  Eigen::SparseMatrix<double> A;         // SPD: degree on the diagonal, -1 per hole neighbor
  Eigen::VectorXd b;
};

/// Guidance gradient across the edge from cell i toward its neighbor.
namespace detail {
struct Edge {
  std::size_t nb;
  double g;
};

inline std::size_t in_image_edges(const GradientField& g, std::size_t x, std::size_t y, Edge (&out)[4]) {
  const std::size_t r = g.r, i = g.index(x, y);
  std::size_t n = 0;
  if (x + 1 < r) out[n++] = {i + 1, g.gx[i]};
  if (x >= 1) out[n++] = {i - 1, -g.gx[i - 1]};
  if (y + 1 < r) out[n++] = {i + r, g.gy[i]};
  if (y >= 1) out[n++] = {i - r, -g.gy[i - r]};
  return n;
}
}  // namespace detail

/// Per hole cell c:  sum_nb (I_nb - I_c) = sum_nb g(c -> nb)  over in-image
/// neighbors, i.e. the 5-point Laplacian equals the backward-difference
/// divergence in the interior.
inline PoissonSystem assemble_poisson(const heightfield::HeightField& h, const GradientField& g) {
  if (g.r != h.r) throw InvalidParameter("solve_poisson: gradient and height field sizes differ");
  PoissonSystem sys;
  const std::size_t r = h.r;
  sys.unknown.assign(r * r, -1);
  for (std::size_t i = 0; i < r * r; ++i) {
    if (h.is_hole(i)) {
      sys.unknown[i] = static_cast<std::int64_t>(sys.cells.size());
      sys.cells.push_back(i);
    }
  }
  const auto n = static_cast<Eigen::Index>(sys.cells.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(sys.cells.size() * 5);
  sys.b.setZero(n);
  detail::Edge edges[4];
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::size_t i = sys.cells[static_cast<std::size_t>(k)];
    const std::size_t cnt = detail::in_image_edges(g, i % r, i / r, edges);
    double rhs = 0.0;
    for (std::size_t e = 0; e < cnt; ++e) {
      rhs -= edges[e].g;
      const std::int64_t u = sys.unknown[edges[e].nb];
      if (u >= 0) {
        trip.emplace_back(k, static_cast<Eigen::Index>(u), -1.0);
      } else {
        rhs += h.values[edges[e].nb];
      }
    }
    trip.emplace_back(k, k, static_cast<double>(cnt));
    sys.b[k] = rhs;
  }
  sys.A.resize(n, n);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

struct PoissonResult {
  heightfield::HeightField field;
  double residual = 0.0;  // |b - A x|
  double rhs_norm = 0.0;  // |b|
  int refinements = 0;
};

/// True when every hole cell is connected through hole cells to a hole cell
/// with a known 4-neighbor, i.e. every component has Dirichlet data.
inline bool holes_anchored(const heightfield::HeightField& h) {
  const std::size_t r = h.r;
  std::vector<char> seen(r * r, 0);
  std::vector<std::size_t> stack;
  auto neighbors = [r](std::size_t i, std::size_t (&out)[4]) {
    std::size_t n = 0;
    const std::size_t x = i % r, y = i / r;
    if (x + 1 < r) out[n++] = i + 1;
    if (x >= 1) out[n++] = i - 1;
    if (y + 1 < r) out[n++] = i + r;
    if (y >= 1) out[n++] = i - r;
    return n;
  };
  std::size_t nb[4];
  for (std::size_t i = 0; i < r * r; ++i) {
    if (!h.is_hole(i)) continue;
    const std::size_t cnt = neighbors(i, nb);
    for (std::size_t k = 0; k < cnt; ++k) {
      if (!h.is_hole(nb[k])) {
        seen[i] = 1;
        stack.push_back(i);
        break;
      }
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const std::size_t cnt = neighbors(i, nb);
    for (std::size_t k = 0; k < cnt; ++k) {
      if (h.is_hole(nb[k]) && !seen[nb[k]]) {
        seen[nb[k]] = 1;
        stack.push_back(nb[k]);
      }
    }
  }
  for (std::size_t i = 0; i < r * r; ++i) {
    if (h.is_hole(i) && !seen[i]) return false;
  }
  return true;
}

inline PoissonResult solve_poisson_report(const heightfield::HeightField& h, const GradientField& g,
                                          const InpaintConfig& cfg = {}) {
  const PoissonSystem sys = assemble_poisson(h, g);
  PoissonResult res{h};
  if (sys.cells.empty()) return res;
  if (!holes_anchored(h)) {
    throw SolverDivergence("solve_poisson: a hole region has no known boundary cell");
  }

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(sys.A);
  if (solver.info() != Eigen::Success) {
    throw SolverDivergence("solve_poisson: factorization failed");
  }
  Eigen::VectorXd x = solver.solve(sys.b);
  res.rhs_norm = sys.b.norm();
  const double target = cfg.solver_tol * res.rhs_norm;
  Eigen::VectorXd resid = sys.b - sys.A * x;
  res.residual = resid.norm();
  while (res.residual > target && res.refinements < cfg.solver_max_iter) {
    x += solver.solve(resid);
    resid = sys.b - sys.A * x;
    res.residual = resid.norm();
    ++res.refinements;
  }
  if (!x.allFinite() || res.residual > target) {
    throw SolverDivergence("solve_poisson: residual " + std::to_string(res.residual) + " above target " +
                           std::to_string(target));
  }
  for (std::size_t k = 0; k < sys.cells.size(); ++k) {
    res.field.values[sys.cells[k]] = x[static_cast<Eigen::Index>(k)];
  }
  return res;
}

inline heightfield::HeightField solve_poisson(const heightfield::HeightField& h, const GradientField& g,
                                              const InpaintConfig& cfg = {}) {
  return solve_poisson_report(h, g, cfg).field;
}

}  // namespace terrafill::inpaint
