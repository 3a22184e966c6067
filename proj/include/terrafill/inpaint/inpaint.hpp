// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "terrafill/inpaint/patch_match.hpp"
#include "terrafill/inpaint/poisson.hpp"

namespace terrafill::inpaint {

struct InpaintResult {
  heightfield::HeightField field;
  GradientField gradients;                    // guidance used by the final solve
  NearestNeighborField nnf;                   // correspondences of the final pass
  std::vector<std::vector<double>> histories;  // per pass: total distance per iteration
  double residual = 0.0;
  double rhs_norm = 0.0;
  std::size_t hole_cells = 0;
};

/// Gradient-domain fill. Hole gradients start at zero; each pass matches
/// patches against the current estimate, starting from the previous pass's
/// correspondences, and replaces the estimate with the averaged votes. After `refresh_rounds` such passes a final pass supplies the
/// guidance for the Poisson solve. Known cells come back bit-identical.
inline InpaintResult inpaint_report(const heightfield::HeightField& h, const InpaintConfig& cfg) {
  cfg.validate();
  InpaintResult res;
  res.field = h;
  res.hole_cells = h.hole_count();
  res.gradients = compute_gradients(h);
  res.nnf.r = h.r;
  res.nnf.patch_size = cfg.patch_size;
  if (res.hole_cells == 0) return res;
  if (res.hole_cells == h.values.size()) throw NoValidSourcePatch("inpaint: the height field has no known cells");

  for (int pass = 0; pass <= cfg.refresh_rounds; ++pass) {
    InpaintConfig pass_cfg = cfg;
    pass_cfg.rng_seed = cfg.rng_seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(pass);
    res.nnf = patch_match(res.gradients, pass_cfg, pass > 0 ? &res.nnf : nullptr);
    res.histories.push_back(res.nnf.history);
    res.gradients = aggregate_gradients(res.nnf, res.gradients);
  }
  auto solved = solve_poisson_report(h, res.gradients, cfg);
  res.field = std::move(solved.field);
  res.residual = solved.residual;
  res.rhs_norm = solved.rhs_norm;
  return res;
}

inline heightfield::HeightField inpaint(const heightfield::HeightField& h, const InpaintConfig& cfg = {}) {
  return inpaint_report(h, cfg).field;
}

}  // namespace terrafill::inpaint
