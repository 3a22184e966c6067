// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "terrafill/heightfield/height_field.hpp"

namespace terrafill::inpaint {

/// Forward-difference gradients of a height field. gx(x,y) = I(x+1,y) - I(x,y)
/// is defined only when both cells are known and x+1 < r; gy likewise.
/// `target_x`/`target_y` mark the undefined samples an inpainter has to
/// supply: those on an in-image edge that touches a hole.
struct GradientField {
  std::size_t r = 0;
  std::vector<double> gx, gy;
  std::vector<char> known_x, known_y;
  std::vector<char> target_x, target_y;

  std::size_t index(std::size_t x, std::size_t y) const { return y * r + x; }

  std::size_t target_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < gx.size(); ++i) n += (target_x[i] ? 1 : 0) + (target_y[i] ? 1 : 0);
    return n;
  }
};

inline GradientField compute_gradients(const heightfield::HeightField& h) {
  GradientField g;
  const std::size_t r = h.r;
  g.r = r;
  g.gx.assign(r * r, 0.0);
  g.gy.assign(r * r, 0.0);
  g.known_x.assign(r * r, 0);
  g.known_y.assign(r * r, 0);
  g.target_x.assign(r * r, 0);
  g.target_y.assign(r * r, 0);
  for (std::size_t y = 0; y < r; ++y) {
    for (std::size_t x = 0; x < r; ++x) {
      const std::size_t i = h.index(x, y);
      const bool here = !h.is_hole(i);
      if (x + 1 < r) {
        const bool there = !h.is_hole(i + 1);
        if (here && there) {
          g.gx[i] = h.values[i + 1] - h.values[i];
          g.known_x[i] = 1;
        } else {
          g.target_x[i] = 1;
        }
      }
      if (y + 1 < r) {
        const bool there = !h.is_hole(i + r);
        if (here && there) {
          g.gy[i] = h.values[i + r] - h.values[i];
          g.known_y[i] = 1;
        } else {
          g.target_y[i] = 1;
        }
      }
    }
  }
  return g;
}

}  // namespace terrafill::inpaint
