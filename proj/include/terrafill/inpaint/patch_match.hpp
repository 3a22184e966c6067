// SPDX-License-Identifier: Apache-2.0
//
// Randomized patch correspondence search on a two-channel gradient field,
// and the vote averaging that turns correspondences into hole gradients.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "terrafill/file_io.hpp"
#include "terrafill/inpaint/config.hpp"
#include "terrafill/inpaint/gradients.hpp"
#include "terrafill/types.hpp"

namespace terrafill::inpaint {

struct NnfEntry {
  std::int32_t cx = 0, cy = 0;  // target patch center
  std::int32_t dx = 0, dy = 0;  // source center minus target center
  double distance = 0.0;        // SSD over both gradient channels
};

struct NearestNeighborField {
  std::size_t r = 0;
  int patch_size = 0;
  std::vector<NnfEntry> entries;  // scan order: y-major, then x
  /// Total distance after random initialization and after every iteration.
  std::vector<double> history;

  double total() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.distance;
    return s;
  }
};

namespace detail {

/// Inclusive box sums over a 0/1 mask.
class BoxCounter {
 public:
  BoxCounter(const std::vector<char>& mask, std::size_t r) : r_(r), sat_((r + 1) * (r + 1), 0) {
    for (std::size_t y = 0; y < r; ++y) {
      for (std::size_t x = 0; x < r; ++x) {
        sat_[(y + 1) * (r + 1) + x + 1] = (mask[y * r + x] ? 1 : 0) + sat_[y * (r + 1) + x + 1] +
                                          sat_[(y + 1) * (r + 1) + x] - sat_[y * (r + 1) + x];
      }
    }
  }
  /// Count over [x0, x1] x [y0, y1].
  std::int64_t count(std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1) const {
    const std::size_t w = r_ + 1;
    return sat_[(y1 + 1) * w + x1 + 1] - sat_[y0 * w + x1 + 1] - sat_[(y1 + 1) * w + x0] + sat_[y0 * w + x0];
  }

 private:
  std::size_t r_;
  std::vector<std::int64_t> sat_;
};

class Matcher {
 public:
  Matcher(const GradientField& g, int patch_size) : g_(g), r_(static_cast<int>(g.r)), half_(patch_size / 2) {
    std::vector<char> bad(g.r * g.r), tgt(g.r * g.r);
    for (std::size_t i = 0; i < bad.size(); ++i) {
      bad[i] = !(g.known_x[i] && g.known_y[i]);
      tgt[i] = g.target_x[i] || g.target_y[i];
    }
    const BoxCounter bad_box(bad, g.r), tgt_box(tgt, g.r);
    valid_.assign(g.r * g.r, 0);
    slot_.assign(g.r * g.r, -1);
    for (int y = half_; y + half_ < r_; ++y) {
      for (int x = half_; x + half_ < r_; ++x) {
        const auto x0 = static_cast<std::size_t>(x - half_), y0 = static_cast<std::size_t>(y - half_);
        const auto x1 = static_cast<std::size_t>(x + half_), y1 = static_cast<std::size_t>(y + half_);
        if (bad_box.count(x0, y0, x1, y1) == 0) {
          valid_[idx(x, y)] = 1;
          sources_.push_back({x, y});
        }
        if (tgt_box.count(x0, y0, x1, y1) > 0) {
          slot_[idx(x, y)] = static_cast<std::int32_t>(targets_.size());
          targets_.push_back({x, y});
        }
      }
    }
  }

  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * g_.r + static_cast<std::size_t>(x); }
  bool valid_source(int x, int y) const {
    return x >= half_ && y >= half_ && x + half_ < r_ && y + half_ < r_ && valid_[idx(x, y)];
  }
  const std::vector<std::array<int, 2>>& sources() const { return sources_; }
  const std::vector<std::array<int, 2>>& targets() const { return targets_; }
  std::int32_t slot(int x, int y) const {
    if (x < 0 || y < 0 || x >= r_ || y >= r_) return -1;
    return slot_[idx(x, y)];
  }
  int half() const { return half_; }
  int r() const { return r_; }

  /// SSD between the target patch at (cx,cy) and the source patch at
  /// (sx,sy). Stops early once the partial sum exceeds `limit`.
  double distance(int cx, int cy, int sx, int sy, double limit) const {
    double sum = 0.0;
    for (int b = -half_; b <= half_; ++b) {
      const std::size_t trow = idx(cx - half_, cy + b);
      const std::size_t srow = idx(sx - half_, sy + b);
      for (int a = 0; a <= 2 * half_; ++a) {
        const std::size_t t = trow + static_cast<std::size_t>(a), s = srow + static_cast<std::size_t>(a);
        if (g_.known_x[t] || g_.target_x[t]) {
          const double d = g_.gx[t] - g_.gx[s];
          sum += d * d;
        }
        if (g_.known_y[t] || g_.target_y[t]) {
          const double d = g_.gy[t] - g_.gy[s];
          sum += d * d;
        }
      }
      if (sum > limit) return sum;
    }
    return sum;
  }

 private:
  const GradientField& g_;
  int r_;
  int half_;
  std::vector<char> valid_;
  std::vector<std::int32_t> slot_;
  std::vector<std::array<int, 2>> sources_;
  std::vector<std::array<int, 2>> targets_;
};

}  // namespace detail

/// Hole samples of `g` (target_x/target_y) take part in the distance with
/// whatever values `g` currently holds for them. When `initial` is given,
/// targets it covers start from its offsets (distances recomputed against
/// `g`) instead of random ones.
inline NearestNeighborField patch_match(const GradientField& g, const InpaintConfig& cfg,
                                        const NearestNeighborField* initial = nullptr) {
  cfg.validate();
  const detail::Matcher mt(g, cfg.patch_size);
  NearestNeighborField nnf;
  nnf.r = g.r;
  nnf.patch_size = cfg.patch_size;
  if (mt.targets().empty()) return nnf;
  if (mt.sources().empty()) {
    throw NoValidSourcePatch("patch_match: no fully known " + std::to_string(cfg.patch_size) + "x" +
                             std::to_string(cfg.patch_size) + " patch exists");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  Rng rng(cfg.rng_seed);

  auto& E = nnf.entries;
  E.resize(mt.targets().size());
  std::vector<const NnfEntry*> prior(E.size(), nullptr);
  if (initial && initial->r == g.r && initial->patch_size == cfg.patch_size) {
    for (const auto& e : initial->entries) {
      const std::int32_t k = mt.slot(e.cx, e.cy);
      if (k >= 0 && mt.valid_source(e.cx + e.dx, e.cy + e.dy)) prior[static_cast<std::size_t>(k)] = &e;
    }
  }
  for (std::size_t k = 0; k < E.size(); ++k) {
    const auto [cx, cy] = mt.targets()[k];
    const auto [rx, ry] = mt.sources()[rng.below(mt.sources().size())];
    const int sx = prior[k] ? cx + prior[k]->dx : rx;
    const int sy = prior[k] ? cy + prior[k]->dy : ry;
    E[k] = {cx, cy, sx - cx, sy - cy, mt.distance(cx, cy, sx, sy, kInf)};
  }
  nnf.history.push_back(nnf.total());

  auto try_source = [&](NnfEntry& e, int sx, int sy) {
    if (!mt.valid_source(sx, sy) || (sx - e.cx == e.dx && sy - e.cy == e.dy)) return;
    const double d = mt.distance(e.cx, e.cy, sx, sy, e.distance);
    if (d < e.distance) {
      e.dx = sx - e.cx;
      e.dy = sy - e.cy;
      e.distance = d;
    }
  };

  const int r = mt.r();
  for (int it = 0; it < cfg.iterations; ++it) {
    const bool forward = it % 2 == 0;
    const int step = forward ? 1 : -1;
    for (std::size_t n = 0; n < E.size(); ++n) {
      NnfEntry& e = E[forward ? n : E.size() - 1 - n];
      // Propagation from the already-visited neighbors in this scan direction.
      for (const auto [ox, oy] : {std::array<int, 2>{-step, 0}, std::array<int, 2>{0, -step}}) {
        const std::int32_t nb = mt.slot(e.cx + ox, e.cy + oy);
        if (nb < 0) continue;
        const NnfEntry& f = E[static_cast<std::size_t>(nb)];
        try_source(e, f.cx + f.dx - ox, f.cy + f.dy - oy);
      }
      // Random search in a window that halves down to one cell.
      for (int w = r; w >= 1; w /= 2) {
        const int bx = e.cx + e.dx, by = e.cy + e.dy;
        const int sx = std::clamp(bx + static_cast<int>(std::lround(rng.uniform(-1.0, 1.0) * w)), mt.half(),
                                  r - 1 - mt.half());
        const int sy = std::clamp(by + static_cast<int>(std::lround(rng.uniform(-1.0, 1.0) * w)), mt.half(),
                                  r - 1 - mt.half());
        try_source(e, sx, sy);
      }
    }
    nnf.history.push_back(nnf.total());
  }
  return nnf;
}

/// Fills every target sample with the mean of the values voted for it by the
/// source patches of all correspondences covering it. Known samples are
/// returned unchanged.
inline GradientField aggregate_gradients(const NearestNeighborField& nnf, const GradientField& g) {
  if (nnf.r != g.r) throw InvalidParameter("aggregate_gradients: field sizes differ");
  const int half = nnf.patch_size / 2;
  std::vector<double> sx(g.gx.size(), 0.0), sy(g.gy.size(), 0.0);
  std::vector<std::uint32_t> nx(g.gx.size(), 0), ny(g.gy.size(), 0);
  for (const auto& e : nnf.entries) {
    for (int b = -half; b <= half; ++b) {
      for (int a = -half; a <= half; ++a) {
        const std::size_t t = g.index(static_cast<std::size_t>(e.cx + a), static_cast<std::size_t>(e.cy + b));
        const std::size_t s =
            g.index(static_cast<std::size_t>(e.cx + e.dx + a), static_cast<std::size_t>(e.cy + e.dy + b));
        if (g.target_x[t]) {
          sx[t] += g.gx[s];
          ++nx[t];
        }
        if (g.target_y[t]) {
          sy[t] += g.gy[s];
          ++ny[t];
        }
      }
    }
  }
  GradientField out = g;
  for (std::size_t i = 0; i < g.gx.size(); ++i) {
    if ((g.target_x[i] && nx[i] == 0) || (g.target_y[i] && ny[i] == 0)) {
      throw UncoveredHoleCell("aggregate_gradients: cell (" + std::to_string(i % g.r) + ", " +
                              std::to_string(i / g.r) + ") received no votes");
    }
    if (g.target_x[i]) out.gx[i] = sx[i] / nx[i];
    if (g.target_y[i]) out.gy[i] = sy[i] / ny[i];
  }
  return out;
}

inline std::string format_nnf(const NearestNeighborField& nnf) {
  std::string out = "cx cy dx dy dist\n";
  char buf[128];
  for (const auto& e : nnf.entries) {
    std::snprintf(buf, sizeof(buf), "%d %d %d %d %.9g\n", e.cx, e.cy, e.dx, e.dy, e.distance);
    out += buf;
  }
  return out;
}

inline void write_nnf(const std::filesystem::path& path, const NearestNeighborField& nnf) {
  write_file(path, format_nnf(nnf));
}

}  // namespace terrafill::inpaint
