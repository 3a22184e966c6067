// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "terrafill/types.hpp"

namespace terrafill::reconstruct {

inline constexpr std::size_t kDefaultHaltonSkip = 20;

/// Van der Corput radical inverse of `index` in `base`.
inline double radical_inverse(std::uint64_t index, std::uint32_t base) {
  double inv = 1.0 / base, f = inv, value = 0.0;
  while (index > 0) {
    value += static_cast<double>(index % base) * f;
    index /= base;
    f *= inv;
  }
  return value;
}

/// Halton point for 1-based `index` in bases (2, 3).
inline ParamPoint halton_point(std::uint64_t index) { return {radical_inverse(index, 2), radical_inverse(index, 3)}; }

/// `count` consecutive points starting at index skip+1.
inline std::vector<ParamPoint> halton_sequence(std::size_t count, std::size_t skip = kDefaultHaltonSkip) {
  std::vector<ParamPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(halton_point(skip + 1 + i));
  return out;
}

}  // namespace terrafill::reconstruct
