// SPDX-License-Identifier: Apache-2.0
//
// B-spline basis functions over clamped knot vectors.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "terrafill/error.hpp"

namespace terrafill::bspline {

inline constexpr int kMaxDegree = 7;

/// Clamped uniform knots for `count` control points of the given degree:
/// degree+1 zeros, uniform interior knots, degree+1 ones.
inline std::vector<double> clamped_uniform_knots(std::size_t count, int degree) {
  if (degree < 1 || degree > kMaxDegree) throw InvalidParameter("degree must be in [1, 7]");
  if (count < static_cast<std::size_t>(degree) + 1) {
    throw InvalidParameter("need at least degree+1 control points");
  }
  const std::size_t p = static_cast<std::size_t>(degree);
  const std::size_t spans = count - p;
  std::vector<double> knots(count + p + 1);
  for (std::size_t i = 0; i <= p; ++i) {
    knots[i] = 0.0;
    knots[knots.size() - 1 - i] = 1.0;
  }
  for (std::size_t i = 1; i < spans; ++i) {
    knots[p + i] = static_cast<double>(i) / static_cast<double>(spans);
  }
  return knots;
}

/// Number of basis functions for a knot vector.
inline std::size_t basis_count(const std::vector<double>& knots, int degree) {
  return knots.size() - static_cast<std::size_t>(degree) - 1;
}

/// Index of the knot span containing t; the right end maps to the last
/// non-empty span.
inline std::size_t find_span(const std::vector<double>& knots, int degree, double t) {
  const std::size_t n = basis_count(knots, degree) - 1;
  const std::size_t p = static_cast<std::size_t>(degree);
  if (t >= knots[n + 1]) return n;
  if (t <= knots[p]) return p;
  // first knot strictly greater than t, minus one
  auto it = std::upper_bound(knots.begin() + static_cast<std::ptrdiff_t>(p),
                             knots.begin() + static_cast<std::ptrdiff_t>(n + 1), t);
  return static_cast<std::size_t>(it - knots.begin()) - 1;
}

/// Single basis function N_{i,degree}(t) by the Cox-de Boor recursion.
inline double basis(const std::vector<double>& knots, int degree, std::size_t i, double t) {
  if (t < knots.front() || t > knots.back()) {
    throw InvalidParameter("basis: parameter " + std::to_string(t) + " outside the knot range");
  }
  const std::size_t count = basis_count(knots, degree);
  if (i >= count) throw InvalidParameter("basis: index out of range");
  if (t == knots.back()) return i == count - 1 ? 1.0 : 0.0;

  const std::size_t p = static_cast<std::size_t>(degree);
  // Degree-0 table over the support [knots[i], knots[i+p+1]).
  std::array<double, kMaxDegree + 1> n{};
  for (std::size_t j = 0; j <= p; ++j) {
    n[j] = (t >= knots[i + j] && t < knots[i + j + 1]) ? 1.0 : 0.0;
  }
  for (std::size_t k = 1; k <= p; ++k) {
    for (std::size_t j = 0; j + k <= p; ++j) {
      const double a0 = knots[i + j], a1 = knots[i + j + k];
      const double b0 = knots[i + j + 1], b1 = knots[i + j + k + 1];
      double v = 0.0;
      if (a1 > a0) v += (t - a0) / (a1 - a0) * n[j];
      if (b1 > b0) v += (b1 - t) / (b1 - b0) * n[j + 1];
      n[j] = v;
    }
  }
  return n[0];
}

/// All non-zero basis values and their derivatives up to `order` at t.
/// ders[k][j] is the k-th derivative of N_{span-degree+j}.
struct BasisDerivatives {
  std::size_t span = 0;
  std::array<std::array<double, kMaxDegree + 1>, 3> ders{};
};

inline BasisDerivatives basis_derivatives(const std::vector<double>& knots, int degree, double t, int order) {
  const auto p = static_cast<std::size_t>(degree);
  BasisDerivatives out;
  out.span = find_span(knots, degree, t);
  const std::size_t span = out.span;

  std::array<std::array<double, kMaxDegree + 1>, kMaxDegree + 1> ndu{};
  std::array<double, kMaxDegree + 1> left{}, right{};
  ndu[0][0] = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    left[j] = t - knots[span + 1 - j];
    right[j] = knots[span + j] - t;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  for (std::size_t j = 0; j <= p; ++j) out.ders[0][j] = ndu[j][p];
  // Clamped ends interpolate exactly; the recursion can be off by an ulp.
  if (t == knots.front() || t == knots.back()) {
    out.ders[0].fill(0.0);
    out.ders[0][t == knots.front() ? 0 : p] = 1.0;
  }

  const auto max_k = static_cast<std::size_t>(std::min(order, degree));
  std::array<std::array<double, kMaxDegree + 1>, 2> a{};
  for (std::size_t r = 0; r <= p; ++r) {
    std::size_t s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (std::size_t k = 1; k <= max_k; ++k) {
      double d = 0.0;
      const auto rk = static_cast<std::ptrdiff_t>(r) - static_cast<std::ptrdiff_t>(k);
      const auto pk = static_cast<std::ptrdiff_t>(p) - static_cast<std::ptrdiff_t>(k);
      if (rk >= 0) {
        a[s2][0] = a[s1][0] / ndu[static_cast<std::size_t>(pk) + 1][static_cast<std::size_t>(rk)];
        d = a[s2][0] * ndu[static_cast<std::size_t>(rk)][static_cast<std::size_t>(pk)];
      }
      const std::ptrdiff_t j1 = rk >= -1 ? 1 : -rk;
      const std::ptrdiff_t j2 = static_cast<std::ptrdiff_t>(r) - 1 <= pk ? static_cast<std::ptrdiff_t>(k) - 1
                                                                         : static_cast<std::ptrdiff_t>(p) - static_cast<std::ptrdiff_t>(r);
      for (std::ptrdiff_t j = j1; j <= j2; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        a[s2][uj] = (a[s1][uj] - a[s1][uj - 1]) / ndu[static_cast<std::size_t>(pk) + 1][static_cast<std::size_t>(rk + j)];
        d += a[s2][uj] * ndu[static_cast<std::size_t>(rk + j)][static_cast<std::size_t>(pk)];
      }
      if (static_cast<std::ptrdiff_t>(r) <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[static_cast<std::size_t>(pk) + 1][r];
        d += a[s2][k] * ndu[r][static_cast<std::size_t>(pk)];
      }
      out.ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = static_cast<double>(p);
  for (std::size_t k = 1; k <= max_k; ++k) {
    for (std::size_t j = 0; j <= p; ++j) out.ders[k][j] *= factor;
    factor *= static_cast<double>(p - k);
  }
  return out;
}

}  // namespace terrafill::bspline
