// SPDX-License-Identifier: Apache-2.0
//
// Square raster over parameter space. Cell (x, y) covers
// [x/r, (x+1)/r) x [y/r, (y+1)/r) and is stored at index y*r + x. Holes are
// NaN.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "terrafill/error.hpp"
#include "terrafill/file_io.hpp"

namespace terrafill::heightfield {

struct HeightField {
  std::size_t r = 0;
  double rho = 0.0;
  std::vector<double> values;         // NaN marks a hole
  std::vector<std::uint32_t> counts;  // projections per cell

  HeightField() = default;
  HeightField(std::size_t res, double density)
      : r(res), rho(density), values(res * res, std::numeric_limits<double>::quiet_NaN()), counts(res * res, 0) {}

  std::size_t index(std::size_t x, std::size_t y) const { return y * r + x; }
  double at(std::size_t x, std::size_t y) const { return values[index(x, y)]; }
  double& at(std::size_t x, std::size_t y) { return values[index(x, y)]; }
  bool is_hole(std::size_t i) const { return std::isnan(values[i]); }
  bool is_hole(std::size_t x, std::size_t y) const { return is_hole(index(x, y)); }

  std::size_t hole_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < values.size(); ++i) n += is_hole(i) ? 1 : 0;
    return n;
  }

  friend bool operator==(const HeightField& a, const HeightField& b) {
    if (a.r != b.r || a.counts != b.counts || a.values.size() != b.values.size()) return false;
    if (std::memcmp(&a.rho, &b.rho, sizeof(double)) != 0) return false;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      if (std::isnan(a.values[i]) != std::isnan(b.values[i])) return false;
      if (!std::isnan(a.values[i]) && a.values[i] != b.values[i]) return false;
    }
    return true;
  }
};

/// Rounds every value to the nearest float, the precision of the file format.
inline void quantize(HeightField& h) {
  for (double& v : h.values) {
    if (!std::isnan(v)) v = static_cast<double>(static_cast<float>(v));
  }
}

inline constexpr char kHeightFieldMagic[4] = {'H', 'F', '0', '1'};
inline constexpr char kCountsMagic[4] = {'C', 'N', 'T', '1'};

namespace detail {

template <typename T>
void put(std::string& buf, T v) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  buf.append(b, sizeof(T));
}

template <typename T>
T take(const std::string& data, std::size_t& pos, const std::string& source) {
  if (data.size() - pos < sizeof(T)) {
    throw ParseError(source + ": truncated height field at byte " + std::to_string(pos), 0, pos);
  }
  T v;
  std::memcpy(&v, data.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace detail

/// Binary layout: "HF01", r (u32), rho (f64), r*r f32 values, then an
/// optional "CNT1" block with r*r u32 counts. All little-endian.
inline std::string encode(const HeightField& h) {
  std::string buf(kHeightFieldMagic, 4);
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(h.r));
  detail::put<double>(buf, h.rho);
  for (double v : h.values) {
    detail::put<float>(buf, std::isnan(v) ? std::numeric_limits<float>::quiet_NaN() : static_cast<float>(v));
  }
  if (h.counts.size() == h.values.size()) {
    buf.append(kCountsMagic, 4);
    for (auto c : h.counts) detail::put<std::uint32_t>(buf, c);
  }
  return buf;
}

inline HeightField decode(const std::string& data, const std::string& source = "<memory>") {
  if (data.size() < 4 || std::memcmp(data.data(), kHeightFieldMagic, 4) != 0) {
    throw ParseError(source + ": not a height field: expected magic 'HF01'", 0, 0);
  }
  std::size_t pos = 4;
  const auto r = detail::take<std::uint32_t>(data, pos, source);
  const auto rho = detail::take<double>(data, pos, source);
  if (r < 1 || static_cast<std::uint64_t>(r) * r * 4 > data.size()) {
    throw ParseError(source + ": implausible resolution " + std::to_string(r), 0, 4);
  }
  HeightField h(r, rho);
  for (auto& v : h.values) {
    const float f = detail::take<float>(data, pos, source);
    v = std::isnan(f) ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(f);
  }
  if (pos == data.size()) {
    // No counts block: treat every valued cell as holding one projection.
    for (std::size_t i = 0; i < h.values.size(); ++i) h.counts[i] = h.is_hole(i) ? 0 : 1;
    return h;
  }
  if (data.size() - pos < 4 || std::memcmp(data.data() + pos, kCountsMagic, 4) != 0) {
    throw ParseError(source + ": unexpected trailing data, expected magic 'CNT1'", 0, pos);
  }
  pos += 4;
  for (auto& c : h.counts) c = detail::take<std::uint32_t>(data, pos, source);
  if (pos != data.size()) throw ParseError(source + ": trailing bytes after counts block", 0, pos);
  return h;
}

inline void write_height_field(const std::filesystem::path& path, const HeightField& h) {
  write_file(path, encode(h));
}

inline HeightField read_height_field(const std::filesystem::path& path) {
  return decode(read_file(path), path.string());
}

/// 8-bit binary PGM, min-max normalized to 1..255 with holes at 0. Row 0 of
/// the image is the top (largest y).
inline std::string encode_pgm(const HeightField& h) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : h.values) {
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::string buf = "P5\n" + std::to_string(h.r) + " " + std::to_string(h.r) + "\n255\n";
  for (std::size_t row = 0; row < h.r; ++row) {
    const std::size_t y = h.r - 1 - row;
    for (std::size_t x = 0; x < h.r; ++x) {
      const double v = h.at(x, y);
      unsigned char px = 0;
      if (!std::isnan(v)) {
        const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        px = static_cast<unsigned char>(1 + std::lround(t * 254.0));
      }
      buf.push_back(static_cast<char>(px));
    }
  }
  return buf;
}

inline void write_pgm(const std::filesystem::path& path, const HeightField& h) { write_file(path, encode_pgm(h)); }

}  // namespace terrafill::heightfield
