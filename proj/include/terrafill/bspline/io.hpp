// SPDX-License-Identifier: Apache-2.0
//
// Plain-text surface files:
//
//   bspline 1
//   degree <du> <dv>
//   knots_u <count> <k0> <k1> ...
//   knots_v <count> <k0> <k1> ...
//   control <rows> <cols>
//   <x> <y> <z>          (rows*cols lines, row-major)
//
// Reals are written with 9 significant digits.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "terrafill/bspline/surface.hpp"
#include "terrafill/file_io.hpp"
#include "terrafill/pointcloud/io.hpp"

namespace terrafill::bspline {

inline constexpr const char* kSurfaceMagic = "bspline 1";

inline std::string format_surface(const BSplineSurface& s) {
  using cloud::detail::format_real;
  std::string out = std::string(kSurfaceMagic) + "\n";
  out += "degree " + std::to_string(s.degree_u()) + " " + std::to_string(s.degree_v()) + "\n";
  auto knots = [&](const char* name, const std::vector<double>& k) {
    out += std::string(name) + " " + std::to_string(k.size());
    for (double t : k) out += " " + format_real(t);
    out += "\n";
  };
  knots("knots_u", s.knots_u());
  knots("knots_v", s.knots_v());
  out += "control " + std::to_string(s.rows()) + " " + std::to_string(s.cols()) + "\n";
  for (const auto& p : s.control()) {
    out += format_real(p.x()) + " " + format_real(p.y()) + " " + format_real(p.z()) + "\n";
  }
  return out;
}

inline BSplineSurface parse_surface(const std::string& text, const std::string& source = "<memory>") {
  cloud::detail::LineReader reader(text);
  std::string_view line;
  auto fail = [&](const std::string& msg) -> void {
    throw ParseError(source + ":" + std::to_string(reader.line_no()) + ": " + msg, reader.line_no());
  };
  auto next_tokens = [&](const char* expect) {
    do {
      if (!reader.next(line)) fail(std::string("unexpected end of file, expected ") + expect);
    } while (cloud::detail::split_ws(line).empty());
    return cloud::detail::split_ws(line);
  };
  auto to_size = [&](std::string_view tok) {
    double v = 0.0;
    if (!cloud::detail::parse_double(tok, v) || v < 0.0 || v != std::floor(v) || v > 1e9) {
      fail("expected a count, got '" + std::string(tok) + "'");
    }
    return static_cast<std::size_t>(v);
  };
  auto to_real = [&](std::string_view tok) {
    double v = 0.0;
    if (!cloud::detail::parse_double(tok, v)) fail("expected a number, got '" + std::string(tok) + "'");
    return v;
  };

  auto head = next_tokens("magic");
  if (head.size() != 2 || head[0] != "bspline" || head[1] != "1") {
    fail(std::string("not a surface file: expected magic '") + kSurfaceMagic + "'");
  }
  auto deg = next_tokens("degree");
  if (deg.size() != 3 || deg[0] != "degree") fail("expected 'degree <du> <dv>'");
  const auto du = static_cast<int>(to_size(deg[1]));
  const auto dv = static_cast<int>(to_size(deg[2]));

  auto read_knots = [&](const char* name) {
    auto tok = next_tokens(name);
    if (tok.size() < 2 || tok[0] != name) fail(std::string("expected '") + name + " <count> ...'");
    const std::size_t count = to_size(tok[1]);
    if (tok.size() != count + 2) fail(std::string(name) + ": knot count does not match values");
    std::vector<double> k;
    for (std::size_t i = 0; i < count; ++i) k.push_back(to_real(tok[i + 2]));
    return k;
  };
  auto ku = read_knots("knots_u");
  auto kv = read_knots("knots_v");

  auto ctl = next_tokens("control");
  if (ctl.size() != 3 || ctl[0] != "control") fail("expected 'control <rows> <cols>'");
  const std::size_t rows = to_size(ctl[1]), cols = to_size(ctl[2]);
  std::vector<Point3> control;
  control.reserve(rows * cols);
  for (std::size_t k = 0; k < rows * cols; ++k) {
    auto tok = next_tokens("control point");
    if (tok.size() != 3) fail("control point needs 3 coordinates");
    control.emplace_back(to_real(tok[0]), to_real(tok[1]), to_real(tok[2]));
  }
  try {
    return BSplineSurface(du, dv, std::move(ku), std::move(kv), rows, cols, std::move(control));
  } catch (const InvalidParameter& e) {
    throw ParseError(source + ": invalid surface: " + e.what(), reader.line_no());
  }
}

inline void write_surface(const std::filesystem::path& path, const BSplineSurface& s) {
  write_file(path, format_surface(s));
}

inline BSplineSurface read_surface(const std::filesystem::path& path) {
  return parse_surface(read_file(path), path.string());
}

}  // namespace terrafill::bspline
