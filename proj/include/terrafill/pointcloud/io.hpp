// SPDX-License-Identifier: Apache-2.0
//
// Point cloud readers and writers for whitespace-separated xyz text and PLY
// (ascii and binary_little_endian).

#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "terrafill/error.hpp"
#include "terrafill/pointcloud/point_cloud.hpp"

namespace terrafill::cloud {

enum class CloudFormat { kXyz, kPly };

/// Guesses the format from the file extension; anything but ".ply" is xyz.
inline CloudFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".ply" ? CloudFormat::kPly : CloudFormat::kXyz;
}

struct CloudFile {
  PointCloud cloud;
  /// Per-point "generated" flag when the PLY carried that property.
  std::optional<std::vector<std::uint8_t>> generated;
};

struct WriteOptions {
  CloudFormat format = CloudFormat::kPly;
  bool binary = true;  // PLY only
  const std::vector<std::uint8_t>* generated = nullptr;  // PLY only
};

namespace detail {

inline std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

/// Iterates lines keeping a 1-based counter; strips trailing '\r'.
class LineReader {
 public:
  explicit LineReader(std::string_view text, std::size_t pos = 0) : text_(text), pos_(pos) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++line_no_;
    return true;
  }
  std::size_t line_no() const { return line_no_; }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view text_;
  std::size_t pos_;
  std::size_t line_no_ = 0;
};

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

inline std::optional<PlyType> ply_type(std::string_view s) {
  if (s == "char" || s == "int8") return PlyType::kInt8;
  if (s == "uchar" || s == "uint8") return PlyType::kUint8;
  if (s == "short" || s == "int16") return PlyType::kInt16;
  if (s == "ushort" || s == "uint16") return PlyType::kUint16;
  if (s == "int" || s == "int32") return PlyType::kInt32;
  if (s == "uint" || s == "uint32") return PlyType::kUint32;
  if (s == "float" || s == "float32") return PlyType::kFloat32;
  if (s == "double" || s == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

inline std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUint8: return 1;
    case PlyType::kInt16:
    case PlyType::kUint16: return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

inline double load_ply_value(PlyType t, const char* p) {
  switch (t) {
    case PlyType::kInt8: return load_le<std::int8_t>(p);
    case PlyType::kUint8: return load_le<std::uint8_t>(p);
    case PlyType::kInt16: return load_le<std::int16_t>(p);
    case PlyType::kUint16: return load_le<std::uint16_t>(p);
    case PlyType::kInt32: return load_le<std::int32_t>(p);
    case PlyType::kUint32: return load_le<std::uint32_t>(p);
    case PlyType::kFloat32: return load_le<float>(p);
    case PlyType::kFloat64: return load_le<double>(p);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUint8;
};

struct PlyElement {
  std::string name;
  std::uint64_t count = 0;
  std::vector<PlyProperty> props;
};

inline CloudFile read_xyz(const std::string& text, const std::string& path) {
  CloudFile out;
  LineReader reader(text);
  std::string_view line;
  std::size_t arity = 0;
  std::vector<Vector3> normals;
  while (reader.next(line)) {
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 3 && toks.size() != 6) {
      throw ParseError(path + ":" + std::to_string(reader.line_no()) + ": expected 3 or 6 fields, got " +
                           std::to_string(toks.size()),
                       reader.line_no());
    }
    if (arity == 0) arity = toks.size();
    if (toks.size() != arity) {
      throw ParseError(path + ":" + std::to_string(reader.line_no()) + ": inconsistent field count",
                       reader.line_no());
    }
    double v[6];
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (!parse_double(toks[i], v[i])) {
        throw ParseError(path + ":" + std::to_string(reader.line_no()) + ": bad number '" +
                             std::string(toks[i]) + "'",
                         reader.line_no());
      }
    }
    out.cloud.points.emplace_back(v[0], v[1], v[2]);
    if (arity == 6) normals.emplace_back(v[3], v[4], v[5]);
  }
  if (arity == 6) out.cloud.normals = std::move(normals);
  return out;
}

inline CloudFile read_ply(const std::string& data, const std::string& path) {
  LineReader reader(data);
  std::string_view line;
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError(path + ":" + std::to_string(reader.line_no()) + ": " + msg, reader.line_no());
  };

  if (!reader.next(line) || line != "ply") throw fail("missing 'ply' magic");
  bool binary = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  bool header_done = false;
  while (reader.next(line)) {
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "end_header") {
      header_done = true;
      break;
    }
    if (toks[0] == "comment" || toks[0] == "obj_info") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2) throw fail("malformed format line");
      if (toks[1] == "ascii") {
        binary = false;
      } else if (toks[1] == "binary_little_endian") {
        binary = true;
      } else {
        throw fail("unsupported PLY format '" + std::string(toks[1]) + "'");
      }
      have_format = true;
    } else if (toks[0] == "element") {
      if (toks.size() != 3) throw fail("malformed element line");
      PlyElement e;
      e.name = std::string(toks[1]);
      const auto r = std::from_chars(toks[2].data(), toks[2].data() + toks[2].size(), e.count);
      if (r.ec != std::errc()) throw fail("bad element count");
      elements.push_back(std::move(e));
    } else if (toks[0] == "property") {
      if (elements.empty()) throw fail("property before element");
      PlyProperty p;
      if (toks.size() == 5 && toks[1] == "list") {
        auto ct = ply_type(toks[2]);
        auto it = ply_type(toks[3]);
        if (!ct || !it) throw fail("unknown list property type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        p.name = std::string(toks[4]);
      } else if (toks.size() == 3) {
        auto t = ply_type(toks[1]);
        if (!t) throw fail("unknown property type '" + std::string(toks[1]) + "'");
        p.type = *t;
        p.name = std::string(toks[2]);
      } else {
        throw fail("malformed property line");
      }
      elements.back().props.push_back(std::move(p));
    } else {
      throw fail("unexpected header keyword '" + std::string(toks[0]) + "'");
    }
  }
  if (!header_done) throw fail("missing end_header");
  if (!have_format) throw fail("missing format line");

  const PlyElement* vertex = nullptr;
  for (const auto& e : elements) {
    if (e.name == "vertex") vertex = &e;
  }
  if (!vertex) throw fail("no vertex element");
  auto find = [&](const char* name) -> int {
    for (std::size_t i = 0; i < vertex->props.size(); ++i) {
      if (vertex->props[i].name == name && !vertex->props[i].is_list) return static_cast<int>(i);
    }
    return -1;
  };
  const int ix = find("x"), iy = find("y"), iz = find("z");
  if (ix < 0 || iy < 0 || iz < 0) throw fail("vertex element lacks x/y/z");
  const int inx = find("nx"), iny = find("ny"), inz = find("nz");
  const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;
  const int igen = find("generated");

  CloudFile out;
  std::vector<Vector3> normals;
  std::vector<std::uint8_t> generated;
  out.cloud.points.reserve(vertex->count);
  std::vector<double> rec(vertex->props.size());
  auto store = [&]() {
    out.cloud.points.emplace_back(rec[ix], rec[iy], rec[iz]);
    if (has_normals) normals.emplace_back(rec[inx], rec[iny], rec[inz]);
    if (igen >= 0) generated.push_back(static_cast<std::uint8_t>(rec[igen] != 0.0));
  };

  if (!binary) {
    for (const auto& e : elements) {
      for (std::uint64_t r = 0; r < e.count; ++r) {
        if (!reader.next(line)) throw fail("unexpected end of file in element '" + e.name + "'");
        if (&e != vertex) continue;
        const auto toks = split_ws(line);
        if (toks.size() != e.props.size()) {
          throw fail("vertex record has " + std::to_string(toks.size()) + " fields, expected " +
                     std::to_string(e.props.size()));
        }
        for (std::size_t i = 0; i < toks.size(); ++i) {
          if (!parse_double(toks[i], rec[i])) throw fail("bad number '" + std::string(toks[i]) + "'");
        }
        store();
      }
    }
  } else {
    std::size_t pos = reader.pos();
    auto need = [&](std::size_t n) {
      if (pos + n > data.size()) {
        throw ParseError(path + ": truncated binary payload at byte " + std::to_string(pos), 0, pos);
      }
    };
    for (const auto& e : elements) {
      for (std::uint64_t r = 0; r < e.count; ++r) {
        for (std::size_t i = 0; i < e.props.size(); ++i) {
          const auto& p = e.props[i];
          if (p.is_list) {
            need(ply_size(p.count_type));
            const auto n = static_cast<std::size_t>(load_ply_value(p.count_type, data.data() + pos));
            pos += ply_size(p.count_type);
            need(n * ply_size(p.type));
            pos += n * ply_size(p.type);
          } else {
            need(ply_size(p.type));
            if (&e == vertex) rec[i] = load_ply_value(p.type, data.data() + pos);
            pos += ply_size(p.type);
          }
        }
        if (&e == vertex) store();
      }
    }
  }
  if (has_normals) out.cloud.normals = std::move(normals);
  if (igen >= 0) out.generated = std::move(generated);
  return out;
}

template <typename T>
void append_le(std::string& buf, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) std::reverse(b, b + sizeof(T));
  buf.append(b, sizeof(T));
}

}  // namespace detail

inline CloudFile read_cloud_file(const std::filesystem::path& path, CloudFormat format) {
  if (!std::filesystem::exists(path)) throw IoError("file not found: '" + path.string() + "'");
  const std::string data = detail::read_all(path);
  return format == CloudFormat::kPly ? detail::read_ply(data, path.string()) : detail::read_xyz(data, path.string());
}

inline PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format) {
  return read_cloud_file(path, format).cloud;
}

inline PointCloud read_cloud(const std::filesystem::path& path) { return read_cloud(path, format_from_path(path)); }

inline void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, const WriteOptions& opt = {}) {
  if (opt.generated && opt.generated->size() != cloud.size()) {
    throw InvalidParameter("write_cloud: generated flag count does not match point count");
  }
  std::string buf;
  const bool normals = cloud.has_normals();
  if (opt.format == CloudFormat::kXyz) {
    buf.reserve(cloud.size() * (normals ? 96 : 48));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.points[i];
      buf += detail::format_real(p.x()) + ' ' + detail::format_real(p.y()) + ' ' + detail::format_real(p.z());
      if (normals) {
        const auto& n = (*cloud.normals)[i];
        buf += ' ' + detail::format_real(n.x()) + ' ' + detail::format_real(n.y()) + ' ' +
               detail::format_real(n.z());
      }
      buf += '\n';
    }
  } else {
    const char* real = opt.binary ? "double" : "float";
    buf += "ply\nformat ";
    buf += opt.binary ? "binary_little_endian" : "ascii";
    buf += " 1.0\nelement vertex " + std::to_string(cloud.size()) + "\n";
    for (const char* n : {"x", "y", "z"}) buf += std::string("property ") + real + " " + n + "\n";
    if (normals) {
      for (const char* n : {"nx", "ny", "nz"}) buf += std::string("property ") + real + " " + n + "\n";
    }
    if (opt.generated) buf += "property uchar generated\n";
    buf += "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.points[i];
      if (opt.binary) {
        for (int d = 0; d < 3; ++d) detail::append_le<double>(buf, p[d]);
        if (normals) {
          for (int d = 0; d < 3; ++d) detail::append_le<double>(buf, (*cloud.normals)[i][d]);
        }
        if (opt.generated) detail::append_le<std::uint8_t>(buf, (*opt.generated)[i]);
      } else {
        buf += detail::format_real(p.x()) + ' ' + detail::format_real(p.y()) + ' ' + detail::format_real(p.z());
        if (normals) {
          const auto& n = (*cloud.normals)[i];
          buf += ' ' + detail::format_real(n.x()) + ' ' + detail::format_real(n.y()) + ' ' +
                 detail::format_real(n.z());
        }
        if (opt.generated) buf += ' ' + std::to_string(static_cast<int>((*opt.generated)[i]));
        buf += '\n';
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace terrafill::cloud
