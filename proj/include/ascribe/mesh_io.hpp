// Copyright 2026 The Ascribe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Wavefront OBJ (v, vn, f, o, g subset) and STL (binary + ASCII) codecs.

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <vector>

#include "ascribe/core/mesh.hpp"
#include "ascribe/error.hpp"

namespace ascribe::mesh_io {

enum class MeshFormat { ObjText, StlBinary, StlAscii };

constexpr std::string_view to_string(MeshFormat f) {
  switch (f) {
    case MeshFormat::ObjText: return "obj";
    case MeshFormat::StlBinary: return "stl-binary";
    case MeshFormat::StlAscii: return "stl-ascii";
  }
  return "obj";
}

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline constexpr std::size_t kStlHeaderSize = 80;
inline constexpr std::size_t kStlPreambleSize = 84;
inline constexpr std::size_t kStlRecordSize = 50;

constexpr std::uint64_t stl_binary_size(std::uint64_t triangles) {
  return kStlPreambleSize + kStlRecordSize * triangles;
}

struct ObjStats {
  /// Records that were recognised but dropped (vt, mtllib, usemtl, s, ...).
  std::size_t ignored_records = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline std::uint32_t read_le32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

inline void write_le32(Bytes& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline void write_le16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline float read_lef32(const std::uint8_t* p) { return std::bit_cast<float>(read_le32(p)); }

inline void write_lef32(Bytes& out, float f) { write_le32(out, std::bit_cast<std::uint32_t>(f)); }

inline bool is_text_byte(std::uint8_t c) { return (c >= 0x20 && c < 0x7f) || (c >= 0x09 && c <= 0x0d); }

inline bool looks_like_ascii_stl(ByteView bytes) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos || text.substr(first, 5) != "solid") return false;
  if (text.find("facet") == std::string_view::npos) return false;
  for (auto c : bytes) {
    if (!is_text_byte(c)) return false;
  }
  return true;
}

inline bool has_obj_vertex_line(ByteView bytes) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    auto lead = line.find_first_not_of(" \t");
    if (lead != std::string_view::npos && line.size() >= lead + 2 && line[lead] == 'v' &&
        (line[lead + 1] == ' ' || line[lead + 1] == '\t')) {
      return true;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return false;
}

/// Welds corners by exact bit pattern of their single-precision coordinates.
class CornerWelder {
 public:
  std::uint32_t add(float x, float y, float z, Mesh& mesh) {
    const Key key{std::bit_cast<std::uint32_t>(x), std::bit_cast<std::uint32_t>(y),
                  std::bit_cast<std::uint32_t>(z)};
    auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) mesh.vertices.emplace_back(double{x}, double{y}, double{z});
    return it->second;
  }

 private:
  using Key = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;
  std::map<Key, std::uint32_t> index_;
};

inline void append_float(std::string& out, float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline Vec3 face_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = cross(b - a, c - a);
  const double len = norm(n);
  return len > 0.0 ? n / len : Vec3{};
}

inline std::string stl_part_name(const Mesh& mesh) {
  return mesh.parts.size() == 1 ? mesh.parts.front().name : std::string("default");
}

}  // namespace detail

/// Classifies a byte stream. Binary STL wins whenever the size matches the
/// triangle count at offset 80 and the content is not ASCII STL text.
inline MeshFormat detect_format(ByteView bytes) {
  if (bytes.size() < 6) throw Error(ErrorCode::UnknownFormat, "fewer than 6 bytes");
  const bool ascii_stl = detail::looks_like_ascii_stl(bytes);
  if (bytes.size() >= kStlPreambleSize && !ascii_stl) {
    const std::uint64_t n = detail::read_le32(bytes.data() + kStlHeaderSize);
    if (bytes.size() == stl_binary_size(n)) return MeshFormat::StlBinary;
  }
  if (ascii_stl) return MeshFormat::StlAscii;
  if (detail::has_obj_vertex_line(bytes)) return MeshFormat::ObjText;
  throw Error(ErrorCode::UnknownFormat, "no OBJ or STL signature");
}

inline MeshFormat detect_format(std::string_view text) {
  return detect_format(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// Parses the OBJ subset. Faces with more than three corners are fanned about
/// their first corner; each `o`/`g` line starts a new part.
inline Mesh parse_obj(std::string_view text, ObjStats* stats = nullptr) {
  Mesh mesh;
  std::vector<Vec3> normal_records;
  std::vector<std::int64_t> vertex_normal;  // per vertex, index into normal_records
  bool any_normals = false;
  std::string part_name = "default";
  std::size_t part_start = 0;
  ObjStats local;

  auto close_part = [&] {
    if (mesh.triangles.size() > part_start) {
      mesh.parts.push_back({part_name, part_start, mesh.triangles.size()});
    }
    part_start = mesh.triangles.size();
  };

  auto resolve = [](std::string_view tok, std::size_t count, std::size_t line) -> std::uint32_t {
    std::int64_t idx = 0;
    if (!detail::parse_number(tok, idx)) {
      throw Error(ErrorCode::SyntaxError, "bad index '" + std::string(tok) + "'", line);
    }
    const auto n = static_cast<std::int64_t>(count);
    const std::int64_t zero_based = idx > 0 ? idx - 1 : n + idx;
    if (idx == 0 || zero_based < 0 || zero_based >= n) {
      throw Error(ErrorCode::IndexError,
                  "index " + std::to_string(idx) + " with " + std::to_string(count) + " defined",
                  line);
    }
    return static_cast<std::uint32_t>(zero_based);
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') {
      if (nl == text.size()) break;
      continue;
    }
    const auto tokens = detail::split_ws(line);
    const std::string_view key = tokens.front();

    if (key == "v" || key == "vn") {
      if (tokens.size() < 4) throw Error(ErrorCode::SyntaxError, "expected 3 coordinates", line_no);
      double c[3];
      for (int k = 0; k < 3; ++k) {
        if (!detail::parse_number(tokens[k + 1], c[k]) || !std::isfinite(c[k])) {
          throw Error(ErrorCode::SyntaxError, "bad number '" + std::string(tokens[k + 1]) + "'",
                      line_no);
        }
      }
      if (key == "v") {
        mesh.vertices.emplace_back(c[0], c[1], c[2]);
        vertex_normal.push_back(-1);
      } else {
        normal_records.emplace_back(c[0], c[1], c[2]);
      }
    } else if (key == "f") {
      if (tokens.size() < 4) throw Error(ErrorCode::SyntaxError, "face needs 3 corners", line_no);
      std::vector<std::uint32_t> corners;
      corners.reserve(tokens.size() - 1);
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        const std::string_view ref = tokens[k];
        const auto slash = ref.find('/');
        const auto v = resolve(ref.substr(0, slash), mesh.vertices.size(), line_no);
        if (slash != std::string_view::npos) {
          const auto slash2 = ref.find('/', slash + 1);
          if (slash2 != std::string_view::npos && slash2 + 1 < ref.size()) {
            const auto n = resolve(ref.substr(slash2 + 1), normal_records.size(), line_no);
            vertex_normal[v] = n;
            any_normals = true;
          }
        }
        corners.push_back(v);
      }
      for (std::size_t k = 1; k + 1 < corners.size(); ++k) {
        mesh.triangles.push_back({corners[0], corners[k], corners[k + 1]});
      }
    } else if (key == "o" || key == "g") {
      close_part();
      const auto name = detail::trim(line.substr(1));
      part_name = name.empty() ? std::string("default") : std::string(name);
    } else {
      ++local.ignored_records;
    }
    if (nl == text.size()) break;
  }
  close_part();

  if (any_normals) {
    mesh.normals.assign(mesh.vertices.size(), Vec3{});
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      if (vertex_normal[v] >= 0) mesh.normals[v] = normal_records[vertex_normal[v]];
    }
  }
  if (stats) *stats = local;
  return mesh;
}

inline std::string write_obj(const Mesh& mesh) {
  std::string out = "# ascribe mesh export\n";
  for (const auto& v : mesh.vertices) {
    out += "v ";
    detail::append_double(out, v.x);
    out += ' ';
    detail::append_double(out, v.y);
    out += ' ';
    detail::append_double(out, v.z);
    out += '\n';
  }
  for (const auto& n : mesh.normals) {
    out += "vn ";
    detail::append_double(out, n.x);
    out += ' ';
    detail::append_double(out, n.y);
    out += ' ';
    detail::append_double(out, n.z);
    out += '\n';
  }
  const bool normals = !mesh.normals.empty();
  for (const auto& part : mesh.parts) {
    out += "o " + part.name + '\n';
    for (std::size_t t = part.start; t < part.end; ++t) {
      out += 'f';
      for (auto idx : mesh.triangles[t]) {
        const auto one_based = std::to_string(idx + 1);
        out += ' ';
        out += one_based;
        if (normals) out += "//" + one_based;
      }
      out += '\n';
    }
  }
  return out;
}

namespace detail {

inline Mesh parse_stl_binary(ByteView bytes) {
  if (bytes.size() < kStlPreambleSize) {
    throw Error(ErrorCode::TruncatedFile,
                "binary STL shorter than 84 bytes (" + std::to_string(bytes.size()) + ")");
  }
  const std::uint64_t n = read_le32(bytes.data() + kStlHeaderSize);
  if (bytes.size() != stl_binary_size(n)) {
    throw Error(ErrorCode::TruncatedFile, "expected " + std::to_string(stl_binary_size(n)) +
                                              " bytes for " + std::to_string(n) +
                                              " triangles, got " + std::to_string(bytes.size()));
  }

  std::string header(reinterpret_cast<const char*>(bytes.data()), kStlHeaderSize);
  header = std::string(header.c_str());  // stop at the first NUL
  std::string_view name = trim(header);
  if (name.starts_with("solid")) name = trim(name.substr(5));
  bool printable = true;
  for (char c : name) printable = printable && is_text_byte(static_cast<std::uint8_t>(c));

  Mesh mesh;
  CornerWelder welder;
  mesh.triangles.reserve(n);
  const std::uint8_t* rec = bytes.data() + kStlPreambleSize;
  for (std::uint64_t t = 0; t < n; ++t, rec += kStlRecordSize) {
    Triangle tri{};
    for (int k = 0; k < 3; ++k) {
      const std::uint8_t* p = rec + 12 + 12 * k;
      const float x = read_lef32(p), y = read_lef32(p + 4), z = read_lef32(p + 8);
      if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
        throw Error(ErrorCode::SyntaxError, "non-finite coordinate in triangle " + std::to_string(t));
      }
      tri[k] = welder.add(x, y, z, mesh);
    }
    mesh.triangles.push_back(tri);
  }
  assign_single_part(mesh, name.empty() || !printable ? std::string("default") : std::string(name));
  return mesh;
}

inline Mesh parse_stl_ascii(std::string_view text) {
  enum class State { ExpectSolid, InSolid, ExpectLoop, InLoop, ExpectEndFacet };
  Mesh mesh;
  CornerWelder welder;
  State state = State::ExpectSolid;
  std::string part_name;
  std::size_t part_start = 0;
  Triangle tri{};
  int corner = 0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto tokens = split_ws(line);
    const std::string_view key = tokens.front();
    auto fail = [&](const std::string& what) { throw Error(ErrorCode::SyntaxError, what, line_no); };

    switch (state) {
      case State::ExpectSolid: {
        if (key != "solid") fail("expected 'solid'");
        const auto name = trim(line.substr(5));
        part_name = name.empty() ? std::string("default") : std::string(name);
        part_start = mesh.triangles.size();
        state = State::InSolid;
        break;
      }
      case State::InSolid:
        if (key == "endsolid") {
          if (mesh.triangles.size() > part_start) {
            mesh.parts.push_back({part_name, part_start, mesh.triangles.size()});
          }
          state = State::ExpectSolid;
        } else if (key == "facet") {
          if (tokens.size() != 5 || tokens[1] != "normal") fail("expected 'facet normal nx ny nz'");
          for (int k = 2; k < 5; ++k) {
            float f = 0;
            if (!parse_number(tokens[k], f)) fail("bad normal component");
          }
          state = State::ExpectLoop;
        } else {
          fail("expected 'facet' or 'endsolid'");
        }
        break;
      case State::ExpectLoop:
        if (tokens.size() != 2 || key != "outer" || tokens[1] != "loop") fail("expected 'outer loop'");
        corner = 0;
        state = State::InLoop;
        break;
      case State::InLoop:
        if (key == "vertex") {
          if (tokens.size() != 4 || corner == 3) fail("bad vertex record");
          float c[3];
          for (int k = 0; k < 3; ++k) {
            if (!parse_number(tokens[k + 1], c[k]) || !std::isfinite(c[k])) fail("bad coordinate");
          }
          tri[corner++] = welder.add(c[0], c[1], c[2], mesh);
        } else if (key == "endloop") {
          if (corner != 3) fail("facet needs exactly 3 vertices");
          mesh.triangles.push_back(tri);
          state = State::ExpectEndFacet;
        } else {
          fail("expected 'vertex' or 'endloop'");
        }
        break;
      case State::ExpectEndFacet:
        if (key != "endfacet") fail("expected 'endfacet'");
        state = State::InSolid;
        break;
    }
  }
  if (state != State::ExpectSolid) {
    throw Error(ErrorCode::SyntaxError, "unexpected end of file", line_no);
  }
  return mesh;
}

}  // namespace detail

/// Binary or ASCII STL. Corners are welded by exact bit equality.
inline Mesh parse_stl(ByteView bytes) {
  if (detail::looks_like_ascii_stl(bytes)) {
    return detail::parse_stl_ascii(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  return detail::parse_stl_binary(bytes);
}

inline Bytes write_stl(const Mesh& mesh, MeshFormat format = MeshFormat::StlBinary) {
  Bytes out;
  if (format == MeshFormat::StlBinary) {
    out.reserve(stl_binary_size(mesh.triangles.size()));
    std::string name = detail::stl_part_name(mesh);
    name.resize(kStlHeaderSize, '\0');
    out.insert(out.end(), name.begin(), name.end());
    detail::write_le32(out, static_cast<std::uint32_t>(mesh.triangles.size()));
    for (const auto& tri : mesh.triangles) {
      const Vec3& a = mesh.vertices[tri[0]];
      const Vec3& b = mesh.vertices[tri[1]];
      const Vec3& c = mesh.vertices[tri[2]];
      for (const Vec3& v : {detail::face_normal(a, b, c), a, b, c}) {
        detail::write_lef32(out, static_cast<float>(v.x));
        detail::write_lef32(out, static_cast<float>(v.y));
        detail::write_lef32(out, static_cast<float>(v.z));
      }
      detail::write_le16(out, 0);
    }
    return out;
  }
  if (format != MeshFormat::StlAscii) {
    throw Error(ErrorCode::UnknownFormat, "write_stl needs an STL format");
  }
  const std::string name = detail::stl_part_name(mesh);
  std::string text = "solid " + name + '\n';
  auto put = [&](const char* prefix, const Vec3& v) {
    text += prefix;
    detail::append_float(text, static_cast<float>(v.x));
    text += ' ';
    detail::append_float(text, static_cast<float>(v.y));
    text += ' ';
    detail::append_float(text, static_cast<float>(v.z));
    text += '\n';
  };
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    put("  facet normal ", detail::face_normal(a, b, c));
    text += "    outer loop\n";
    put("      vertex ", a);
    put("      vertex ", b);
    put("      vertex ", c);
    text += "    endloop\n  endfacet\n";
  }
  text += "endsolid " + name + '\n';
  return Bytes(text.begin(), text.end());
}

/// Detects the format and parses accordingly.
inline Mesh parse_mesh(ByteView bytes, ObjStats* stats = nullptr) {
  switch (detect_format(bytes)) {
    case MeshFormat::ObjText:
      return parse_obj(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                       stats);
    case MeshFormat::StlBinary:
    case MeshFormat::StlAscii:
      return parse_stl(bytes);
  }
  throw Error(ErrorCode::UnknownFormat, "");
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Parses a file by extension: .obj as OBJ, .stl as STL, otherwise sniffed.
inline Mesh load_mesh(const std::filesystem::path& path, ObjStats* stats = nullptr) {
  const Bytes bytes = read_file(path);
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".obj") {
    return parse_obj(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                     stats);
  }
  if (ext == ".stl") return parse_stl(bytes);
  return parse_mesh(bytes, stats);
}

}  // namespace ascribe::mesh_io
