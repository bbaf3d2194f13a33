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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ascribe/core/geometry.hpp"
#include "ascribe/error.hpp"

namespace ascribe {

using Triangle = std::array<std::uint32_t, 3>;

/// Named run of triangles [start, end) inside the parent mesh.
struct MeshPart {
  std::string name;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  friend bool operator==(const MeshPart&, const MeshPart&) = default;
};

/// Indexed triangle mesh. `normals` is either empty or one per vertex.
/// `parts` is empty exactly when there are no triangles; otherwise the parts
/// tile the triangle list in order.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<Triangle> triangles;
  std::vector<MeshPart> parts;

  bool empty() const { return triangles.empty(); }
  friend bool operator==(const Mesh&, const Mesh&) = default;
};

/// Puts every triangle into one part called `name` (or none when empty).
inline void assign_single_part(Mesh& mesh, std::string name) {
  mesh.parts.clear();
  if (!mesh.triangles.empty()) mesh.parts.push_back({std::move(name), 0, mesh.triangles.size()});
}

/// Throws IndexError on out-of-range indices or a broken part tiling.
inline void validate(const Mesh& mesh) {
  const auto nv = mesh.vertices.size();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (auto idx : mesh.triangles[t]) {
      if (idx >= nv) {
        throw Error(ErrorCode::IndexError, "triangle " + std::to_string(t) + " references vertex " +
                                               std::to_string(idx) + " of " + std::to_string(nv));
      }
    }
  }
  if (!mesh.normals.empty() && mesh.normals.size() != nv) {
    throw Error(ErrorCode::IndexError, "normal count differs from vertex count");
  }
  std::size_t cursor = 0;
  for (const auto& part : mesh.parts) {
    if (part.start != cursor || part.end <= part.start) {
      throw Error(ErrorCode::IndexError, "part '" + part.name + "' does not tile the triangle list");
    }
    cursor = part.end;
  }
  if (cursor != mesh.triangles.size()) {
    throw Error(ErrorCode::IndexError, "parts do not cover every triangle");
  }
}

struct Bounds {
  Vec3 min;
  Vec3 max;

  Vec3 center() const { return 0.5 * (min + max); }
  double diagonal() const { return norm(max - min); }
};

/// Bounds of the vertex set; {0,0} for a mesh without vertices.
inline Bounds bounds(const Mesh& mesh) {
  if (mesh.vertices.empty()) return {};
  Bounds b{mesh.vertices.front(), mesh.vertices.front()};
  for (const auto& v : mesh.vertices) {
    b.min = component_min(b.min, v);
    b.max = component_max(b.max, v);
  }
  return b;
}

/// Copy of the triangles in `part` with vertices compacted to the ones used.
inline Mesh extract_part(const Mesh& mesh, std::size_t part_index) {
  const MeshPart& part = mesh.parts.at(part_index);
  Mesh out;
  std::vector<std::int64_t> remap(mesh.vertices.size(), -1);
  const bool has_normals = !mesh.normals.empty();
  for (std::size_t t = part.start; t < part.end; ++t) {
    Triangle tri{};
    for (int k = 0; k < 3; ++k) {
      const auto src = mesh.triangles[t][k];
      if (remap[src] < 0) {
        remap[src] = static_cast<std::int64_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[src]);
        if (has_normals) out.normals.push_back(mesh.normals[src]);
      }
      tri[k] = static_cast<std::uint32_t>(remap[src]);
    }
    out.triangles.push_back(tri);
  }
  assign_single_part(out, part.name);
  return out;
}

/// Applies `t` to every vertex; normals are rotated only.
inline Mesh transformed(const Mesh& mesh, const Transform& t) {
  Mesh out = mesh;
  for (auto& v : out.vertices) v = apply(t, v);
  for (auto& n : out.normals) n = t.rotation.rotate(n);
  return out;
}

}  // namespace ascribe
