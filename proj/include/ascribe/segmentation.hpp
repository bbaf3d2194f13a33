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

// Classical Volume-of-Interest extraction: thresholding, 6-connected labeling,
// marching-cubes isosurfacing and uniform Laplacian smoothing.

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ascribe/core/mesh.hpp"
#include "ascribe/detail/mc_tables.hpp"
#include "ascribe/error.hpp"
#include "ascribe/volume.hpp"

namespace ascribe {

/// Binary voxel mask, same layout as Volume.
struct Mask {
  Dims dims;
  std::vector<std::uint8_t> bits;

  std::size_t count_set() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  }
  friend bool operator==(const Mask&, const Mask&) = default;
};

/// Labels are dense in [0, component_count]; 0 is background.
struct LabelMask {
  Dims dims;
  std::vector<std::uint32_t> labels;
  std::uint32_t component_count = 0;

  friend bool operator==(const LabelMask&, const LabelMask&) = default;
};

/// True where lo <= sample <= hi.
inline Mask threshold(const Volume& v, double lo, double hi) {
  if (!(lo >= 0.0 && lo <= hi && hi <= 1.0)) {
    throw Error(ErrorCode::ParameterOutOfRange, "need 0 <= lo <= hi <= 1");
  }
  Mask m{v.dims, std::vector<std::uint8_t>(v.data.size())};
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    m.bits[i] = (v.data[i] >= lo && v.data[i] <= hi) ? 1 : 0;
  }
  return m;
}

/// 6-connected components, labeled in first-encounter order of an x-fastest
/// scan.
inline LabelMask connected_components(const Mask& mask) {
  const auto [nx, ny, nz] = mask.dims;
  LabelMask out{mask.dims, std::vector<std::uint32_t>(mask.bits.size(), 0), 0};
  const std::size_t sy = nx, sz = std::size_t{nx} * ny;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < mask.bits.size(); ++seed) {
    if (!mask.bits[seed] || out.labels[seed] != 0) continue;
    const std::uint32_t label = ++out.component_count;
    out.labels[seed] = label;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const std::size_t x = i % nx, y = (i / sy) % ny, z = i / sz;
      auto visit = [&](std::size_t j) {
        if (mask.bits[j] && out.labels[j] == 0) {
          out.labels[j] = label;
          stack.push_back(j);
        }
      };
      if (x > 0) visit(i - 1);
      if (x + 1 < nx) visit(i + 1);
      if (y > 0) visit(i - sy);
      if (y + 1 < ny) visit(i + sy);
      if (z > 0) visit(i - sz);
      if (z + 1 < nz) visit(i + sz);
    }
  }
  return out;
}

/// 0/1 volume of a mask, ready for meshing at iso 0.5.
inline Volume mask_to_volume(const Mask& m, Spacing spacing = {1.0, 1.0, 1.0}) {
  Volume v(m.dims, spacing);
  for (std::size_t i = 0; i < m.bits.size(); ++i) v.data[i] = m.bits[i] ? 1.0 : 0.0;
  return v;
}

inline Mask label_mask(const LabelMask& labels, std::uint32_t label) {
  Mask m{labels.dims, std::vector<std::uint8_t>(labels.labels.size())};
  for (std::size_t i = 0; i < labels.labels.size(); ++i) m.bits[i] = labels.labels[i] == label;
  return m;
}

/// Isosurface of `v` at `iso`. Sample (i,j,k) sits at the voxel center
/// ((i+0.5)*sx, (j+0.5)*sy, (k+0.5)*sz). Vertices on a shared grid edge are
/// welded, and triangles wind counter-clockwise seen from the low-valued side,
/// so closed surfaces around high values face outward.
inline Mesh marching_cubes(const Volume& v, double iso) {
  const auto [nx, ny, nz] = v.dims;
  if (nx < 2 || ny < 2 || nz < 2) {
    throw Error(ErrorCode::DegenerateVolume, "every dimension must be >= 2");
  }
  if (!(iso > 0.0 && iso < 1.0)) throw Error(ErrorCode::ParameterOutOfRange, "iso must lie in (0,1)");

  Mesh mesh;
  std::unordered_map<std::uint64_t, std::uint32_t> welded;
  auto position = [&](double x, double y, double z) {
    return Vec3{(x + 0.5) * v.spacing[0], (y + 0.5) * v.spacing[1], (z + 0.5) * v.spacing[2]};
  };

  // Vertex on the grid edge leaving sample `base` along `axis`.
  auto edge_vertex = [&](std::array<std::uint32_t, 3> base, int axis) -> std::uint32_t {
    const std::uint64_t key = 3 * static_cast<std::uint64_t>(v.index(base[0], base[1], base[2])) +
                              static_cast<std::uint64_t>(axis);
    auto [it, inserted] = welded.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) {
      auto tip = base;
      ++tip[axis];
      const double a = v.at(base[0], base[1], base[2]);
      const double b = v.at(tip[0], tip[1], tip[2]);
      const double t = (iso - a) / (b - a);
      std::array<double, 3> p{double(base[0]), double(base[1]), double(base[2])};
      p[axis] += t;
      mesh.vertices.push_back(position(p[0], p[1], p[2]));
    }
    return it->second;
  };

  for (std::uint32_t z = 0; z + 1 < nz; ++z) {
    for (std::uint32_t y = 0; y + 1 < ny; ++y) {
      for (std::uint32_t x = 0; x + 1 < nx; ++x) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          const auto& o = detail::kCornerOffset[c];
          if (v.at(x + o[0], y + o[1], z + o[2]) < iso) cube |= 1 << c;
        }
        const auto edges = detail::kEdgeTable[cube];
        if (edges == 0) continue;

        std::array<std::uint32_t, 12> local{};
        for (int e = 0; e < 12; ++e) {
          if (!(edges & (1 << e))) continue;
          const auto& c0 = detail::kCornerOffset[detail::kEdgeCorners[e][0]];
          const auto& c1 = detail::kCornerOffset[detail::kEdgeCorners[e][1]];
          std::array<std::uint32_t, 3> base{x + std::min(c0[0], c1[0]), y + std::min(c0[1], c1[1]),
                                            z + std::min(c0[2], c1[2])};
          const int axis = c0[0] != c1[0] ? 0 : (c0[1] != c1[1] ? 1 : 2);
          local[e] = edge_vertex(base, axis);
        }
        const auto& tris = detail::kTriTable[cube];
        for (int k = 0; tris[k] != -1; k += 3) {
          mesh.triangles.push_back({local[tris[k]], local[tris[k + 1]], local[tris[k + 2]]});
        }
      }
    }
  }
  assign_single_part(mesh, "isosurface");
  return mesh;
}

/// Sorted unique 1-ring neighbours and a per-vertex "held fixed" flag
/// (isolated vertices and vertices on edges bordering exactly one triangle).
struct VertexRings {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> neighbors;
  std::vector<std::uint8_t> pinned;
};

inline VertexRings vertex_rings(const Mesh& m) {
  const std::size_t nv = m.vertices.size();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(m.triangles.size() * 3);
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      auto a = t[k], b = t[(k + 1) % 3];
      if (a == b) continue;
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(edges.begin(), edges.end());

  VertexRings rings;
  rings.pinned.assign(nv, 0);
  std::vector<std::vector<std::uint32_t>> adj(nv);
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j] == edges[i]) ++j;
    const auto [a, b] = edges[i];
    adj[a].push_back(b);
    adj[b].push_back(a);
    if (j - i == 1) rings.pinned[a] = rings.pinned[b] = 1;
    i = j;
  }
  rings.offsets.resize(nv + 1, 0);
  for (std::size_t v = 0; v < nv; ++v) {
    std::sort(adj[v].begin(), adj[v].end());
    if (adj[v].empty()) rings.pinned[v] = 1;
    rings.offsets[v + 1] = rings.offsets[v] + adj[v].size();
  }
  rings.neighbors.reserve(rings.offsets.back());
  for (const auto& a : adj) rings.neighbors.insert(rings.neighbors.end(), a.begin(), a.end());
  return rings;
}

/// Synchronous uniform Laplacian relaxation: v += lambda * (mean(ring) - v).
/// Boundary and isolated vertices stay put; connectivity is untouched.
inline Mesh laplacian_smooth(const Mesh& m, std::uint32_t iterations, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::ParameterOutOfRange, "lambda must lie in (0, 1]");
  }
  Mesh out = m;
  if (iterations == 0 || m.vertices.empty()) return out;
  const VertexRings rings = vertex_rings(m);
  std::vector<Vec3> next = out.vertices;
  for (std::uint32_t it = 0; it < iterations; ++it) {
    for (std::size_t v = 0; v < out.vertices.size(); ++v) {
      if (rings.pinned[v]) {
        next[v] = out.vertices[v];
        continue;
      }
      Vec3 sum;
      for (std::size_t k = rings.offsets[v]; k < rings.offsets[v + 1]; ++k) {
        sum += out.vertices[rings.neighbors[k]];
      }
      const double n = static_cast<double>(rings.offsets[v + 1] - rings.offsets[v]);
      next[v] = out.vertices[v] + lambda * (sum / n - out.vertices[v]);
    }
    std::swap(out.vertices, next);
  }
  out.normals.clear();
  return out;
}

}  // namespace ascribe
