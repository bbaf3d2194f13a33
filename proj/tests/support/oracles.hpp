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

// Independent reference implementations and fixtures for the test suites.
// Nothing here calls the library routine it is used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "ascribe/core/mesh.hpp"
#include "ascribe/png_io.hpp"
#include "ascribe/quantify.hpp"
#include "ascribe/segmentation.hpp"
#include "ascribe/volume.hpp"

namespace oracle {

using ascribe::Mesh;
using ascribe::Vec3;
using ascribe::Volume;

// ---- meshes ----------------------------------------------------------------

/// Random mesh with float-representable coordinates, optionally split into
/// several named parts.
inline Mesh random_mesh(std::mt19937_64& rng, std::size_t max_triangles, std::size_t max_parts = 1) {
  std::uniform_int_distribution<std::size_t> tri_count(1, max_triangles);
  std::uniform_real_distribution<float> coord(-100.0f, 100.0f);
  Mesh m;
  const std::size_t nt = tri_count(rng);
  const std::size_t nv = std::max<std::size_t>(3, nt / 2 + 3);
  for (std::size_t i = 0; i < nv; ++i) m.vertices.push_back({coord(rng), coord(rng), coord(rng)});
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(nv - 1));
  for (std::size_t t = 0; t < nt; ++t) {
    std::uint32_t a = pick(rng), b = pick(rng), c = pick(rng);
    while (b == a) b = pick(rng);
    while (c == a || c == b) c = pick(rng);
    m.triangles.push_back({a, b, c});
  }
  std::uniform_int_distribution<std::size_t> part_count(1, std::min(max_parts, nt));
  const std::size_t np = part_count(rng);
  std::vector<std::size_t> cuts{0, nt};
  while (cuts.size() < np + 1) {
    std::uniform_int_distribution<std::size_t> cut(1, nt - 1);
    const auto c = cut(rng);
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    m.parts.push_back({"part" + std::to_string(p), cuts[p], cuts[p + 1]});
  }
  return m;
}

using TriangleKey = std::array<std::array<double, 3>, 3>;

/// Triangles as corner positions, in corner order, sorted.
inline std::vector<TriangleKey> triangle_multiset(const Mesh& m) {
  std::vector<TriangleKey> out;
  out.reserve(m.triangles.size());
  for (const auto& t : m.triangles) {
    TriangleKey k{};
    for (int c = 0; c < 3; ++c) {
      const Vec3& v = m.vertices.at(t[c]);
      k[c] = {v.x, v.y, v.z};
    }
    out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline bool indices_in_range(const Mesh& m) {
  for (const auto& t : m.triangles) {
    for (auto i : t) {
      if (i >= m.vertices.size()) return false;
    }
  }
  return true;
}

/// Unit cube as 8 vertices and 12 outward triangles.
inline Mesh unit_cube(double size = 1.0) {
  Mesh m;
  for (int i = 0; i < 8; ++i) m.vertices.push_back({size * (i & 1), size * ((i >> 1) & 1), size * ((i >> 2) & 1)});
  const std::array<std::array<std::uint32_t, 4>, 6> quads{{{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                                           {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  m.parts.push_back({"cube", 0, 12});
  return m;
}

/// Regular tetrahedron with unit circumradius around `center`, outward winding.
inline Mesh tetrahedron(const Vec3& center = {}) {
  Mesh m;
  const double s = 1.0 / std::sqrt(3.0);
  m.vertices = {center + Vec3{s, s, s}, center + Vec3{s, -s, -s}, center + Vec3{-s, s, -s},
                center + Vec3{-s, -s, s}};
  m.triangles = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  m.parts.push_back({"tetra", 0, 4});
  return m;
}

/// Icosahedron refined `level` times by edge midpoints pushed to the unit
/// sphere.
inline Mesh icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  auto unit = [](Vec3 p) {
    const double n = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    return Vec3{p.x / n, p.y / n, p.z / n};
  };
  for (auto& p : v) p = unit(p);
  std::vector<std::array<std::uint32_t, 3>> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                              {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                              {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                              {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back(unit(v[a] + v[b]));
      const auto id = static_cast<std::uint32_t>(v.size() - 1);
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    for (const auto& [a, b, c] : f) {
      const auto ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
      next.insert(next.end(), {{a, ab, ca}, {b, bc, ab}, {c, ca, bc}, {ab, bc, ca}});
    }
    f = std::move(next);
  }
  Mesh m;
  m.vertices = v;
  for (const auto& t : f) m.triangles.push_back({t[0], t[1], t[2]});
  m.parts.push_back({"icosphere", 0, m.triangles.size()});
  return m;
}

/// Area and divergence-theorem volume summed triangle by triangle.
inline std::pair<double, double> area_and_volume(const Mesh& m) {
  double area = 0.0, volume = 0.0;
  for (const auto& t : m.triangles) {
    const Vec3 &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]];
    const Vec3 u = b - a, w = c - a;
    const Vec3 n{u.y * w.z - u.z * w.y, u.z * w.x - u.x * w.z, u.x * w.y - u.y * w.x};
    area += 0.5 * std::sqrt(n.x * n.x + n.y * n.y + n.z * n.z);
    volume += (a.x * (b.y * c.z - b.z * c.y) - a.y * (b.x * c.z - b.z * c.x) + a.z * (b.x * c.y - b.y * c.x)) / 6.0;
  }
  return {area, volume};
}

/// Brute-force V - E + F with vertices identified by index.
inline long euler_characteristic(const Mesh& m) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::vector<std::uint32_t> used;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      edges.push_back(std::minmax(t[k], t[(k + 1) % 3]));
      used.push_back(t[k]);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  return static_cast<long>(used.size()) - static_cast<long>(edges.size()) + static_cast<long>(m.triangles.size());
}

/// Every directed edge appears once and its reverse once.
inline bool closed_and_oriented(const Mesh& m) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
  }
  for (const auto& [e, n] : directed) {
    if (n != 1) return false;
    auto rev = directed.find({e.second, e.first});
    if (rev == directed.end() || rev->second != 1) return false;
  }
  return !m.triangles.empty();
}

// ---- volumes ---------------------------------------------------------------

inline Volume random_volume(std::mt19937_64& rng, std::uint32_t n) {
  Volume v(ascribe::Dims{n, n, n});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& x : v.data) x = u(rng);
  return v;
}

/// 1 where the voxel center lies within `radius` of `center`, else 0.
inline Volume ball(std::uint32_t n, double radius, Vec3 center) {
  Volume v(ascribe::Dims{n, n, n});
  std::size_t i = 0;
  for (std::uint32_t z = 0; z < n; ++z)
    for (std::uint32_t y = 0; y < n; ++y)
      for (std::uint32_t x = 0; x < n; ++x, ++i) {
        const double dx = x + 0.5 - center.x, dy = y + 0.5 - center.y, dz = z + 0.5 - center.z;
        v.data[i] = dx * dx + dy * dy + dz * dz <= radius * radius ? 1.0 : 0.0;
      }
  return v;
}

inline std::size_t count_ones(const Volume& v) {
  return static_cast<std::size_t>(std::count(v.data.begin(), v.data.end(), 1.0));
}

/// Sum of absolute differences over all axis-aligned neighbour pairs.
inline double total_variation(const Volume& v) {
  const auto [nx, ny, nz] = v.dims;
  auto at = [&](std::uint32_t x, std::uint32_t y, std::uint32_t z) { return v.data[x + nx * (y + ny * std::size_t{z})]; };
  double tv = 0.0;
  for (std::uint32_t z = 0; z < nz; ++z)
    for (std::uint32_t y = 0; y < ny; ++y)
      for (std::uint32_t x = 0; x < nx; ++x) {
        const double u = at(x, y, z);
        if (x + 1 < nx) tv += std::abs(at(x + 1, y, z) - u);
        if (y + 1 < ny) tv += std::abs(at(x, y + 1, z) - u);
        if (z + 1 < nz) tv += std::abs(at(x, y, z + 1) - u);
      }
  return tv;
}

/// One explicit heat-equation step, u += lambda * sum(u_n - u), over the
/// in-grid 6-neighbours (insulated boundary).
inline Volume heat_step(const Volume& v, double lambda) {
  const auto [nx, ny, nz] = v.dims;
  Volume out = v;
  auto idx = [&](long x, long y, long z) { return static_cast<std::size_t>(x + nx * (y + long{ny} * z)); };
  for (long z = 0; z < nz; ++z)
    for (long y = 0; y < ny; ++y)
      for (long x = 0; x < nx; ++x) {
        const double u = v.data[idx(x, y, z)];
        double lap = 0.0;
        const long d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        for (const auto& o : d) {
          const long a = x + o[0], b = y + o[1], c = z + o[2];
          if (a < 0 || b < 0 || c < 0 || a >= long{nx} || b >= long{ny} || c >= long{nz}) continue;
          lap += v.data[idx(a, b, c)] - u;
        }
        out.data[idx(x, y, z)] = u + lambda * lap;
      }
  return out;
}

/// Labels from a flood fill with an explicit queue, scan-order numbering.
inline std::vector<std::uint32_t> flood_labels(const std::vector<std::uint8_t>& bits, std::uint32_t nx,
                                               std::uint32_t ny, std::uint32_t nz, std::uint32_t& count) {
  std::vector<std::uint32_t> labels(bits.size(), 0);
  count = 0;
  for (std::size_t seed = 0; seed < bits.size(); ++seed) {
    if (!bits[seed] || labels[seed]) continue;
    ++count;
    std::vector<std::size_t> queue{seed};
    labels[seed] = count;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t i = queue[head];
      const long x = static_cast<long>(i % nx), y = static_cast<long>((i / nx) % ny), z = static_cast<long>(i / (std::size_t{nx} * ny));
      const long d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
      for (const auto& o : d) {
        const long a = x + o[0], b = y + o[1], c = z + o[2];
        if (a < 0 || b < 0 || c < 0 || a >= long{nx} || b >= long{ny} || c >= long{nz}) continue;
        const std::size_t j = static_cast<std::size_t>(a + nx * (b + long{ny} * c));
        if (bits[j] && !labels[j]) {
          labels[j] = count;
          queue.push_back(j);
        }
      }
    }
  }
  return labels;
}

/// Per-voxel loop over one label: integer sums first, then the same
/// formulas as a textbook would write them.
inline ascribe::VoiReport brute_force_voi(const std::vector<std::uint32_t>& labels, const Volume& v,
                                          std::uint32_t label) {
  const auto [nx, ny, nz] = v.dims;
  ascribe::VoiReport r;
  r.label = label;
  std::vector<double> samples;
  double sx = 0, sy = 0, sz = 0;
  std::array<std::uint32_t, 3> lo{nx, ny, nz}, hi{0, 0, 0};
  for (std::uint32_t z = 0; z < nz; ++z)
    for (std::uint32_t y = 0; y < ny; ++y)
      for (std::uint32_t x = 0; x < nx; ++x) {
        const std::size_t i = x + nx * (y + std::size_t{ny} * z);
        if (labels[i] != label) continue;
        samples.push_back(v.data[i]);
        sx += x + 0.5;
        sy += y + 0.5;
        sz += z + 0.5;
        lo = {std::min(lo[0], x), std::min(lo[1], y), std::min(lo[2], z)};
        hi = {std::max(hi[0], x + 1), std::max(hi[1], y + 1), std::max(hi[2], z + 1)};
      }
  const double n = static_cast<double>(samples.size());
  const auto& s = v.spacing;
  r.voxel_count = samples.size();
  r.physical_volume = n * s[0] * s[1] * s[2];
  r.centroid = {sx / n * s[0], sy / n * s[1], sz / n * s[2]};
  r.bbox_min = {lo[0] * s[0], lo[1] * s[1], lo[2] * s[2]};
  r.bbox_max = {hi[0] * s[0], hi[1] * s[1], hi[2] * s[2]};
  double mean = 0;
  for (double x : samples) mean += x;
  mean /= n;
  double var = 0;
  for (double x : samples) var += (x - mean) * (x - mean);
  r.mean_intensity = mean;
  r.stddev_intensity = std::sqrt(var / n);
  return r;
}

/// Writes `v` as 8-bit grayscale PNG slices slice_000.png, ...
inline void write_stack(const Volume& v, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto [nx, ny, nz] = v.dims;
  for (std::uint32_t z = 0; z < nz; ++z) {
    ascribe::Raster r{nx, ny, 8, std::vector<std::uint16_t>(std::size_t{nx} * ny)};
    for (std::size_t i = 0; i < r.pixels.size(); ++i) {
      r.pixels[i] = static_cast<std::uint16_t>(std::lround(v.data[z * std::size_t{nx} * ny + i] * 255.0));
    }
    char name[32];
    std::snprintf(name, sizeof name, "slice_%03u.png", z);
    ascribe::write_png(dir / name, r);
  }
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("ascribe_" + tag + "_" + std::to_string(rng()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
