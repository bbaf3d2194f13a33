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

// Shape and intensity metrics over labeled VOIs and triangle meshes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ascribe/core/mesh.hpp"
#include "ascribe/error.hpp"
#include "ascribe/segmentation.hpp"
#include "ascribe/volume.hpp"

namespace ascribe {

struct VoiReport {
  std::uint32_t label = 0;
  std::uint64_t voxel_count = 0;
  double physical_volume = 0.0;
  Vec3 centroid;
  Vec3 bbox_min;
  Vec3 bbox_max;
  double mean_intensity = 0.0;
  double stddev_intensity = 0.0;

  friend bool operator==(const VoiReport&, const VoiReport&) = default;
};

struct MeshReport {
  double surface_area = 0.0;
  std::optional<double> enclosed_volume;  // only for watertight meshes
  bool watertight = false;
  std::uint64_t triangle_count = 0;
  std::uint64_t vertex_count = 0;

  friend bool operator==(const MeshReport&, const MeshReport&) = default;
};

namespace detail {

struct VoiAccumulator {
  std::uint64_t count = 0;
  std::array<std::uint64_t, 3> index_sum{};
  std::array<std::uint32_t, 3> lo{UINT32_MAX, UINT32_MAX, UINT32_MAX};
  std::array<std::uint32_t, 3> hi{};
  double intensity_sum = 0.0;

  void add(std::uint32_t x, std::uint32_t y, std::uint32_t z, double sample) {
    ++count;
    const std::array<std::uint32_t, 3> p{x, y, z};
    for (int a = 0; a < 3; ++a) {
      index_sum[a] += p[a];
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
    intensity_sum += sample;
  }
};

inline VoiReport finish(std::uint32_t label, const VoiAccumulator& acc, const Volume& v) {
  VoiReport r;
  r.label = label;
  r.voxel_count = acc.count;
  r.physical_volume = static_cast<double>(acc.count) * v.voxel_volume();
  const double n = static_cast<double>(acc.count);
  const auto& s = v.spacing;
  r.centroid = {(acc.index_sum[0] / n + 0.5) * s[0], (acc.index_sum[1] / n + 0.5) * s[1],
                (acc.index_sum[2] / n + 0.5) * s[2]};
  r.bbox_min = {acc.lo[0] * s[0], acc.lo[1] * s[1], acc.lo[2] * s[2]};
  r.bbox_max = {(acc.hi[0] + 1.0) * s[0], (acc.hi[1] + 1.0) * s[1], (acc.hi[2] + 1.0) * s[2]};
  r.mean_intensity = acc.intensity_sum / n;
  return r;
}

inline void check_dims(const LabelMask& labels, const Volume& v) {
  if (labels.dims != v.dims) throw Error(ErrorCode::DimensionMismatch, "label mask vs volume");
}

}  // namespace detail

/// Voxel count, physical volume, centroid of voxel centers, voxel-extent
/// bounding box and intensity mean / population deviation for one label.
inline VoiReport voi_report(const LabelMask& labels, const Volume& v, std::uint32_t label) {
  detail::check_dims(labels, v);
  if (label < 1 || label > labels.component_count) {
    throw Error(ErrorCode::UnknownLabel, "label " + std::to_string(label) + " of " +
                                             std::to_string(labels.component_count));
  }
  detail::VoiAccumulator acc;
  const auto [nx, ny, nz] = v.dims;
  std::size_t i = 0;
  for (std::uint32_t z = 0; z < nz; ++z)
    for (std::uint32_t y = 0; y < ny; ++y)
      for (std::uint32_t x = 0; x < nx; ++x, ++i)
        if (labels.labels[i] == label) acc.add(x, y, z, v.data[i]);
  if (acc.count == 0) throw Error(ErrorCode::UnknownLabel, "label " + std::to_string(label) + " is empty");
  VoiReport r = detail::finish(label, acc, v);
  double sq = 0.0;
  for (std::size_t j = 0; j < v.data.size(); ++j) {
    if (labels.labels[j] == label) sq += (v.data[j] - r.mean_intensity) * (v.data[j] - r.mean_intensity);
  }
  r.stddev_intensity = std::sqrt(sq / static_cast<double>(acc.count));
  return r;
}

/// Reports for labels 1..component_count in two passes over the grid.
inline std::vector<VoiReport> voi_reports(const LabelMask& labels, const Volume& v) {
  detail::check_dims(labels, v);
  std::vector<detail::VoiAccumulator> acc(labels.component_count + 1);
  const auto [nx, ny, nz] = v.dims;
  std::size_t i = 0;
  for (std::uint32_t z = 0; z < nz; ++z)
    for (std::uint32_t y = 0; y < ny; ++y)
      for (std::uint32_t x = 0; x < nx; ++x, ++i)
        if (const auto l = labels.labels[i]) acc[l].add(x, y, z, v.data[i]);

  std::vector<VoiReport> out;
  out.reserve(labels.component_count);
  for (std::uint32_t l = 1; l <= labels.component_count; ++l) out.push_back(detail::finish(l, acc[l], v));
  std::vector<double> sq(labels.component_count + 1, 0.0);
  for (std::size_t j = 0; j < v.data.size(); ++j) {
    if (const auto l = labels.labels[j]) {
      const double d = v.data[j] - out[l - 1].mean_intensity;
      sq[l] += d * d;
    }
  }
  for (auto& r : out) r.stddev_intensity = std::sqrt(sq[r.label] / static_cast<double>(r.voxel_count));
  return out;
}

/// True when every undirected edge borders exactly two triangles.
inline bool is_watertight(const Mesh& m) {
  if (m.triangles.empty()) return false;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(m.triangles.size() * 3);
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      const auto a = t[k], b = t[(k + 1) % 3];
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j] == edges[i]) ++j;
    if (j - i != 2) return false;
    i = j;
  }
  return true;
}

/// Surface area, and enclosed volume by the divergence theorem when closed.
/// The volume is the absolute signed volume, so inverted winding still
/// yields a positive number.
inline MeshReport mesh_report(const Mesh& m) {
  MeshReport r;
  r.triangle_count = m.triangles.size();
  r.vertex_count = m.vertices.size();
  double area = 0.0;
  double signed_volume = 0.0;
  for (const auto& t : m.triangles) {
    const Vec3& a = m.vertices[t[0]];
    const Vec3& b = m.vertices[t[1]];
    const Vec3& c = m.vertices[t[2]];
    area += 0.5 * norm(cross(b - a, c - a));
    signed_volume += dot(a, cross(b, c)) / 6.0;
  }
  r.surface_area = area;
  r.watertight = is_watertight(m);
  if (r.watertight) r.enclosed_volume = std::abs(signed_volume);
  return r;
}

/// Signed volume sum(a . (b x c)) / 6; positive for outward winding.
inline double signed_volume(const Mesh& m) {
  double s = 0.0;
  for (const auto& t : m.triangles) {
    s += dot(m.vertices[t[0]], cross(m.vertices[t[1]], m.vertices[t[2]])) / 6.0;
  }
  return s;
}

/// V - E + F over the welded index structure.
inline std::int64_t euler_characteristic(const Mesh& m) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      const auto a = t[k], b = t[(k + 1) % 3];
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::vector<std::uint8_t> used(m.vertices.size(), 0);
  for (const auto& t : m.triangles)
    for (auto i : t) used[i] = 1;
  const auto v = std::count(used.begin(), used.end(), std::uint8_t{1});
  return static_cast<std::int64_t>(v) - static_cast<std::int64_t>(edges.size()) +
         static_cast<std::int64_t>(m.triangles.size());
}

}  // namespace ascribe
