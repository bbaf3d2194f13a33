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

// Batch Filter -> Segment -> Quantify -> export chain.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ascribe/error.hpp"
#include "ascribe/json.hpp"
#include "ascribe/mesh_io.hpp"
#include "ascribe/quantify.hpp"
#include "ascribe/segmentation.hpp"
#include "ascribe/volume.hpp"

namespace ascribe {

enum class ExportFormat { Stl, Obj };

struct PipelineParams {
  DiffusionParams diffusion{0, 0.1, 1.0 / 6.0};
  double threshold_lo = 0.5;
  double threshold_hi = 1.0;
  std::uint32_t smooth_iterations = 0;
  double smooth_lambda = 0.5;

  friend bool operator==(const PipelineParams&, const PipelineParams&) = default;
};

struct PipelineConfig {
  std::filesystem::path stack_dir;
  PipelineParams params;
  ExportFormat format = ExportFormat::Stl;
};

struct VoiResult {
  VoiReport voi;
  Mesh surface;
  MeshReport mesh;
};

struct PipelineResult {
  Dims dims;
  Spacing spacing{1.0, 1.0, 1.0};
  IntensityStats filtered_stats;
  std::uint32_t component_count = 0;
  std::vector<VoiResult> vois;
};

inline void to_json(json& j, const PipelineParams& p) {
  j = json{{"diffusion", {{"iterations", p.diffusion.iterations},
                          {"kappa", p.diffusion.kappa},
                          {"lambda", p.diffusion.lambda}}},
           {"threshold", {{"lo", p.threshold_lo}, {"hi", p.threshold_hi}}},
           {"smooth", {{"iterations", p.smooth_iterations}, {"lambda", p.smooth_lambda}}}};
}

/// Missing keys keep their defaults.
inline void from_json(const json& j, PipelineParams& p) {
  if (auto d = j.find("diffusion"); d != j.end()) {
    p.diffusion.iterations = d->value("iterations", p.diffusion.iterations);
    p.diffusion.kappa = d->value("kappa", p.diffusion.kappa);
    p.diffusion.lambda = d->value("lambda", p.diffusion.lambda);
  }
  if (auto t = j.find("threshold"); t != j.end()) {
    p.threshold_lo = t->value("lo", p.threshold_lo);
    p.threshold_hi = t->value("hi", p.threshold_hi);
  }
  if (auto s = j.find("smooth"); s != j.end()) {
    p.smooth_iterations = s->value("iterations", p.smooth_iterations);
    p.smooth_lambda = s->value("lambda", p.smooth_lambda);
  }
}

/// Reads the JSON config. A relative stack_dir resolves against the config
/// file's directory.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::RootNotFound, "config " + file.string());
  PipelineConfig cfg;
  try {
    const json j = json::parse(in);
    cfg.stack_dir = j.at("stack_dir").get<std::string>();
    cfg.params = j.get<PipelineParams>();
    if (auto e = j.find("export"); e != j.end()) {
      const auto fmt = e->value("format", std::string("stl"));
      if (fmt == "stl") cfg.format = ExportFormat::Stl;
      else if (fmt == "obj") cfg.format = ExportFormat::Obj;
      else throw Error(ErrorCode::ParameterOutOfRange, "export.format must be \"stl\" or \"obj\"");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SyntaxError, std::string("config: ") + e.what());
  }
  if (cfg.stack_dir.is_relative()) cfg.stack_dir = file.parent_path() / cfg.stack_dir;
  return cfg;
}

/// Integer voxel box [lo, hi) of one label.
struct VoxelBox {
  std::array<std::uint32_t, 3> lo{UINT32_MAX, UINT32_MAX, UINT32_MAX};
  std::array<std::uint32_t, 3> hi{0, 0, 0};
};

/// Boxes for labels 0..component_count in one pass (entry 0 unused).
inline std::vector<VoxelBox> label_boxes(const LabelMask& labels) {
  std::vector<VoxelBox> boxes(labels.component_count + 1);
  const auto [nx, ny, nz] = labels.dims;
  std::size_t i = 0;
  for (std::uint32_t z = 0; z < nz; ++z)
    for (std::uint32_t y = 0; y < ny; ++y)
      for (std::uint32_t x = 0; x < nx; ++x, ++i) {
        const auto l = labels.labels[i];
        if (l == 0) continue;
        auto& b = boxes[l];
        const std::array<std::uint32_t, 3> p{x, y, z};
        for (int a = 0; a < 3; ++a) {
          b.lo[a] = std::min(b.lo[a], p[a]);
          b.hi[a] = std::max(b.hi[a], p[a] + 1);
        }
      }
  return boxes;
}

/// Surface of one labeled component, meshed on its box padded by one
/// background voxel so components touching the grid border still close.
inline Mesh component_surface(const LabelMask& labels, std::uint32_t label, const VoxelBox& box,
                              const Spacing& spacing) {
  const auto& lo = box.lo;
  const auto& hi = box.hi;
  const Dims sub{hi[0] - lo[0] + 2, hi[1] - lo[1] + 2, hi[2] - lo[2] + 2};
  Volume crop(sub, spacing);
  for (std::uint32_t z = lo[2]; z < hi[2]; ++z)
    for (std::uint32_t y = lo[1]; y < hi[1]; ++y)
      for (std::uint32_t x = lo[0]; x < hi[0]; ++x) {
        const std::size_t i = x + std::size_t{labels.dims.nx} * (y + std::size_t{labels.dims.ny} * z);
        if (labels.labels[i] == label) crop.at(x - lo[0] + 1, y - lo[1] + 1, z - lo[2] + 1) = 1.0;
      }
  Mesh mesh = marching_cubes(crop, 0.5);
  const Vec3 shift{(double(lo[0]) - 1.0) * spacing[0], (double(lo[1]) - 1.0) * spacing[1],
                   (double(lo[2]) - 1.0) * spacing[2]};
  for (auto& v : mesh.vertices) v += shift;
  assign_single_part(mesh, "voi_" + std::to_string(label));
  return mesh;
}

inline PipelineResult run_pipeline(const Volume& input, const PipelineParams& p) {
  PipelineResult result;
  result.dims = input.dims;
  result.spacing = input.spacing;
  const Volume filtered = anisotropic_diffusion(input, p.diffusion);
  result.filtered_stats = intensity_stats(filtered, 16);
  const LabelMask labels = connected_components(threshold(filtered, p.threshold_lo, p.threshold_hi));
  result.component_count = labels.component_count;
  const auto boxes = label_boxes(labels);
  for (auto& voi : voi_reports(labels, filtered)) {
    Mesh surface = component_surface(labels, voi.label, boxes[voi.label], filtered.spacing);
    if (p.smooth_iterations > 0) surface = laplacian_smooth(surface, p.smooth_iterations, p.smooth_lambda);
    MeshReport report = mesh_report(surface);
    result.vois.push_back({std::move(voi), std::move(surface), report});
  }
  return result;
}

inline std::string voi_file_name(std::uint32_t label, ExportFormat format) {
  std::ostringstream name;
  name << "voi_" << std::setw(4) << std::setfill('0') << label
       << (format == ExportFormat::Stl ? ".stl" : ".obj");
  return name.str();
}

/// Deterministic report document for a finished run.
inline json pipeline_report(const PipelineResult& r, const PipelineParams& p, ExportFormat format) {
  json vois = json::array();
  for (const auto& v : r.vois) {
    json entry = v.voi;
    entry["mesh"] = v.mesh;
    entry["mesh"]["file"] = voi_file_name(v.voi.label, format);
    vois.push_back(std::move(entry));
  }
  const auto& s = r.filtered_stats;
  return json{{"dims", {r.dims.nx, r.dims.ny, r.dims.nz}},
              {"spacing", r.spacing},
              {"params", p},
              {"intensity", {{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"stddev", s.stddev},
                             {"histogram", s.histogram}}},
              {"component_count", r.component_count},
              {"vois", std::move(vois)}};
}

/// Writes one mesh per VOI plus report.json into `out_dir`.
inline void write_pipeline_outputs(const PipelineResult& r, const PipelineParams& p, ExportFormat format,
                                   const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string());
  for (const auto& v : r.vois) {
    const auto path = out_dir / voi_file_name(v.voi.label, format);
    if (format == ExportFormat::Stl) {
      mesh_io::write_file(path, mesh_io::write_stl(v.surface));
    } else {
      const auto text = mesh_io::write_obj(v.surface);
      mesh_io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }
  }
  const auto text = pipeline_report(r, p, format).dump(2) + "\n";
  mesh_io::write_file(out_dir / "report.json",
                      std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace ascribe
