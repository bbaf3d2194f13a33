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

// nlohmann::json conversions for the value types that cross the wire or land
// in reports. Vectors are [x,y,z]; quaternions [w,x,y,z].

#include <cmath>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ascribe/assets.hpp"
#include "ascribe/core/geometry.hpp"
#include "ascribe/core/scene.hpp"
#include "ascribe/quantify.hpp"

namespace ascribe {

using json = nlohmann::json;

namespace detail {

inline double finite_number(const json& j) {
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw json::other_error::create(599, "non-finite number", &j);
  return v;
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace detail

inline void to_json(json& j, const Vec3& v) { j = json::array({v.x, v.y, v.z}); }

inline void from_json(const json& j, Vec3& v) {
  if (!j.is_array() || j.size() != 3) throw json::type_error::create(302, "vector needs 3 numbers", &j);
  v = {detail::finite_number(j[0]), detail::finite_number(j[1]), detail::finite_number(j[2])};
}

inline void to_json(json& j, const UnitQuat& q) { j = json::array({q.w, q.x, q.y, q.z}); }

inline void from_json(const json& j, UnitQuat& q) {
  if (!j.is_array() || j.size() != 4) throw json::type_error::create(302, "quaternion needs 4 numbers", &j);
  q = {detail::finite_number(j[0]), detail::finite_number(j[1]), detail::finite_number(j[2]),
       detail::finite_number(j[3])};
}

inline void to_json(json& j, const Transform& t) {
  j = json{{"p", t.position}, {"q", t.rotation}, {"s", t.scale}};
}

inline void from_json(const json& j, Transform& t) {
  t.position = j.at("p").get<Vec3>();
  t.rotation = j.at("q").get<UnitQuat>();
  t.scale = detail::finite_number(j.at("s"));
}

inline void to_json(json& j, const Material& m) {
  j = json{{"preset", to_string(m.preset)}, {"opacity", m.opacity}, {"color", m.color}};
}

inline void from_json(const json& j, Material& m) {
  const auto preset = preset_from_string(j.at("preset").get<std::string>());
  if (!preset) throw json::other_error::create(599, "unknown material preset", &j);
  m.preset = *preset;
  m.opacity = detail::finite_number(j.at("opacity"));
  m.color = j.at("color").get<Rgb>();
}

inline void to_json(json& j, const SceneObject& o) {
  j = json{{"id", o.id},
           {"name", o.name},
           {"transform", o.transform},
           {"mesh", o.mesh_id},
           {"active_part", o.active_part ? json(*o.active_part) : json(nullptr)},
           {"material", o.material},
           {"grab_owner", o.grab_owner ? json(*o.grab_owner) : json(nullptr)}};
}

inline void from_json(const json& j, SceneObject& o) {
  o.id = j.at("id").get<ObjectId>();
  o.name = j.at("name").get<std::string>();
  o.transform = j.at("transform").get<Transform>();
  o.mesh_id = j.at("mesh").get<MeshId>();
  o.active_part = detail::optional_field<std::size_t>(j, "active_part");
  o.material = j.at("material").get<Material>();
  o.grab_owner = detail::optional_field<ClientId>(j, "grab_owner");
}

inline void to_json(json& j, const StackView& s) {
  j = json{{"asset", s.asset}, {"width", s.width}, {"height", s.height}, {"depth", s.depth}, {"index", s.index}};
}

inline void from_json(const json& j, StackView& s) {
  s.asset = j.at("asset").get<std::string>();
  s.width = j.at("width").get<std::uint32_t>();
  s.height = j.at("height").get<std::uint32_t>();
  s.depth = j.at("depth").get<std::uint32_t>();
  s.index = j.at("index").get<std::uint32_t>();
}

inline void to_json(json& j, const AssetEntry& a) {
  j = json{{"name", a.name}, {"kind", to_string(a.kind)}, {"size", a.size_bytes}};
  if (a.kind == AssetKind::ImageStack) j["slices"] = a.slice_count;
}

inline void from_json(const json& j, AssetEntry& a) {
  a.name = j.at("name").get<std::string>();
  const auto kind = asset_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw json::other_error::create(599, "unknown asset kind", &j);
  a.kind = *kind;
  a.size_bytes = j.at("size").get<std::uint64_t>();
  a.slice_count = j.value("slices", std::uint32_t{0});
}

inline void to_json(json& j, const MeshReport& r) {
  j = json{{"surface_area", r.surface_area},
           {"enclosed_volume", r.enclosed_volume ? json(*r.enclosed_volume) : json(nullptr)},
           {"watertight", r.watertight},
           {"triangle_count", r.triangle_count},
           {"vertex_count", r.vertex_count}};
}

inline void from_json(const json& j, MeshReport& r) {
  r.surface_area = j.at("surface_area").get<double>();
  r.enclosed_volume = detail::optional_field<double>(j, "enclosed_volume");
  r.watertight = j.at("watertight").get<bool>();
  r.triangle_count = j.at("triangle_count").get<std::uint64_t>();
  r.vertex_count = j.at("vertex_count").get<std::uint64_t>();
}

inline void to_json(json& j, const VoiReport& r) {
  j = json{{"label", r.label},
           {"voxel_count", r.voxel_count},
           {"physical_volume", r.physical_volume},
           {"centroid", r.centroid},
           {"bbox_min", r.bbox_min},
           {"bbox_max", r.bbox_max},
           {"mean_intensity", r.mean_intensity},
           {"stddev_intensity", r.stddev_intensity}};
}

inline void from_json(const json& j, VoiReport& r) {
  r.label = j.at("label").get<std::uint32_t>();
  r.voxel_count = j.at("voxel_count").get<std::uint64_t>();
  r.physical_volume = j.at("physical_volume").get<double>();
  r.centroid = j.at("centroid").get<Vec3>();
  r.bbox_min = j.at("bbox_min").get<Vec3>();
  r.bbox_max = j.at("bbox_max").get<Vec3>();
  r.mean_intensity = j.at("mean_intensity").get<double>();
  r.stddev_intensity = j.at("stddev_intensity").get<double>();
}

}  // namespace ascribe
