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

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "ascribe/core/geometry.hpp"
#include "ascribe/core/mesh.hpp"
#include "ascribe/error.hpp"

namespace ascribe {

using ObjectId = std::uint64_t;
using MeshId = std::uint64_t;
using ClientId = std::uint64_t;
using Revision = std::uint64_t;

enum class MaterialPreset { Default, Glass, Brick };

constexpr std::string_view to_string(MaterialPreset p) {
  switch (p) {
    case MaterialPreset::Default: return "default";
    case MaterialPreset::Glass: return "glass";
    case MaterialPreset::Brick: return "brick";
  }
  return "default";
}

inline std::optional<MaterialPreset> preset_from_string(std::string_view s) {
  if (s == "default") return MaterialPreset::Default;
  if (s == "glass") return MaterialPreset::Glass;
  if (s == "brick") return MaterialPreset::Brick;
  return std::nullopt;
}

using Rgb = std::array<double, 3>;

struct Material {
  /// Glass never exceeds this opacity.
  static constexpr double kGlassMaxOpacity = 0.5;

  MaterialPreset preset = MaterialPreset::Default;
  double opacity = 1.0;
  Rgb color{0.8, 0.8, 0.8};

  static constexpr Rgb base_color(MaterialPreset p) {
    switch (p) {
      case MaterialPreset::Default: return {0.8, 0.8, 0.8};
      case MaterialPreset::Glass: return {0.75, 0.9, 1.0};
      case MaterialPreset::Brick: return {0.62, 0.27, 0.18};
    }
    return {0.8, 0.8, 0.8};
  }

  /// Clamps into [0,1]; NaN becomes 1. Glass is additionally capped.
  static double legal_opacity(MaterialPreset p, double requested) {
    double o = std::isnan(requested) ? 1.0 : std::clamp(requested, 0.0, 1.0);
    if (p == MaterialPreset::Glass) o = std::min(o, kGlassMaxOpacity);
    return o;
  }

  static Material make(MaterialPreset p, std::optional<double> opacity = std::nullopt) {
    const double requested =
        opacity.value_or(p == MaterialPreset::Glass ? kGlassMaxOpacity : 1.0);
    return {p, legal_opacity(p, requested), base_color(p)};
  }

  friend bool operator==(const Material&, const Material&) = default;
};

struct SceneObject {
  ObjectId id = 0;
  std::string name;
  Transform transform;
  MeshId mesh_id = 0;
  std::optional<std::size_t> active_part;
  Material material;
  std::optional<ClientId> grab_owner;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// The shared image-stack panel: which stack is open and which slice shows.
struct StackView {
  std::string asset;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t depth = 0;
  std::uint32_t index = 0;

  friend bool operator==(const StackView&, const StackView&) = default;
};

/// Revisioned registry of manipulable objects. Every mutator bumps the
/// revision by exactly one; mesh registration is not a visible mutation.
class Scene {
 public:
  Revision revision() const { return revision_; }
  const std::map<ObjectId, SceneObject>& objects() const { return objects_; }
  const std::map<MeshId, std::shared_ptr<const Mesh>>& meshes() const { return meshes_; }
  const std::optional<StackView>& stack() const { return stack_; }

  const SceneObject* find(ObjectId id) const {
    auto it = objects_.find(id);
    return it == objects_.end() ? nullptr : &it->second;
  }

  const SceneObject& at(ObjectId id) const {
    if (const auto* obj = find(id)) return *obj;
    throw Error(ErrorCode::UnknownObject, "object " + std::to_string(id));
  }

  /// Null for a mesh id known only by reference (replicas before fetch).
  std::shared_ptr<const Mesh> mesh(MeshId id) const {
    auto it = meshes_.find(id);
    return it == meshes_.end() ? nullptr : it->second;
  }

  MeshId add_mesh(std::shared_ptr<const Mesh> mesh) {
    const MeshId id = next_mesh_id_++;
    meshes_.emplace(id, std::move(mesh));
    return id;
  }

  /// Registers a mesh under an id minted elsewhere (replicas).
  void put_mesh(MeshId id, std::shared_ptr<const Mesh> mesh) {
    meshes_[id] = std::move(mesh);
    next_mesh_id_ = std::max(next_mesh_id_, id + 1);
  }

  /// Inserts with a freshly minted id (obj.id is overwritten).
  ObjectId add_object(SceneObject obj) {
    obj.id = next_object_id_;
    insert_object(std::move(obj));
    return next_object_id_ - 1;
  }

  /// Inserts with the id already carried by `obj` (replicas).
  void insert_object(SceneObject obj) {
    if (!meshes_.contains(obj.mesh_id)) meshes_.emplace(obj.mesh_id, nullptr);
    next_object_id_ = std::max(next_object_id_, obj.id + 1);
    next_mesh_id_ = std::max(next_mesh_id_, obj.mesh_id + 1);
    objects_[obj.id] = std::move(obj);
    ++revision_;
  }

  void set_transform(ObjectId id, const Transform& t) {
    mutable_at(id).transform = t;
    ++revision_;
  }

  void set_material(ObjectId id, const Material& m) {
    mutable_at(id).material = m;
    ++revision_;
  }

  void set_grab_owner(ObjectId id, std::optional<ClientId> owner) {
    mutable_at(id).grab_owner = owner;
    ++revision_;
  }

  void set_stack(StackView view) {
    stack_ = std::move(view);
    ++revision_;
  }

  /// Rebuilds a scene at a known revision (snapshot restore).
  static Scene restore(Revision rev, std::map<ObjectId, SceneObject> objects,
                       std::optional<StackView> stack) {
    Scene s;
    for (auto& [id, obj] : objects) s.insert_object(obj);
    s.revision_ = rev;
    s.stack_ = std::move(stack);
    return s;
  }

  /// Equality of document state: revision, objects, stack and the set of
  /// referenced mesh ids (mesh contents travel separately).
  friend bool operator==(const Scene& a, const Scene& b) {
    if (a.revision_ != b.revision_ || a.objects_ != b.objects_ || a.stack_ != b.stack_) {
      return false;
    }
    return std::equal(a.meshes_.begin(), a.meshes_.end(), b.meshes_.begin(), b.meshes_.end(),
                      [](const auto& l, const auto& r) { return l.first == r.first; });
  }

 private:
  SceneObject& mutable_at(ObjectId id) {
    auto it = objects_.find(id);
    if (it == objects_.end()) throw Error(ErrorCode::UnknownObject, "object " + std::to_string(id));
    return it->second;
  }

  std::map<ObjectId, SceneObject> objects_;
  std::map<MeshId, std::shared_ptr<const Mesh>> meshes_;
  std::optional<StackView> stack_;
  Revision revision_ = 0;
  ObjectId next_object_id_ = 1;
  MeshId next_mesh_id_ = 1;
};

}  // namespace ascribe
