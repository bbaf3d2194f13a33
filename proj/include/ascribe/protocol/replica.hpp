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

// Client-side mirror of the session scene, rebuilt from the event stream.

#include <map>
#include <memory>
#include <optional>
#include <variant>

#include "ascribe/core/scene.hpp"
#include "ascribe/protocol/messages.hpp"

namespace ascribe::protocol {

enum class ApplyResult {
  Applied,
  Ignored,  // already seen (rev at or below the replica's)
  Gap,      // an earlier state event is missing; resync before continuing
};

class Replica {
 public:
  const Scene& scene() const { return scene_; }
  std::optional<ClientId> self() const { return self_; }
  const std::map<ClientId, AvatarMoved>& avatars() const { return avatars_; }
  const std::optional<QuantifyResult>& last_quantify() const { return last_quantify_; }

  ApplyResult apply(const ServerEvent& ev) {
    if (is_state_event(ev)) {
      if (ev.rev <= scene_.revision()) return ApplyResult::Ignored;
      if (ev.rev != scene_.revision() + 1) return ApplyResult::Gap;
      std::visit([&](const auto& m) { apply_state(m); }, ev.payload);
      return ApplyResult::Applied;
    }
    if (const auto* m = std::get_if<SceneSnapshot>(&ev.payload)) {
      if (ev.rev < scene_.revision()) return ApplyResult::Ignored;
      std::map<ObjectId, SceneObject> objects;
      for (const auto& o : m->objects) objects[o.id] = o;
      auto known = scene_.meshes();
      scene_ = Scene::restore(ev.rev, std::move(objects), m->stack);
      for (const auto& [id, mesh] : known) {
        if (mesh && scene_.meshes().contains(id)) scene_.put_mesh(id, mesh);
      }
      return ApplyResult::Applied;
    }
    if (const auto* m = std::get_if<Welcome>(&ev.payload)) {
      self_ = m->client;
    } else if (const auto* m = std::get_if<AvatarMoved>(&ev.payload)) {
      if (m->gone) avatars_.erase(m->client);
      else avatars_[m->client] = *m;
    } else if (const auto* m = std::get_if<QuantifyResult>(&ev.payload)) {
      last_quantify_ = *m;
    }
    return ApplyResult::Applied;
  }

  /// Stores mesh bytes delivered over the MeshData side channel.
  void put_mesh(MeshId id, Mesh mesh) { scene_.put_mesh(id, std::make_shared<const Mesh>(std::move(mesh))); }

 private:
  void apply_state(const ObjectAdded& m) { scene_.insert_object(m.object); }
  void apply_state(const TransformChanged& m) { scene_.set_transform(m.object, m.transform); }
  void apply_state(const MaterialChanged& m) { scene_.set_material(m.object, m.material); }
  void apply_state(const GrabChanged& m) { scene_.set_grab_owner(m.object, m.owner); }
  void apply_state(const SliceChanged& m) { scene_.set_stack(m.stack); }
  template <typename T>
  void apply_state(const T&) {}

  Scene scene_;
  std::optional<ClientId> self_;
  std::map<ClientId, AvatarMoved> avatars_;
  std::optional<QuantifyResult> last_quantify_;
};

}  // namespace ascribe::protocol
