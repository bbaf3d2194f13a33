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

// The single sequencer of a collaborative session. It owns the Scene, applies
// ops strictly in call order and returns the events each op produced, tagged
// with their recipients. Not thread-safe: the transport funnels every op
// through one thread.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ascribe/assets.hpp"
#include "ascribe/core/scene.hpp"
#include "ascribe/error.hpp"
#include "ascribe/interaction.hpp"
#include "ascribe/pipeline.hpp"
#include "ascribe/protocol/messages.hpp"
#include "ascribe/quantify.hpp"

namespace ascribe::protocol {

/// Where avatars appear on join, meters.
inline constexpr Vec3 kSpawnPoint{0.0, 1.6, 0.0};
/// Recentered imports land this far in front of the spawn point (along -z).
inline constexpr double kRecenterDistance = 1.5;
/// Largest accepted deviation of an incoming quaternion from unit length.
inline constexpr double kQuatTolerance = 1e-3;

struct SessionOptions {
  std::string token;
  bool recenter_imports = false;
};

struct Outgoing {
  ServerEvent event;
  std::optional<ClientId> to;  // nullopt: every welcomed client

  bool broadcast() const { return !to.has_value(); }
};

struct Avatar {
  ClientId client = 0;
  Transform head;
  Transform left;
  Transform right;
};

/// Asset data loaded off the sequencer for an ImportAsset/ImportStack op.
struct PreparedMesh {
  std::shared_ptr<const Mesh> mesh;
};

struct PreparedStack {
  std::shared_ptr<const Volume> volume;
  std::vector<Mesh> surfaces;  // one per component when segmentation ran
};

using Prepared = std::variant<std::monostate, PreparedMesh, PreparedStack, Error>;

/// Loads whatever `payload` needs from `assets`. Safe to call from any thread
/// as long as `assets` is.
inline Prepared prepare(AssetSource& assets, const OpPayload& payload) {
  try {
    if (const auto* op = std::get_if<ImportAsset>(&payload)) {
      return PreparedMesh{std::make_shared<const Mesh>(assets.load_mesh(op->name))};
    }
    if (const auto* op = std::get_if<ImportStack>(&payload)) {
      PreparedStack out{std::make_shared<const Volume>(assets.load_stack(op->name)), {}};
      if (op->segment) {
        for (auto& voi : run_pipeline(*out.volume, *op->segment).vois) out.surfaces.push_back(std::move(voi.surface));
      }
      return out;
    }
  } catch (const Error& e) {
    return e;
  }
  return std::monostate{};
}

class Session {
 public:
  explicit Session(std::shared_ptr<AssetSource> assets, SessionOptions options = {})
      : assets_(std::move(assets)), options_(std::move(options)) {}

  const Scene& scene() const { return scene_; }
  const SessionOptions& options() const { return options_; }
  const std::map<ClientId, Avatar>& avatars() const { return avatars_; }

  /// Registers a transport connection. The client is not part of the session
  /// until its Hello is accepted.
  ClientId connect() {
    const ClientId id = next_client_++;
    clients_[id] = ClientState{};
    return id;
  }

  bool welcomed(ClientId client) const {
    auto it = clients_.find(client);
    return it != clients_.end() && it->second.welcomed;
  }

  /// A rejected Hello means the transport should close the connection.
  bool should_close(ClientId client) const {
    auto it = clients_.find(client);
    return it == clients_.end() || it->second.refused;
  }

  /// Releases every grab held by `client` (one revision each) and removes its
  /// avatar.
  std::vector<Outgoing> disconnect(ClientId client) {
    std::vector<Outgoing> out;
    auto it = clients_.find(client);
    if (it == clients_.end()) return out;
    const bool was_welcomed = it->second.welcomed;
    clients_.erase(it);
    for (auto g = grabs_.begin(); g != grabs_.end();) {
      if (g->second.state.client == client) {
        const ObjectId object = g->first;
        g = grabs_.erase(g);
        scene_.set_grab_owner(object, std::nullopt);
        out.push_back(broadcast(client, GrabChanged{object, std::nullopt}));
      } else {
        ++g;
      }
    }
    if (was_welcomed) {
      auto a = avatars_.find(client);
      AvatarMoved gone{client, {}, {}, {}, true};
      if (a != avatars_.end()) {
        gone.head = a->second.head;
        gone.left = a->second.left;
        gone.right = a->second.right;
        avatars_.erase(a);
      }
      out.push_back(broadcast(client, gone));
    }
    return out;
  }

  ServerEvent snapshot() const {
    SceneSnapshot s;
    for (const auto& [id, obj] : scene_.objects()) s.objects.push_back(obj);
    s.stack = scene_.stack();
    return {scene_.revision(), 0, std::move(s)};
  }

  /// Volume behind the open or previously opened stack `name`.
  std::shared_ptr<const Volume> stack_volume(const std::string& name) const {
    auto it = stacks_.find(name);
    return it == stacks_.end() ? nullptr : it->second;
  }

  /// True for ops whose asset loading should run off the sequencer thread.
  static bool needs_preparation(const OpPayload& payload) {
    return std::holds_alternative<ImportAsset>(payload) || std::holds_alternative<ImportStack>(payload);
  }

  std::vector<Outgoing> apply(ClientId client, const ClientOp& op) {
    Prepared prepared;
    if (needs_preparation(op.payload) && accepts(client, op)) prepared = prepare(*assets_, op.payload);
    return apply(client, op, std::move(prepared));
  }

  /// Applies `op` using asset data loaded earlier by prepare().
  std::vector<Outgoing> apply(ClientId client, const ClientOp& op, Prepared prepared) {
    std::vector<Outgoing> out;
    auto it = clients_.find(client);
    if (it == clients_.end()) return out;
    ClientState& state = it->second;
    auto reject = [&](RejectReason reason, std::string detail) {
      out.push_back({{scene_.revision(), client, OpRejected{op.seq, reason, std::move(detail)}}, client});
      return out;
    };
    if (state.last_seq && op.seq <= *state.last_seq) {
      return reject(RejectReason::BadPayload, "seq " + std::to_string(op.seq) + " does not increase");
    }
    state.last_seq = op.seq;

    const bool is_hello = std::holds_alternative<Hello>(op.payload);
    if (!state.welcomed && !is_hello) return reject(RejectReason::BadPayload, "hello required first");
    if (state.welcomed && is_hello) return reject(RejectReason::BadPayload, "already welcomed");

    Context ctx{client, op.seq, out, std::move(prepared)};
    try {
      std::visit([&](const auto& payload) { handle(ctx, payload); }, op.payload);
    } catch (const Rejection& r) {
      return reject(r.reason, r.detail);
    } catch (const Error& e) {
      return reject(reason_for(e.code()), e.what());
    }
    return out;
  }

 private:
  struct ClientState {
    std::optional<std::uint64_t> last_seq;
    bool welcomed = false;
    bool refused = false;
    std::string name;
  };

  struct HeldGrab {
    interaction::GrabState state;
    Transform hand;
  };

  struct Rejection {
    RejectReason reason;
    std::string detail;
  };

  struct Context {
    ClientId client;
    std::uint64_t seq;
    std::vector<Outgoing>& out;
    Prepared prepared;
  };

  static RejectReason reason_for(ErrorCode code) {
    switch (code) {
      case ErrorCode::UnknownObject: return RejectReason::UnknownObject;
      case ErrorCode::AlreadyGrabbed: return RejectReason::AlreadyGrabbed;
      case ErrorCode::StaleGrab: return RejectReason::NotGrabOwner;
      case ErrorCode::AssetNotFound: return RejectReason::AssetNotFound;
      default: return RejectReason::BadPayload;
    }
  }

  bool accepts(ClientId client, const ClientOp& op) const {
    auto it = clients_.find(client);
    return it != clients_.end() && it->second.welcomed && (!it->second.last_seq || op.seq > *it->second.last_seq);
  }

  Outgoing broadcast(ClientId origin, EventPayload payload) const {
    return {{scene_.revision(), origin, std::move(payload)}, std::nullopt};
  }

  Outgoing reply(ClientId to, EventPayload payload) const {
    return {{scene_.revision(), to, std::move(payload)}, to};
  }

  /// Renormalizes the rotation after checking it is close to unit length.
  static Transform checked(const Transform& t, const char* what) {
    const UnitQuat& q = t.rotation;
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    if (!(std::abs(n - 1.0) <= kQuatTolerance)) {
      throw Rejection{RejectReason::BadPayload, std::string(what) + " rotation is not a unit quaternion"};
    }
    if (!(t.scale > 0.0) || !std::isfinite(t.scale) || !is_finite(t.position)) {
      throw Rejection{RejectReason::BadPayload, std::string(what) + " needs finite position and positive scale"};
    }
    return {t.position, q.normalized(), t.scale};
  }

  HeldGrab& owned_grab(ClientId client, ObjectId object) {
    if (!scene_.find(object)) throw Rejection{RejectReason::UnknownObject, "object " + std::to_string(object)};
    auto it = grabs_.find(object);
    if (it == grabs_.end() || it->second.state.client != client) {
      throw Rejection{RejectReason::NotGrabOwner, "object " + std::to_string(object) + " is not held by you"};
    }
    return it->second;
  }

  void commit_transform(Context& ctx, ObjectId object, const Transform& t) {
    scene_.set_transform(object, t);
    ctx.out.push_back(broadcast(ctx.client, TransformChanged{object, t}));
  }

  // ---- handlers ------------------------------------------------------------

  void handle(Context& ctx, const Hello& m) {
    ClientState& state = clients_.at(ctx.client);
    if (m.token != options_.token) {
      state.refused = true;
      throw Rejection{RejectReason::BadPayload, "invalid session token"};
    }
    state.welcomed = true;
    state.name = m.name;
    Avatar avatar{ctx.client, Transform::translation(kSpawnPoint), Transform::translation(kSpawnPoint),
                  Transform::translation(kSpawnPoint)};
    avatars_[ctx.client] = avatar;
    ctx.out.push_back(reply(ctx.client, Welcome{ctx.client}));
    ServerEvent snap = snapshot();
    snap.origin = ctx.client;
    ctx.out.push_back({std::move(snap), ctx.client});
    std::vector<AssetEntry> assets;
    try {
      assets = assets_->catalog();
    } catch (const Error&) {
    }
    ctx.out.push_back(reply(ctx.client, AssetCatalog{std::move(assets)}));
    for (const auto& [id, a] : avatars_) {
      if (id != ctx.client) ctx.out.push_back(reply(ctx.client, AvatarMoved{id, a.head, a.left, a.right, false}));
    }
    ctx.out.push_back(broadcast(ctx.client, AvatarMoved{ctx.client, avatar.head, avatar.left, avatar.right, false}));
  }

  void handle(Context& ctx, const ListAssets&) { ctx.out.push_back(reply(ctx.client, AssetCatalog{catalog()})); }

  void handle(Context& ctx, const ImportAsset& m) {
    if (auto* err = std::get_if<Error>(&ctx.prepared)) throw *err;
    auto* prepared = std::get_if<PreparedMesh>(&ctx.prepared);
    if (!prepared || !prepared->mesh) throw Rejection{RejectReason::BadPayload, "asset was not loaded"};
    add_mesh_objects(ctx, m.name, prepared->mesh);
  }

  void handle(Context& ctx, const ImportStack& m) {
    if (auto* err = std::get_if<Error>(&ctx.prepared)) throw *err;
    auto* prepared = std::get_if<PreparedStack>(&ctx.prepared);
    if (!prepared || !prepared->volume) throw Rejection{RejectReason::BadPayload, "stack was not loaded"};
    const Dims d = prepared->volume->dims;
    stacks_[m.name] = prepared->volume;
    scene_.set_stack({m.name, d.nx, d.ny, d.nz, 0});
    ctx.out.push_back(broadcast(ctx.client, SliceChanged{*scene_.stack()}));
    if (prepared->surfaces.empty()) return;
    Mesh combined;
    for (const auto& s : prepared->surfaces) {
      const auto base = static_cast<std::uint32_t>(combined.vertices.size());
      const std::size_t start = combined.triangles.size();
      combined.vertices.insert(combined.vertices.end(), s.vertices.begin(), s.vertices.end());
      for (const auto& t : s.triangles) combined.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
      if (!s.parts.empty()) combined.parts.push_back({s.parts.front().name, start, combined.triangles.size()});
    }
    add_mesh_objects(ctx, m.name, std::make_shared<const Mesh>(std::move(combined)));
  }

  void add_mesh_objects(Context& ctx, const std::string& asset, std::shared_ptr<const Mesh> mesh) {
    if (mesh->parts.empty()) throw Rejection{RejectReason::BadPayload, asset + " has no triangles"};
    Transform placement;
    if (options_.recenter_imports) {
      const Vec3 target = kSpawnPoint + Vec3{0.0, 0.0, -kRecenterDistance};
      placement = Transform::translation(target - bounds(*mesh).center());
    }
    const MeshId mesh_id = scene_.add_mesh(mesh);
    for (std::size_t k = 0; k < mesh->parts.size(); ++k) {
      SceneObject obj;
      obj.name = asset + "/" + mesh->parts[k].name;
      obj.transform = placement;
      obj.mesh_id = mesh_id;
      obj.active_part = k;
      const ObjectId id = scene_.add_object(std::move(obj));
      ctx.out.push_back(broadcast(ctx.client, ObjectAdded{scene_.at(id)}));
    }
  }

  void handle(Context& ctx, const GrabAcquire& m) {
    const Transform hand = checked(m.hand, "hand");
    const auto grab = interaction::grab_acquire(scene_, ctx.client, m.object, hand);
    scene_.set_grab_owner(m.object, ctx.client);
    grabs_[m.object] = {grab, hand};
    ctx.out.push_back(broadcast(ctx.client, GrabChanged{m.object, ctx.client}));
  }

  void handle(Context& ctx, const GrabMove& m) {
    const Transform hand = checked(m.hand, "hand");
    HeldGrab& held = owned_grab(ctx.client, m.object);
    const Transform t = interaction::grab_update(scene_, held.state, hand);
    held.hand = hand;
    commit_transform(ctx, m.object, t);
  }

  void handle(Context& ctx, const GrabRelease& m) {
    owned_grab(ctx.client, m.object);
    grabs_.erase(m.object);
    scene_.set_grab_owner(m.object, std::nullopt);
    ctx.out.push_back(broadcast(ctx.client, GrabChanged{m.object, std::nullopt}));
  }

  void handle(Context& ctx, const PushPull& m) {
    HeldGrab& held = owned_grab(ctx.client, m.object);
    const auto ray = interaction::Ray::make(m.origin, m.direction);
    const Transform t = interaction::push_pull(scene_, m.object, ray, m.delta);
    held.state.offset = compose(invert(held.hand), t);
    commit_transform(ctx, m.object, t);
  }

  void handle(Context& ctx, const Resize& m) {
    HeldGrab& held = owned_grab(ctx.client, m.object);
    const Transform t = interaction::two_hand_resize(scene_, m.object, m.d0, m.d1);
    held.state.offset = compose(invert(held.hand), t);
    commit_transform(ctx, m.object, t);
  }

  void handle(Context& ctx, const SetMaterial& m) {
    const Material mat = interaction::set_material(scene_, m.object, m.preset, m.opacity);
    scene_.set_material(m.object, mat);
    ctx.out.push_back(broadcast(ctx.client, MaterialChanged{m.object, mat}));
  }

  void handle(Context& ctx, const SetOpacity& m) {
    const Material mat = interaction::set_opacity(scene_, m.object, m.opacity);
    scene_.set_material(m.object, mat);
    ctx.out.push_back(broadcast(ctx.client, MaterialChanged{m.object, mat}));
  }

  void handle(Context& ctx, const Teleport& m) {
    const auto ray = interaction::Ray::make(m.origin, m.direction);
    const auto hit = interaction::teleport_target(ray, m.floor, m.max_range);
    if (!hit) throw Rejection{RejectReason::BadPayload, "teleport ray does not reach the floor in range"};
    Avatar& a = avatars_.at(ctx.client);
    const Vec3 shift{hit->x - a.head.position.x, 0.0, hit->z - a.head.position.z};
    a.head.position += shift;
    a.left.position += shift;
    a.right.position += shift;
    ctx.out.push_back(broadcast(ctx.client, AvatarMoved{ctx.client, a.head, a.left, a.right, false}));
  }

  void handle(Context& ctx, const AvatarPose& m) {
    Avatar& a = avatars_.at(ctx.client);
    a.head = checked(m.head, "head");
    a.left = checked(m.left, "left hand");
    a.right = checked(m.right, "right hand");
    ctx.out.push_back(broadcast(ctx.client, AvatarMoved{ctx.client, a.head, a.left, a.right, false}));
  }

  void handle(Context& ctx, const SelectSlice& m) {
    if (!scene_.stack()) throw Rejection{RejectReason::BadPayload, "no image stack is open"};
    StackView view = *scene_.stack();
    if (m.index >= view.depth) {
      throw Rejection{RejectReason::BadPayload,
                      "slice " + std::to_string(m.index) + " outside 0.." + std::to_string(view.depth - 1)};
    }
    view.index = m.index;
    scene_.set_stack(view);
    ctx.out.push_back(broadcast(ctx.client, SliceChanged{view}));
  }

  void handle(Context& ctx, const RequestQuantify& m) {
    const SceneObject& obj = scene_.at(m.object);
    const auto mesh = scene_.mesh(obj.mesh_id);
    if (!mesh) throw Rejection{RejectReason::BadPayload, "mesh data unavailable"};
    const Mesh local = obj.active_part ? extract_part(*mesh, *obj.active_part) : *mesh;
    ctx.out.push_back(reply(ctx.client, QuantifyResult{m.object, mesh_report(transformed(local, obj.transform))}));
  }

  std::vector<AssetEntry> catalog() {
    try {
      return assets_->catalog();
    } catch (const Error& e) {
      throw Rejection{RejectReason::BadPayload, e.what()};
    }
  }

  std::shared_ptr<AssetSource> assets_;
  SessionOptions options_;
  Scene scene_;
  std::map<ClientId, ClientState> clients_;
  std::map<ClientId, Avatar> avatars_;
  std::map<ObjectId, HeldGrab> grabs_;
  std::map<std::string, std::shared_ptr<const Volume>> stacks_;
  ClientId next_client_ = 1;
};

}  // namespace ascribe::protocol
