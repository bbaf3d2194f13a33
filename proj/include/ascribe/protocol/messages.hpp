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

// Collaborative session wire protocol. Every message is one JSON object per
// transport frame: "t" names the kind, client ops carry "seq", server events
// carry "rev" and "origin". Unknown fields are ignored on decode.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ascribe/assets.hpp"
#include "ascribe/core/scene.hpp"
#include "ascribe/error.hpp"
#include "ascribe/json.hpp"
#include "ascribe/pipeline.hpp"
#include "ascribe/quantify.hpp"

namespace ascribe::protocol {

// ---- client ops ------------------------------------------------------------

struct Hello {
  static constexpr std::string_view kind = "hello";
  std::string name;
  std::string token;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct ListAssets {
  static constexpr std::string_view kind = "list_assets";
  friend bool operator==(const ListAssets&, const ListAssets&) = default;
};

struct ImportAsset {
  static constexpr std::string_view kind = "import_asset";
  std::string name;
  friend bool operator==(const ImportAsset&, const ImportAsset&) = default;
};

/// Opens a stack in the shared slice panel; with `segment` set it also runs
/// the VOI pipeline and adds one object per component.
struct ImportStack {
  static constexpr std::string_view kind = "import_stack";
  std::string name;
  std::optional<PipelineParams> segment;
  friend bool operator==(const ImportStack&, const ImportStack&) = default;
};

struct GrabAcquire {
  static constexpr std::string_view kind = "grab_acquire";
  ObjectId object = 0;
  Transform hand;
  friend bool operator==(const GrabAcquire&, const GrabAcquire&) = default;
};

struct GrabMove {
  static constexpr std::string_view kind = "grab_move";
  ObjectId object = 0;
  Transform hand;
  friend bool operator==(const GrabMove&, const GrabMove&) = default;
};

struct GrabRelease {
  static constexpr std::string_view kind = "grab_release";
  ObjectId object = 0;
  friend bool operator==(const GrabRelease&, const GrabRelease&) = default;
};

struct PushPull {
  static constexpr std::string_view kind = "push_pull";
  ObjectId object = 0;
  Vec3 origin;
  Vec3 direction{0.0, 0.0, -1.0};
  double delta = 0.0;
  friend bool operator==(const PushPull&, const PushPull&) = default;
};

struct Resize {
  static constexpr std::string_view kind = "resize";
  ObjectId object = 0;
  double d0 = 1.0;
  double d1 = 1.0;
  friend bool operator==(const Resize&, const Resize&) = default;
};

struct SetMaterial {
  static constexpr std::string_view kind = "set_material";
  ObjectId object = 0;
  MaterialPreset preset = MaterialPreset::Default;
  std::optional<double> opacity;
  friend bool operator==(const SetMaterial&, const SetMaterial&) = default;
};

struct SetOpacity {
  static constexpr std::string_view kind = "set_opacity";
  ObjectId object = 0;
  double opacity = 1.0;
  friend bool operator==(const SetOpacity&, const SetOpacity&) = default;
};

struct Teleport {
  static constexpr std::string_view kind = "teleport";
  Vec3 origin;
  Vec3 direction{0.0, -1.0, 0.0};
  double floor = 0.0;
  double max_range = 20.0;
  friend bool operator==(const Teleport&, const Teleport&) = default;
};

struct AvatarPose {
  static constexpr std::string_view kind = "avatar_pose";
  Transform head;
  Transform left;
  Transform right;
  friend bool operator==(const AvatarPose&, const AvatarPose&) = default;
};

struct SelectSlice {
  static constexpr std::string_view kind = "select_slice";
  std::uint32_t index = 0;
  friend bool operator==(const SelectSlice&, const SelectSlice&) = default;
};

struct RequestQuantify {
  static constexpr std::string_view kind = "request_quantify";
  ObjectId object = 0;
  friend bool operator==(const RequestQuantify&, const RequestQuantify&) = default;
};

using OpPayload = std::variant<Hello, ListAssets, ImportAsset, ImportStack, GrabAcquire, GrabMove,
                               GrabRelease, PushPull, Resize, SetMaterial, SetOpacity, Teleport,
                               AvatarPose, SelectSlice, RequestQuantify>;

struct ClientOp {
  std::uint64_t seq = 0;
  OpPayload payload;
  friend bool operator==(const ClientOp&, const ClientOp&) = default;
};

// ---- server events ---------------------------------------------------------

enum class RejectReason { NotGrabOwner, AlreadyGrabbed, UnknownObject, BadPayload, AssetNotFound };

constexpr std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::NotGrabOwner: return "NotGrabOwner";
    case RejectReason::AlreadyGrabbed: return "AlreadyGrabbed";
    case RejectReason::UnknownObject: return "UnknownObject";
    case RejectReason::BadPayload: return "BadPayload";
    case RejectReason::AssetNotFound: return "AssetNotFound";
  }
  return "BadPayload";
}

inline std::optional<RejectReason> reject_reason_from_string(std::string_view s) {
  for (auto r : {RejectReason::NotGrabOwner, RejectReason::AlreadyGrabbed, RejectReason::UnknownObject,
                 RejectReason::BadPayload, RejectReason::AssetNotFound}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

struct Welcome {
  static constexpr std::string_view kind = "welcome";
  ClientId client = 0;
  friend bool operator==(const Welcome&, const Welcome&) = default;
};

struct SceneSnapshot {
  static constexpr std::string_view kind = "scene_snapshot";
  std::vector<SceneObject> objects;
  std::optional<StackView> stack;
  friend bool operator==(const SceneSnapshot&, const SceneSnapshot&) = default;
};

struct ObjectAdded {
  static constexpr std::string_view kind = "object_added";
  SceneObject object;
  friend bool operator==(const ObjectAdded&, const ObjectAdded&) = default;
};

struct TransformChanged {
  static constexpr std::string_view kind = "transform_changed";
  ObjectId object = 0;
  Transform transform;
  friend bool operator==(const TransformChanged&, const TransformChanged&) = default;
};

struct MaterialChanged {
  static constexpr std::string_view kind = "material_changed";
  ObjectId object = 0;
  Material material;
  friend bool operator==(const MaterialChanged&, const MaterialChanged&) = default;
};

struct GrabChanged {
  static constexpr std::string_view kind = "grab_changed";
  ObjectId object = 0;
  std::optional<ClientId> owner;
  friend bool operator==(const GrabChanged&, const GrabChanged&) = default;
};

/// Presence update for one client's avatar. `gone` marks a departure.
struct AvatarMoved {
  static constexpr std::string_view kind = "avatar_moved";
  ClientId client = 0;
  Transform head;
  Transform left;
  Transform right;
  bool gone = false;
  friend bool operator==(const AvatarMoved&, const AvatarMoved&) = default;
};

struct SliceChanged {
  static constexpr std::string_view kind = "slice_changed";
  StackView stack;
  friend bool operator==(const SliceChanged&, const SliceChanged&) = default;
};

struct AssetCatalog {
  static constexpr std::string_view kind = "asset_catalog";
  std::vector<AssetEntry> assets;
  friend bool operator==(const AssetCatalog&, const AssetCatalog&) = default;
};

struct QuantifyResult {
  static constexpr std::string_view kind = "quantify_result";
  ObjectId object = 0;
  MeshReport report;
  friend bool operator==(const QuantifyResult&, const QuantifyResult&) = default;
};

struct OpRejected {
  static constexpr std::string_view kind = "op_rejected";
  std::uint64_t seq = 0;
  RejectReason reason = RejectReason::BadPayload;
  std::string detail;
  friend bool operator==(const OpRejected&, const OpRejected&) = default;
};

using EventPayload = std::variant<Welcome, SceneSnapshot, ObjectAdded, TransformChanged,
                                  MaterialChanged, GrabChanged, AvatarMoved, SliceChanged,
                                  AssetCatalog, QuantifyResult, OpRejected>;

struct ServerEvent {
  Revision rev = 0;
  ClientId origin = 0;
  EventPayload payload;
  friend bool operator==(const ServerEvent&, const ServerEvent&) = default;
};

/// Events that mutate replicated scene state; their revs form the gap-free
/// sequence 1..R.
inline bool is_state_event(const ServerEvent& e) {
  return std::holds_alternative<ObjectAdded>(e.payload) ||
         std::holds_alternative<TransformChanged>(e.payload) ||
         std::holds_alternative<MaterialChanged>(e.payload) ||
         std::holds_alternative<GrabChanged>(e.payload) ||
         std::holds_alternative<SliceChanged>(e.payload);
}

template <typename Variant>
std::string_view kind_of(const Variant& v) {
  return std::visit([](const auto& m) { return std::decay_t<decltype(m)>::kind; }, v);
}

// ---- payload fields --------------------------------------------------------

namespace fields {

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

inline void write(json& j, const Hello& m) {
  j["name"] = m.name;
  if (!m.token.empty()) j["token"] = m.token;
}
inline void read(const json& j, Hello& m) {
  m.name = j.value("name", std::string());
  m.token = j.value("token", std::string());
}

inline void write(json&, const ListAssets&) {}
inline void read(const json&, ListAssets&) {}

inline void write(json& j, const ImportAsset& m) { j["name"] = m.name; }
inline void read(const json& j, ImportAsset& m) { m.name = j.at("name").get<std::string>(); }

inline void write(json& j, const ImportStack& m) {
  j["name"] = m.name;
  if (m.segment) j["segment"] = *m.segment;
}
inline void read(const json& j, ImportStack& m) {
  m.name = j.at("name").get<std::string>();
  m.segment = opt<PipelineParams>(j, "segment");
}

inline void write(json& j, const GrabAcquire& m) {
  j["object"] = m.object;
  j["hand"] = m.hand;
}
inline void read(const json& j, GrabAcquire& m) {
  m.object = j.at("object").get<ObjectId>();
  m.hand = j.at("hand").get<Transform>();
}

inline void write(json& j, const GrabMove& m) {
  j["object"] = m.object;
  j["hand"] = m.hand;
}
inline void read(const json& j, GrabMove& m) {
  m.object = j.at("object").get<ObjectId>();
  m.hand = j.at("hand").get<Transform>();
}

inline void write(json& j, const GrabRelease& m) { j["object"] = m.object; }
inline void read(const json& j, GrabRelease& m) { m.object = j.at("object").get<ObjectId>(); }

inline void write(json& j, const PushPull& m) {
  j["object"] = m.object;
  j["origin"] = m.origin;
  j["direction"] = m.direction;
  j["delta"] = m.delta;
}
inline void read(const json& j, PushPull& m) {
  m.object = j.at("object").get<ObjectId>();
  m.origin = j.at("origin").get<Vec3>();
  m.direction = j.at("direction").get<Vec3>();
  m.delta = j.at("delta").get<double>();
}

inline void write(json& j, const Resize& m) {
  j["object"] = m.object;
  j["d0"] = m.d0;
  j["d1"] = m.d1;
}
inline void read(const json& j, Resize& m) {
  m.object = j.at("object").get<ObjectId>();
  m.d0 = j.at("d0").get<double>();
  m.d1 = j.at("d1").get<double>();
}

inline void write(json& j, const SetMaterial& m) {
  j["object"] = m.object;
  j["preset"] = to_string(m.preset);
  if (m.opacity) j["opacity"] = *m.opacity;
}
inline void read(const json& j, SetMaterial& m) {
  m.object = j.at("object").get<ObjectId>();
  const auto preset = preset_from_string(j.at("preset").get<std::string>());
  if (!preset) throw json::other_error::create(599, "unknown material preset", &j);
  m.preset = *preset;
  m.opacity = opt<double>(j, "opacity");
}

inline void write(json& j, const SetOpacity& m) {
  j["object"] = m.object;
  j["opacity"] = m.opacity;
}
inline void read(const json& j, SetOpacity& m) {
  m.object = j.at("object").get<ObjectId>();
  m.opacity = j.at("opacity").get<double>();
}

inline void write(json& j, const Teleport& m) {
  j["origin"] = m.origin;
  j["direction"] = m.direction;
  j["floor"] = m.floor;
  j["max_range"] = m.max_range;
}
inline void read(const json& j, Teleport& m) {
  m.origin = j.at("origin").get<Vec3>();
  m.direction = j.at("direction").get<Vec3>();
  m.floor = j.value("floor", 0.0);
  m.max_range = j.value("max_range", 20.0);
}

inline void write(json& j, const AvatarPose& m) {
  j["head"] = m.head;
  j["left"] = m.left;
  j["right"] = m.right;
}
inline void read(const json& j, AvatarPose& m) {
  m.head = j.at("head").get<Transform>();
  m.left = j.at("left").get<Transform>();
  m.right = j.at("right").get<Transform>();
}

inline void write(json& j, const SelectSlice& m) { j["index"] = m.index; }
inline void read(const json& j, SelectSlice& m) { m.index = j.at("index").get<std::uint32_t>(); }

inline void write(json& j, const RequestQuantify& m) { j["object"] = m.object; }
inline void read(const json& j, RequestQuantify& m) { m.object = j.at("object").get<ObjectId>(); }

inline void write(json& j, const Welcome& m) { j["client"] = m.client; }
inline void read(const json& j, Welcome& m) { m.client = j.at("client").get<ClientId>(); }

inline void write(json& j, const SceneSnapshot& m) {
  j["objects"] = m.objects;
  j["stack"] = m.stack ? json(*m.stack) : json(nullptr);
}
inline void read(const json& j, SceneSnapshot& m) {
  m.objects = j.at("objects").get<std::vector<SceneObject>>();
  m.stack = opt<StackView>(j, "stack");
}

inline void write(json& j, const ObjectAdded& m) { j["object"] = m.object; }
inline void read(const json& j, ObjectAdded& m) { m.object = j.at("object").get<SceneObject>(); }

inline void write(json& j, const TransformChanged& m) {
  j["object"] = m.object;
  j["transform"] = m.transform;
}
inline void read(const json& j, TransformChanged& m) {
  m.object = j.at("object").get<ObjectId>();
  m.transform = j.at("transform").get<Transform>();
}

inline void write(json& j, const MaterialChanged& m) {
  j["object"] = m.object;
  j["material"] = m.material;
}
inline void read(const json& j, MaterialChanged& m) {
  m.object = j.at("object").get<ObjectId>();
  m.material = j.at("material").get<Material>();
}

inline void write(json& j, const GrabChanged& m) {
  j["object"] = m.object;
  j["owner"] = m.owner ? json(*m.owner) : json(nullptr);
}
inline void read(const json& j, GrabChanged& m) {
  m.object = j.at("object").get<ObjectId>();
  m.owner = opt<ClientId>(j, "owner");
}

inline void write(json& j, const AvatarMoved& m) {
  j["client"] = m.client;
  j["head"] = m.head;
  j["left"] = m.left;
  j["right"] = m.right;
  if (m.gone) j["gone"] = true;
}
inline void read(const json& j, AvatarMoved& m) {
  m.client = j.at("client").get<ClientId>();
  m.head = j.at("head").get<Transform>();
  m.left = j.at("left").get<Transform>();
  m.right = j.at("right").get<Transform>();
  m.gone = j.value("gone", false);
}

inline void write(json& j, const SliceChanged& m) { j["stack"] = m.stack; }
inline void read(const json& j, SliceChanged& m) { m.stack = j.at("stack").get<StackView>(); }

inline void write(json& j, const AssetCatalog& m) { j["assets"] = m.assets; }
inline void read(const json& j, AssetCatalog& m) { m.assets = j.at("assets").get<std::vector<AssetEntry>>(); }

inline void write(json& j, const QuantifyResult& m) {
  j["object"] = m.object;
  j["report"] = m.report;
}
inline void read(const json& j, QuantifyResult& m) {
  m.object = j.at("object").get<ObjectId>();
  m.report = j.at("report").get<MeshReport>();
}

inline void write(json& j, const OpRejected& m) {
  j["op_seq"] = m.seq;
  j["reason"] = to_string(m.reason);
  j["detail"] = m.detail;
}
inline void read(const json& j, OpRejected& m) {
  m.seq = j.at("op_seq").get<std::uint64_t>();
  const auto reason = reject_reason_from_string(j.at("reason").get<std::string>());
  if (!reason) throw json::other_error::create(599, "unknown reject reason", &j);
  m.reason = *reason;
  m.detail = j.value("detail", std::string());
}

}  // namespace fields

// ---- codec -----------------------------------------------------------------

namespace detail {

template <typename Variant, std::size_t I = 0>
bool decode_alternative(std::string_view kind, const json& j, Variant& out) {
  if constexpr (I == std::variant_size_v<Variant>) {
    return false;
  } else {
    using Alt = std::variant_alternative_t<I, Variant>;
    if (Alt::kind == kind) {
      Alt alt;
      fields::read(j, alt);
      out = std::move(alt);
      return true;
    }
    return decode_alternative<Variant, I + 1>(kind, j, out);
  }
}

inline json parse_object(std::string_view text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::MalformedMessage, "not a JSON object");
  }
  auto t = j.find("t");
  if (t == j.end() || !t->is_string()) throw Error(ErrorCode::MalformedMessage, "missing \"t\"");
  return j;
}

template <typename Variant>
Variant decode_payload(const json& j) {
  const auto kind = j.at("t").get<std::string>();
  Variant payload;
  try {
    if (!decode_alternative(kind, j, payload)) throw Error(ErrorCode::UnknownKind, kind);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedMessage, kind + ": " + e.what());
  }
  return payload;
}

template <typename T>
T get_counter(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    throw Error(ErrorCode::MalformedMessage, std::string("missing or negative \"") + key + "\"");
  }
  return it->get<T>();
}

}  // namespace detail

inline json to_json_message(const ClientOp& op) {
  json j = json::object();
  j["t"] = kind_of(op.payload);
  j["seq"] = op.seq;
  std::visit([&](const auto& m) { fields::write(j, m); }, op.payload);
  return j;
}

inline json to_json_message(const ServerEvent& ev) {
  json j = json::object();
  j["t"] = kind_of(ev.payload);
  j["rev"] = ev.rev;
  j["origin"] = ev.origin;
  std::visit([&](const auto& m) { fields::write(j, m); }, ev.payload);
  return j;
}

inline std::string encode(const ClientOp& op) { return to_json_message(op).dump(); }
inline std::string encode(const ServerEvent& ev) { return to_json_message(ev).dump(); }

inline ClientOp decode_op(std::string_view text) {
  const json j = detail::parse_object(text);
  ClientOp op;
  op.payload = detail::decode_payload<OpPayload>(j);
  op.seq = detail::get_counter<std::uint64_t>(j, "seq");
  return op;
}

inline ServerEvent decode_event(std::string_view text) {
  const json j = detail::parse_object(text);
  ServerEvent ev;
  ev.payload = detail::decode_payload<EventPayload>(j);
  ev.rev = detail::get_counter<Revision>(j, "rev");
  ev.origin = detail::get_counter<ClientId>(j, "origin");
  return ev;
}

// ---- binary mesh side channel ---------------------------------------------

/// MeshData frame: 8-byte little-endian mesh id followed by a binary STL.
inline std::vector<std::uint8_t> encode_mesh_data(MeshId id, const Mesh& mesh) {
  std::vector<std::uint8_t> out(8);
  for (int k = 0; k < 8; ++k) out[k] = static_cast<std::uint8_t>(id >> (8 * k));
  const auto stl = mesh_io::write_stl(mesh, mesh_io::MeshFormat::StlBinary);
  out.insert(out.end(), stl.begin(), stl.end());
  return out;
}

inline std::pair<MeshId, Mesh> decode_mesh_data(std::span<const std::uint8_t> frame) {
  if (frame.size() < 8) throw Error(ErrorCode::MalformedMessage, "MeshData frame shorter than 8 bytes");
  MeshId id = 0;
  for (int k = 0; k < 8; ++k) id |= MeshId{frame[k]} << (8 * k);
  return {id, mesh_io::detail::parse_stl_binary(frame.subspan(8))};
}

}  // namespace ascribe::protocol
