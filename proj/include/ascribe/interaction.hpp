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

// Hand and controller manipulation mechanics as pure functions over a Scene
// snapshot. Callers (the session sequencer) decide whether to commit results.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "ascribe/core/geometry.hpp"
#include "ascribe/core/scene.hpp"
#include "ascribe/error.hpp"

namespace ascribe::interaction {

/// Closest distance along the ray an object may be pulled to, meters.
inline constexpr double kMinRayDistance = 0.1;
inline constexpr double kMinScale = 0.01;
inline constexpr double kMaxScale = 100.0;
/// Smallest hand separation that starts a resize gesture, meters.
inline constexpr double kMinGestureSpan = 0.01;
/// Default push/pull speed the viewer multiplies with stick deflection, m/s.
inline constexpr double kPushPullSpeed = 2.0;

struct Ray {
  Vec3 origin;
  Vec3 direction{0.0, 0.0, -1.0};

  /// Normalizes `direction`; throws ParameterOutOfRange for a zero or
  /// non-finite direction.
  static Ray make(const Vec3& origin, const Vec3& direction) {
    const double n = norm(direction);
    if (!(n > 0.0) || !std::isfinite(n) || !is_finite(origin)) {
      throw Error(ErrorCode::ParameterOutOfRange, "ray needs a finite non-zero direction");
    }
    return {origin, direction / n};
  }

  bool valid() const { return std::abs(norm(direction) - 1.0) <= 1e-6 && is_finite(origin); }
  Vec3 at(double t) const { return origin + t * direction; }
};

/// An object held by a client's hand. `offset` is the object pose expressed
/// in hand space at the time of the grab.
struct GrabState {
  ClientId client = 0;
  ObjectId object = 0;
  Transform offset;

  friend bool operator==(const GrabState&, const GrabState&) = default;
};

inline GrabState grab_acquire(const Scene& scene, ClientId client, ObjectId object,
                              const Transform& hand) {
  const SceneObject* obj = scene.find(object);
  if (!obj) throw Error(ErrorCode::UnknownObject, "object " + std::to_string(object));
  if (obj->grab_owner) {
    throw Error(ErrorCode::AlreadyGrabbed, "held by client " + std::to_string(*obj->grab_owner));
  }
  return {client, object, compose(invert(hand), obj->transform)};
}

/// Object pose that keeps it rigidly attached to the moved hand.
inline Transform grab_update(const Scene& scene, const GrabState& grab, const Transform& hand) {
  const SceneObject* obj = scene.find(grab.object);
  if (!obj || obj->grab_owner != grab.client) {
    throw Error(ErrorCode::StaleGrab, "object " + std::to_string(grab.object) + " not held by client " +
                                          std::to_string(grab.client));
  }
  return compose(hand, grab.offset);
}

/// Moves the object `delta` meters along the ray, never closer than
/// kMinRayDistance in front of the ray origin.
inline Transform push_pull(const Scene& scene, ObjectId object, const Ray& ray, double delta) {
  const SceneObject* obj = scene.find(object);
  if (!obj) throw Error(ErrorCode::UnknownObject, "object " + std::to_string(object));
  if (!ray.valid() || !std::isfinite(delta)) {
    throw Error(ErrorCode::ParameterOutOfRange, "invalid ray or delta");
  }
  Transform t = obj->transform;
  if (delta == 0.0) return t;
  Vec3 moved = t.position + delta * ray.direction;
  const double along = dot(moved - ray.origin, ray.direction);
  if (along < kMinRayDistance) moved += (kMinRayDistance - along) * ray.direction;
  t.position = moved;
  return t;
}

/// Scales by the ratio of current to initial hand separation, clamped to
/// [kMinScale, kMaxScale].
inline Transform two_hand_resize(const Scene& scene, ObjectId object, double start_span,
                                 double current_span) {
  const SceneObject* obj = scene.find(object);
  if (!obj) throw Error(ErrorCode::UnknownObject, "object " + std::to_string(object));
  if (!(start_span >= kMinGestureSpan) || !std::isfinite(start_span)) {
    throw Error(ErrorCode::DegenerateGesture, "hands start closer than 1 cm");
  }
  if (!(current_span > 0.0) || !std::isfinite(current_span)) {
    throw Error(ErrorCode::DegenerateGesture, "hand separation must stay positive");
  }
  Transform t = obj->transform;
  t.scale = std::clamp(t.scale * (current_span / start_span), kMinScale, kMaxScale);
  return t;
}

/// Floor point the ray lands on, if it points downward and lands within
/// `max_range` (horizontal distance from the origin's floor projection).
inline std::optional<Vec3> teleport_target(const Ray& ray, double floor_height, double max_range) {
  if (!ray.valid() || ray.direction.y >= -1e-6) return std::nullopt;
  const double t = (floor_height - ray.origin.y) / ray.direction.y;
  if (t < 0.0) return std::nullopt;
  Vec3 hit = ray.at(t);
  hit.y = floor_height;
  const double dx = hit.x - ray.origin.x;
  const double dz = hit.z - ray.origin.z;
  if (std::sqrt(dx * dx + dz * dz) > max_range) return std::nullopt;
  return hit;
}

/// New material for `preset`. Opacity is clamped; Glass caps it at 0.5 and
/// defaults to that cap.
inline Material set_material(const Scene& scene, ObjectId object, MaterialPreset preset,
                             std::optional<double> opacity = std::nullopt) {
  if (!scene.find(object)) throw Error(ErrorCode::UnknownObject, "object " + std::to_string(object));
  return Material::make(preset, opacity);
}

/// Current preset with a new (clamped) opacity.
inline Material set_opacity(const Scene& scene, ObjectId object, double opacity) {
  const SceneObject& obj = scene.at(object);
  Material m = obj.material;
  m.opacity = Material::legal_opacity(m.preset, opacity);
  return m;
}

}  // namespace ascribe::interaction
