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

#include <cmath>
#include <ostream>

namespace ascribe {

/// Point or direction in world space. Positions are meters.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  friend std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
  }
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) { return v / norm(v); }

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

inline Vec3 component_min(const Vec3& a, const Vec3& b) {
  return {std::fmin(a.x, b.x), std::fmin(a.y, b.y), std::fmin(a.z, b.z)};
}

inline Vec3 component_max(const Vec3& a, const Vec3& b) {
  return {std::fmax(a.x, b.x), std::fmax(a.y, b.y), std::fmax(a.z, b.z)};
}

/// Rotation quaternion. Every operation that returns one renormalizes it.
struct UnitQuat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static constexpr UnitQuat identity() { return {}; }

  /// Rotation of `radians` about `axis` (need not be unit length).
  static UnitQuat from_axis_angle(const Vec3& axis, double radians) {
    const Vec3 a = ascribe::normalized(axis);
    const double s = std::sin(radians / 2.0);
    return UnitQuat{std::cos(radians / 2.0), a.x * s, a.y * s, a.z * s}.normalized();
  }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  UnitQuat normalized() const {
    const double n = norm();
    return {w / n, x / n, y / n, z / n};
  }

  constexpr UnitQuat conjugate() const { return {w, -x, -y, -z}; }

  friend UnitQuat operator*(const UnitQuat& a, const UnitQuat& b) {
    return UnitQuat{a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                    a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                    a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                    a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w}
        .normalized();
  }

  /// q v q*, expanded as v + 2w(u×v) + 2u×(u×v).
  Vec3 rotate(const Vec3& v) const {
    const Vec3 u{x, y, z};
    const Vec3 t = 2.0 * cross(u, v);
    return v + w * t + cross(u, t);
  }

  friend constexpr bool operator==(const UnitQuat&, const UnitQuat&) = default;
};

/// Similarity transform applied as scale, then rotate, then translate:
/// p' = position + rotation * (scale * p).
struct Transform {
  Vec3 position;
  UnitQuat rotation;
  double scale = 1.0;

  static constexpr Transform identity() { return {}; }
  static constexpr Transform translation(const Vec3& t) { return {t, UnitQuat{}, 1.0}; }
  static constexpr Transform uniform_scale(double s) { return {Vec3{}, UnitQuat{}, s}; }
  static Transform rotation_about(const Vec3& axis, double radians) {
    return {Vec3{}, UnitQuat::from_axis_angle(axis, radians), 1.0};
  }

  friend constexpr bool operator==(const Transform&, const Transform&) = default;
};

inline Vec3 apply(const Transform& t, const Vec3& p) {
  return t.position + t.rotation.rotate(t.scale * p);
}

/// Transform equivalent to applying `b` first, then `a`.
inline Transform compose(const Transform& a, const Transform& b) {
  return {a.position + a.rotation.rotate(a.scale * b.position), a.rotation * b.rotation,
          a.scale * b.scale};
}

inline Transform invert(const Transform& t) {
  const UnitQuat inv_rot = t.rotation.conjugate().normalized();
  const double inv_scale = 1.0 / t.scale;
  return {-(inv_scale * inv_rot.rotate(t.position)), inv_rot, inv_scale};
}

}  // namespace ascribe
