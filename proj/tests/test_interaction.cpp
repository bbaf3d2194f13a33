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

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ascribe/interaction.hpp"
#include "support/oracles.hpp"

using namespace ascribe;
using namespace ascribe::interaction;

namespace {

constexpr double kPi = std::numbers::pi;

struct Fixture {
  Scene scene;
  ObjectId id = 0;

  explicit Fixture(const Transform& t = {}) {
    SceneObject o;
    o.mesh_id = scene.add_mesh(std::make_shared<const Mesh>(oracle::unit_cube()));
    o.transform = t;
    id = scene.add_object(o);
  }
};

Transform rigid(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0), a(-kPi, kPi);
  Vec3 axis{u(rng), u(rng), u(rng)};
  if (norm(axis) < 1e-3) axis = {0, 1, 0};
  return {{u(rng), u(rng), u(rng)}, UnitQuat::from_axis_angle(axis, a(rng)), 1.0};
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec3 d{n(rng), n(rng), n(rng)};
  while (norm(d) < 1e-6) d = {n(rng), n(rng), n(rng)};
  return normalized(d);
}

void expect_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

}  // namespace

TEST(Grab, AcquireAtObjectPoseGivesIdentityOffset) {
  const Transform t{{1, 2, 3}, UnitQuat::from_axis_angle({1, 1, 0}, 0.7), 1.5};
  Fixture f(t);
  const GrabState g = grab_acquire(f.scene, 9, f.id, t);
  expect_near(g.offset.position, {}, 1e-12);
  EXPECT_NEAR(g.offset.scale, 1.0, 1e-12);
  EXPECT_NEAR(std::abs(g.offset.rotation.w), 1.0, 1e-12);
}

TEST(Grab, SecondOwnerIsRejected) {
  Fixture f;
  grab_acquire(f.scene, 1, f.id, {});
  f.scene.set_grab_owner(f.id, ClientId{1});
  try {
    grab_acquire(f.scene, 2, f.id, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AlreadyGrabbed);
  }
  EXPECT_THROW(grab_acquire(f.scene, 2, 77, {}), Error);
}

TEST(Grab, UpdateExamples) {
  Fixture f(Transform::translation({1, 0, 0}));
  const GrabState g = grab_acquire(f.scene, 1, f.id, {});
  f.scene.set_grab_owner(f.id, ClientId{1});
  expect_near(grab_update(f.scene, g, {}).position, {1, 0, 0}, 1e-12);
  expect_near(grab_update(f.scene, g, Transform::translation({0, 0, 1})).position, {1, 0, 1}, 1e-12);
  // Oracle: rotating the hand 90 degrees about y carries (1,0,0) to (0,0,-1).
  const Transform turn = Transform::rotation_about({0, 1, 0}, kPi / 2);
  expect_near(grab_update(f.scene, g, turn).position, apply(turn, {1, 0, 0}), 1e-12);
  expect_near(grab_update(f.scene, g, turn).position, {0, 0, -1}, 1e-12);
  f.scene.set_grab_owner(f.id, std::nullopt);
  EXPECT_THROW(grab_update(f.scene, g, {}), Error);
}

TEST(PushPull, Examples) {
  Fixture f(Transform::translation({0, 0, 2}));
  const Ray ray = Ray::make({0, 0, 0}, {0, 0, 1});
  expect_near(push_pull(f.scene, f.id, ray, 0.5).position, {0, 0, 2.5}, 1e-12);
  expect_near(push_pull(f.scene, f.id, ray, 0.0).position, {0, 0, 2}, 0.0);
  Fixture near(Transform::translation({0, 0, 0.3}));
  expect_near(push_pull(near.scene, near.id, ray, -0.5).position, {0, 0, 0.1}, 1e-12);
  EXPECT_THROW(push_pull(f.scene, 42, ray, 1.0), Error);
}

TEST(Resize, Examples) {
  Fixture f;
  EXPECT_DOUBLE_EQ(two_hand_resize(f.scene, f.id, 0.2, 0.4).scale, 2.0);
  EXPECT_DOUBLE_EQ(two_hand_resize(f.scene, f.id, 0.3, 0.3).scale, 1.0);
  Fixture big(Transform::uniform_scale(60));
  EXPECT_DOUBLE_EQ(two_hand_resize(big.scene, big.id, 0.2, 0.4).scale, 100.0);
  try {
    two_hand_resize(f.scene, f.id, 0.005, 0.4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGesture);
  }
}

TEST(Teleport, Examples) {
  const auto down = teleport_target(Ray::make({0, 1.7, 0}, {0, -1, 0}), 0.0, 20.0);
  ASSERT_TRUE(down);
  expect_near(*down, {0, 0, 0}, 1e-12);
  EXPECT_FALSE(teleport_target(Ray::make({0, 1.7, 0}, {0, 0.5, 0.866}), 0.0, 20.0));
  const auto slant = teleport_target(Ray::make({0, 1.7, 0}, {0, -1, 1}), 0.0, 20.0);
  ASSERT_TRUE(slant);
  expect_near(*slant, {0, 0, 1.7}, 1e-12);
  EXPECT_FALSE(teleport_target(Ray::make({0, 1.7, 0}, {0, -0.01, 1}), 0.0, 20.0));
}

TEST(Material, Examples) {
  Fixture f;
  const Material glass = set_material(f.scene, f.id, MaterialPreset::Glass);
  EXPECT_EQ(glass.preset, MaterialPreset::Glass);
  EXPECT_LE(glass.opacity, 0.5);
  EXPECT_DOUBLE_EQ(set_material(f.scene, f.id, MaterialPreset::Default, 1.3).opacity, 1.0);
  f.scene.set_material(f.id, set_material(f.scene, f.id, MaterialPreset::Brick));
  f.scene.set_material(f.id, set_material(f.scene, f.id, MaterialPreset::Default));
  EXPECT_EQ(f.scene.at(f.id).material.preset, MaterialPreset::Default);
  f.scene.set_material(f.id, glass);
  EXPECT_DOUBLE_EQ(set_opacity(f.scene, f.id, 0.9).opacity, 0.5);
  EXPECT_THROW(set_material(f.scene, 5, MaterialPreset::Glass), Error);
  EXPECT_THROW(set_opacity(f.scene, 5, 0.2), Error);
}

TEST(Properties, PushPullStaysOnRay) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-5.0, 5.0), d(-3.0, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const Ray ray = Ray::make({u(rng), u(rng), u(rng)}, random_unit(rng));
    Fixture f(Transform::translation(ray.at(std::abs(u(rng)) + 0.1)));
    const Vec3 before = f.scene.at(f.id).transform.position;
    const Transform after = push_pull(f.scene, f.id, ray, d(rng));
    const Vec3 step = after.position - before;
    EXPECT_LT(norm(step - dot(step, ray.direction) * ray.direction), 1e-9);
    EXPECT_GE(dot(after.position - ray.origin, ray.direction), kMinRayDistance - 1e-9);
  }
}

TEST(Properties, ResizeComposes) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> s(0.02, 50.0), span(0.01, 2.0);
  for (int i = 0; i < 10000; ++i) {
    Fixture f(Transform::uniform_scale(s(rng)));
    const double a0 = span(rng), a1 = span(rng), b0 = span(rng), b1 = span(rng);
    const Transform once = two_hand_resize(f.scene, f.id, a0, a1);
    Fixture g(once);
    const Transform twice = two_hand_resize(g.scene, g.id, b0, b1);
    const double expected = f.scene.at(f.id).transform.scale * (a1 / a0) * (b1 / b0);
    const double mid = f.scene.at(f.id).transform.scale * (a1 / a0);
    if (mid > kMinScale && mid < kMaxScale) {
      EXPECT_NEAR(twice.scale, std::clamp(expected, kMinScale, kMaxScale), 1e-9 * std::max(1.0, twice.scale));
    }
    EXPECT_EQ(twice.position, f.scene.at(f.id).transform.position);
    EXPECT_EQ(twice.rotation, f.scene.at(f.id).transform.rotation);
  }
}

TEST(Properties, GrabIsRigid) {
  std::mt19937_64 rng(43);
  const Mesh cube = oracle::unit_cube();
  for (int i = 0; i < 5000; ++i) {
    Fixture f(rigid(rng));
    const Transform h0 = rigid(rng);
    const GrabState g = grab_acquire(f.scene, 1, f.id, h0);
    f.scene.set_grab_owner(f.id, ClientId{1});
    const Transform h1 = rigid(rng);
    const Transform t0 = f.scene.at(f.id).transform;
    const Transform t1 = grab_update(f.scene, g, h1);
    for (const auto& p : cube.vertices) {
      const double d0 = norm(apply(t0, p) - h0.position);
      const double d1 = norm(apply(t1, p) - h1.position);
      EXPECT_NEAR(d1, d0, 1e-9 * std::max(1.0, d0));
    }
  }
}

TEST(Properties, TeleportOnPlaneAndOnRay) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(-5.0, 5.0), h(0.2, 3.0);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) {
    const double floor = u(rng) * 0.1;
    const Ray ray = Ray::make({u(rng), floor + h(rng), u(rng)}, random_unit(rng));
    const auto target = teleport_target(ray, floor, 20.0);
    if (!target) continue;
    ++hits;
    EXPECT_LT(std::abs(target->y - floor), 1e-9);
    const Vec3 w = *target - ray.origin;
    EXPECT_LT(norm(w - dot(w, ray.direction) * ray.direction), 1e-9);
    EXPECT_GT(dot(w, ray.direction), 0.0);
  }
  EXPECT_GT(hits, 1000);
}
