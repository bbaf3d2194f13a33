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

#include <algorithm>

#include <gtest/gtest.h>

#include "ascribe/protocol/replica.hpp"
#include "ascribe/protocol/session.hpp"
#include "support/oracles.hpp"
#include "support/sim.hpp"

using namespace ascribe;
using namespace ascribe::protocol;

namespace {

template <typename T>
std::vector<T> of_kind(const std::vector<Outgoing>& out) {
  std::vector<T> r;
  for (const auto& o : out)
    if (const auto* m = std::get_if<T>(&o.event.payload)) r.push_back(*m);
  return r;
}

std::optional<OpRejected> rejection(const std::vector<Outgoing>& out) {
  auto r = of_kind<OpRejected>(out);
  if (r.empty()) return std::nullopt;
  return r.front();
}

struct Fixture {
  std::shared_ptr<MemoryAssetSource> assets = sim::demo_assets();
  Session session{assets, SessionOptions{"tok", false}};
  std::map<ClientId, std::uint64_t> seqs;

  ClientId join() {
    const ClientId c = session.connect();
    run(c, Hello{"x", "tok"});
    return c;
  }
  std::vector<Outgoing> run(ClientId c, OpPayload p) { return session.apply(c, {++seqs[c], std::move(p)}); }
  ObjectId import_cube(ClientId c) { return of_kind<ObjectAdded>(run(c, ImportAsset{"cube.stl"})).at(0).object.id; }
};

}  // namespace

TEST(Session, JoinSequence) {
  Fixture f;
  const ClientId a = f.session.connect();
  const auto out = f.run(a, Hello{"alice", "tok"});
  ASSERT_GE(out.size(), 4u);
  EXPECT_TRUE(std::holds_alternative<Welcome>(out[0].event.payload));
  EXPECT_EQ(std::get<Welcome>(out[0].event.payload).client, a);
  const auto& snap = std::get<SceneSnapshot>(out[1].event.payload);
  EXPECT_TRUE(snap.objects.empty());
  EXPECT_EQ(out[1].event.rev, 0u);
  EXPECT_EQ(std::get<AssetCatalog>(out[2].event.payload).assets.size(), 3u);
  EXPECT_TRUE(f.session.welcomed(a));
  EXPECT_EQ(f.session.avatars().size(), 1u);
}

TEST(Session, BadTokenAndOrdering) {
  Fixture f;
  const ClientId a = f.session.connect();
  auto rej = rejection(f.run(a, ListAssets{}));
  ASSERT_TRUE(rej);
  EXPECT_EQ(rej->reason, RejectReason::BadPayload);
  rej = rejection(f.run(a, Hello{"a", "wrong"}));
  ASSERT_TRUE(rej);
  EXPECT_TRUE(f.session.should_close(a));
  EXPECT_FALSE(f.session.welcomed(a));

  const ClientId b = f.join();
  EXPECT_TRUE(rejection(f.run(b, Hello{"b", "tok"})));
  const auto stale = f.session.apply(b, {1, ListAssets{}});
  ASSERT_TRUE(rejection(stale));
  EXPECT_EQ(rejection(stale)->seq, 1u);
}

TEST(Session, GrabContention) {
  Fixture f;
  const ClientId a = f.join(), b = f.join();
  const ObjectId obj = f.import_cube(a);
  const auto ra = f.run(a, GrabAcquire{obj, {}});
  const auto granted = of_kind<GrabChanged>(ra);
  ASSERT_EQ(granted.size(), 1u);
  EXPECT_EQ(granted[0].owner, a);
  EXPECT_TRUE(ra[0].broadcast());
  const auto rb = f.run(b, GrabAcquire{obj, {}});
  ASSERT_EQ(rb.size(), 1u);
  EXPECT_EQ(rb[0].to, b);
  EXPECT_EQ(rejection(rb)->reason, RejectReason::AlreadyGrabbed);
}

TEST(Session, LockedOpsNeedOwnership) {
  Fixture f;
  const ClientId a = f.join(), b = f.join();
  const ObjectId obj = f.import_cube(a);
  const Revision before = f.session.scene().revision();
  for (OpPayload p : {OpPayload{GrabMove{obj, {}}}, OpPayload{Resize{obj, 0.2, 0.4}},
                      OpPayload{PushPull{obj, {}, {0, 0, -1}, 0.1}}, OpPayload{GrabRelease{obj}}}) {
    const auto rej = rejection(f.run(b, p));
    ASSERT_TRUE(rej);
    EXPECT_EQ(rej->reason, RejectReason::NotGrabOwner);
  }
  EXPECT_EQ(rejection(f.run(b, GrabMove{999, {}}))->reason, RejectReason::UnknownObject);
  EXPECT_EQ(f.session.scene().revision(), before);
  // Lock-free ops still work for anyone.
  EXPECT_FALSE(rejection(f.run(b, SetMaterial{obj, MaterialPreset::Glass, std::nullopt})));
  EXPECT_FALSE(rejection(f.run(a, SetOpacity{obj, 0.9})));
  EXPECT_DOUBLE_EQ(f.session.scene().at(obj).material.opacity, 0.5);
}

TEST(Session, ResizeWhileOwningBumpsRevisionOnce) {
  Fixture f;
  const ClientId a = f.join();
  const ObjectId obj = f.import_cube(a);
  f.run(a, GrabAcquire{obj, {}});
  const Revision before = f.session.scene().revision();
  const auto out = f.run(a, Resize{obj, 0.2, 0.4});
  const auto changed = of_kind<TransformChanged>(out);
  ASSERT_EQ(changed.size(), 1u);
  EXPECT_DOUBLE_EQ(changed[0].transform.scale, 2.0);
  EXPECT_EQ(out[0].event.rev, before + 1);
  EXPECT_EQ(f.session.scene().revision(), before + 1);
  // The grab keeps the new scale when the hand moves.
  const auto moved = of_kind<TransformChanged>(f.run(a, GrabMove{obj, Transform::translation({0, 0, 1})}));
  EXPECT_DOUBLE_EQ(moved.at(0).transform.scale, 2.0);
  EXPECT_EQ(moved.at(0).transform.position, (Vec3{0, 0, 1}));
}

TEST(Session, AvatarPoseIsEphemeral) {
  Fixture f;
  const ClientId a = f.join();
  f.join();
  const Revision before = f.session.scene().revision();
  const auto out = f.run(a, AvatarPose{Transform::translation({1, 2, 3}), {}, {}});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].broadcast());
  EXPECT_EQ(f.session.scene().revision(), before);
  EXPECT_EQ(f.session.avatars().at(a).head.position, (Vec3{1, 2, 3}));
  EXPECT_EQ(rejection(f.run(a, AvatarPose{Transform{{}, UnitQuat{2, 0, 0, 0}, 1}, {}, {}}))->reason,
            RejectReason::BadPayload);
}

TEST(Session, TeleportMovesAvatarOnly) {
  Fixture f;
  const ClientId a = f.join();
  const auto out = f.run(a, Teleport{{0, 1.7, 0}, normalized(Vec3{0, -1, 1})});
  const auto moved = of_kind<AvatarMoved>(out);
  ASSERT_EQ(moved.size(), 1u);
  EXPECT_NEAR(moved[0].head.position.z, 1.7, 1e-12);
  EXPECT_NEAR(moved[0].head.position.y, kSpawnPoint.y, 1e-12);
  EXPECT_EQ(f.session.scene().revision(), 0u);
  EXPECT_TRUE(rejection(f.run(a, Teleport{{0, 1.7, 0}, {0, 1, 0}})));
}

TEST(Session, MultiPartImportAndRecenter) {
  auto assets = sim::demo_assets();
  Session s(assets, SessionOptions{"", true});
  const ClientId a = s.connect();
  s.apply(a, {1, Hello{"a", ""}});
  const auto added = of_kind<ObjectAdded>(s.apply(a, {2, ImportAsset{"pair.obj"}}));
  ASSERT_EQ(added.size(), 2u);
  EXPECT_EQ(added[0].object.name, "pair.obj/body");
  EXPECT_EQ(added[1].object.name, "pair.obj/tip");
  EXPECT_EQ(added[0].object.mesh_id, added[1].object.mesh_id);
  EXPECT_EQ(added[1].object.active_part, 1u);
  const Mesh pair = assets->load_mesh("pair.obj");
  const Vec3 center = apply(added[0].object.transform, bounds(pair).center());
  EXPECT_NEAR(center.x, 0.0, 1e-12);
  EXPECT_NEAR(center.y, 1.6, 1e-12);
  EXPECT_NEAR(center.z, -1.5, 1e-12);
  EXPECT_EQ(s.scene().revision(), 2u);
}

TEST(Session, ImportErrors) {
  Fixture f;
  f.assets->add_broken("bad.stl", Error(ErrorCode::TruncatedFile, "binary STL ends early"));
  f.assets->add_mesh("empty.obj", Mesh{});
  const ClientId a = f.join();
  auto rej = rejection(f.run(a, ImportAsset{"bad.stl"}));
  ASSERT_TRUE(rej);
  EXPECT_EQ(rej->reason, RejectReason::BadPayload);
  EXPECT_NE(rej->detail.find("TruncatedFile"), std::string::npos) << rej->detail;
  EXPECT_EQ(rejection(f.run(a, ImportAsset{"nope.stl"}))->reason, RejectReason::AssetNotFound);
  EXPECT_EQ(rejection(f.run(a, ImportAsset{"empty.obj"}))->reason, RejectReason::BadPayload);
  EXPECT_EQ(f.session.scene().revision(), 0u);
}

TEST(Session, CorruptedStlFileSurfacesParserError) {
  const auto dir = oracle::temp_dir("session_bad_stl");
  auto bytes = mesh_io::write_stl(oracle::unit_cube());
  bytes.resize(bytes.size() - 7);
  mesh_io::write_file(dir / "broken.stl", bytes);
  Session s(std::make_shared<DirectoryAssetSource>(dir));
  const ClientId a = s.connect();
  s.apply(a, {1, Hello{"a", ""}});
  const auto rej = rejection(s.apply(a, {2, ImportAsset{"broken.stl"}}));
  ASSERT_TRUE(rej);
  EXPECT_EQ(rej->reason, RejectReason::BadPayload);
  EXPECT_NE(rej->detail.find("TruncatedFile"), std::string::npos) << rej->detail;
  std::filesystem::remove_all(dir);
}

TEST(Session, StackPanelAndSegmentation) {
  Fixture f;
  const ClientId a = f.join();
  EXPECT_TRUE(rejection(f.run(a, SelectSlice{0})));
  PipelineParams p;
  const auto out = f.run(a, ImportStack{"ball", p});
  const auto slices = of_kind<SliceChanged>(out);
  ASSERT_EQ(slices.size(), 1u);
  EXPECT_EQ(slices[0].stack, (StackView{"ball", 8, 8, 8, 0}));
  const auto added = of_kind<ObjectAdded>(out);
  ASSERT_EQ(added.size(), 1u);
  EXPECT_EQ(added[0].object.name, "ball/voi_1");
  EXPECT_EQ(of_kind<SliceChanged>(f.run(a, SelectSlice{5})).at(0).stack.index, 5u);
  EXPECT_TRUE(rejection(f.run(a, SelectSlice{8})));
  EXPECT_TRUE(f.session.stack_volume("ball"));
}

TEST(Session, QuantifyReportsTransformedPart) {
  Fixture f;
  const ClientId a = f.join();
  const ObjectId obj = f.import_cube(a);
  f.run(a, GrabAcquire{obj, {}});
  f.run(a, Resize{obj, 0.1, 0.2});
  const auto out = f.run(a, RequestQuantify{obj});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].to, a);
  const auto& r = std::get<QuantifyResult>(out[0].event.payload).report;
  EXPECT_NEAR(*r.enclosed_volume, 8.0, 1e-9);
  EXPECT_NEAR(r.surface_area, 24.0, 1e-9);
}

TEST(Session, DisconnectReleasesGrabs) {
  Fixture f;
  const ClientId a = f.join(), b = f.join();
  const ObjectId o1 = f.import_cube(a), o2 = f.import_cube(a);
  f.run(a, GrabAcquire{o1, {}});
  f.run(a, GrabAcquire{o2, {}});
  const Revision before = f.session.scene().revision();
  const auto out = f.session.disconnect(a);
  const auto released = of_kind<GrabChanged>(out);
  ASSERT_EQ(released.size(), 2u);
  EXPECT_FALSE(released[0].owner);
  EXPECT_EQ(out[0].event.rev, before + 1);
  EXPECT_EQ(out[1].event.rev, before + 2);
  ASSERT_EQ(of_kind<AvatarMoved>(out).size(), 1u);
  EXPECT_TRUE(of_kind<AvatarMoved>(out)[0].gone);
  EXPECT_FALSE(rejection(f.run(b, GrabAcquire{o1, {}})));
  EXPECT_EQ(f.session.avatars().count(a), 0u);
}

TEST(Session, ThreeClientsReplayOracle) {
  sim::Harness h(71, 0.0);
  for (int i = 0; i < 3; ++i) h.join();
  for (int i = 0; i < 100; ++i) h.step(3, 3);
  EXPECT_TRUE(h.violations().empty());
  EXPECT_TRUE(h.converged());
  EXPECT_EQ(h.replay_log(), h.session().scene());
  for (const auto& [id, c] : h.clients()) EXPECT_EQ(c.replica.scene(), h.replay_log());
}

TEST(Session, LateJoinMatchesFullReplay) {
  sim::Harness h(72, 0.0);
  h.join();
  while (h.session().scene().revision() < 10) h.step(1, 1);
  const Revision at_join = h.session().scene().revision();
  const ClientId late = h.join();
  while (h.session().scene().revision() < at_join + 10) h.step(2, 2);
  EXPECT_EQ(h.clients().at(late).replica.scene(), h.replay_log());
  EXPECT_TRUE(h.converged());
}

TEST(Session, SnapshotsAtSameRevisionAreIdentical) {
  sim::Harness h(73, 0.0);
  h.join();
  for (int i = 0; i < 50; ++i) h.step(1, 1);
  const ServerEvent s1 = h.session().snapshot();
  const ServerEvent s2 = h.session().snapshot();
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(encode(s1), encode(s2));
  Replica fresh;
  fresh.apply(s1);
  EXPECT_EQ(fresh.scene(), h.session().scene());
}

TEST(Session, LossyDeliveryConverges) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    sim::Harness h(seed, 0.2);
    for (int i = 0; i < 2000; ++i) h.step(2, 6);
    h.catch_up_all();
    EXPECT_TRUE(h.violations().empty()) << h.violations().front();
    EXPECT_TRUE(h.converged()) << "seed " << seed;
    EXPECT_EQ(h.replay_log(), h.session().scene());
    EXPECT_GT(h.stats().dropped, 0u);
  }
}
