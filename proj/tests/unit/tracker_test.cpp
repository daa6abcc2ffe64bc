#include <random>

#include <gtest/gtest.h>

#include "tlfusion/errors.hpp"
#include "tlfusion/tracker.hpp"

using namespace tlfusion;

namespace {

const CameraIntrinsics kK{1000, 1000, 960, 600, 1920, 1200};

RigidTransform forward_camera() {
  RigidTransform t;
  t.frame_from = "utm";
  t.frame_to = "cam";
  t.rotation = camera_mount_rotation(0.0);
  return t;
}

MapTrafficLight light(std::string id, Vec3 p = {30, 0, 3}, TlType type = TlType::kThreeBulb) {
  return {std::move(id), p, 180.0, 0.35, 0.76, 0.3, type};
}

Detection2D det(std::string camera, double t, TlClass c, PixelBox box = {960, 500, 25, 12}) {
  Detection2D d;
  d.camera_id = std::move(camera);
  d.timestamp = t;
  d.box = box;
  d.confidence = one_hot(c);
  return d;
}

CameraFrame camera_frame(std::string id) {
  return {std::move(id), kK, forward_camera(), {}, {}};
}

FrameInput seen(double t, const MapTrafficLight& l, TlClass c, std::string camera = "cam") {
  CameraFrame cf = camera_frame(camera);
  cf.matched.push_back({l, det(camera, t, c)});
  return {t, {cf}};
}

FrameInput blank(double t) { return {t, {camera_frame("cam")}}; }

Tracker make_tracker(SpatialIndex* index = nullptr) {
  return Tracker(TrackerConfig{}, FlashingConfig{}, HmmSet{}, TypeHeights{}, index);
}

}  // namespace

TEST(Tracker, BirthAfterTwoConsecutiveHits) {
  Tracker tracker = make_tracker();
  const auto l = light("a");
  EXPECT_TRUE(tracker.update(seen(0.0, l, TlClass::k3Red)).tracks.empty());
  const FrameReport r = tracker.update(seen(0.1, l, TlClass::k3Red));
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_EQ(r.tracks[0].light_id, "a");
  EXPECT_EQ(r.tracks[0].track_id, 1u);
  EXPECT_EQ(r.tracks[0].state, TlClass::k3Red);
}

TEST(Tracker, InterruptedHitsDelayBirth) {
  Tracker tracker = make_tracker();
  const auto l = light("a");
  tracker.update(seen(0.0, l, TlClass::k3Red));
  EXPECT_TRUE(tracker.update(blank(0.1)).tracks.empty());
  EXPECT_TRUE(tracker.update(seen(0.2, l, TlClass::k3Red)).tracks.empty());
  EXPECT_EQ(tracker.update(seen(0.3, l, TlClass::k3Red)).tracks.size(), 1u);
}

TEST(Tracker, ReportedThroughFifteenMissesDroppedAtSixteen) {
  Tracker tracker = make_tracker();
  const auto l = light("a");
  tracker.update(seen(0.0, l, TlClass::k3Red));
  tracker.update(seen(0.1, l, TlClass::k3Red));
  for (int miss = 1; miss <= 15; ++miss) {
    const FrameReport r = tracker.update(blank(0.1 + 0.1 * miss));
    ASSERT_EQ(r.tracks.size(), 1u) << "miss " << miss;
    EXPECT_EQ(r.tracks[0].state, TlClass::k3Red) << "miss " << miss;
  }
  EXPECT_TRUE(tracker.update(blank(1.7)).tracks.empty());
  const Track* track = tracker.find("a");
  ASSERT_NE(track, nullptr);
  EXPECT_EQ(track->position, l.position);
  EXPECT_FALSE(track->belief.has_value());
  EXPECT_TRUE(track->history.empty());
}

TEST(Tracker, RebirthGetsFreshIdAndPrior) {
  Tracker tracker = make_tracker();
  const auto l = light("a");
  tracker.update(seen(0.0, l, TlClass::k3Red));
  tracker.update(seen(0.1, l, TlClass::k3Red));
  for (int miss = 1; miss <= 16; ++miss) tracker.update(blank(0.1 + 0.1 * miss));
  EXPECT_TRUE(tracker.update(seen(2.0, l, TlClass::k3Green)).tracks.empty());
  const FrameReport r = tracker.update(seen(2.1, l, TlClass::k3Green));
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_EQ(r.tracks[0].track_id, 2u);
  EXPECT_EQ(r.tracks[0].state, TlClass::k3Green);
}

TEST(Tracker, SingleFrameFalsePositiveNeverReported) {
  Tracker tracker = make_tracker();
  const auto l = light("a");
  tracker.update(seen(0.0, l, TlClass::k3Red));
  for (int i = 1; i < 30; ++i) EXPECT_TRUE(tracker.update(blank(0.1 * i)).tracks.empty());
}

TEST(Tracker, TwoCamerasGiveTwoObservationsPerFrame) {
  Tracker tracker = make_tracker();
  const auto l = light("a");
  FrameInput f = seen(0.0, l, TlClass::k3Red, "long");
  f.cameras.push_back(seen(0.0, l, TlClass::k3Red, "wide").cameras[0]);
  tracker.update(f);
  const Track* track = tracker.find("a");
  ASSERT_NE(track, nullptr);
  EXPECT_EQ(track->history.size(), 2u);
  EXPECT_EQ(track->consecutive_hits, 1);
  EXPECT_EQ(track->history[0].camera_id, "long");
  EXPECT_EQ(track->history[1].camera_id, "wide");
}

TEST(Tracker, CameraOrderDoesNotChangeBelief) {
  const auto l = light("a");
  auto run = [&](bool reversed) {
    Tracker tracker = make_tracker();
    for (int i = 0; i < 5; ++i) {
      FrameInput a = seen(0.1 * i, l, TlClass::k3Red, "long");
      FrameInput b = seen(0.1 * i, l, i % 2 ? TlClass::k3Green : TlClass::k3Red, "wide");
      FrameInput f{0.1 * i, {}};
      f.cameras = reversed ? std::vector{b.cameras[0], a.cameras[0]}
                           : std::vector{a.cameras[0], b.cameras[0]};
      tracker.update(f);
    }
    return tracker.find("a")->belief->alpha;
  };
  EXPECT_EQ(run(false), run(true));
}

TEST(Tracker, IdsIncreaseAcrossLights) {
  Tracker tracker = make_tracker();
  const auto a = light("a");
  const auto b = light("b", {30, 5, 3});
  tracker.update(seen(0.0, a, TlClass::k3Red));
  tracker.update(seen(0.1, a, TlClass::k3Red));
  FrameInput f = seen(0.2, a, TlClass::k3Red);
  f.cameras[0].matched.push_back({b, det("cam", 0.2, TlClass::k3Green)});
  tracker.update(f);
  FrameInput g = seen(0.3, a, TlClass::k3Red);
  g.cameras[0].matched.push_back({b, det("cam", 0.3, TlClass::k3Green)});
  const FrameReport r = tracker.update(g);
  ASSERT_EQ(r.tracks.size(), 2u);
  EXPECT_EQ(r.tracks[0].track_id, 1u);
  EXPECT_EQ(r.tracks[0].light_id, "a");
  EXPECT_EQ(r.tracks[1].track_id, 2u);
  EXPECT_EQ(r.tracks[1].light_id, "b");
}

TEST(Tracker, FlashingOverridesArgmax) {
  Tracker tracker = make_tracker();
  const auto l = light("arrow", {30, 0, 3}, TlType::kFourArrow);
  FrameReport r;
  for (int i = 0; i < 40; ++i) {
    r = tracker.update(seen(0.1 * i, l, (i / 5) % 2 ? TlClass::k4Off : TlClass::k4Yleft2));
  }
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_TRUE(r.tracks[0].flashing);
  EXPECT_EQ(r.tracks[0].state, TlClass::k4Yleft2);
}

TEST(Tracker, UnmatchedDetectionSpawnsAtSecondFrame) {
  SpatialIndex index;
  Tracker tracker = make_tracker(&index);
  const OrientedBox truth{{30, 2, 3}, 180.0, 0.35, 0.76, 0.3};
  const auto box = project_box(truth, forward_camera(), kK);
  ASSERT_TRUE(box.has_value());
  FrameInput f{0.0, {camera_frame("cam")}};
  f.cameras[0].unmatched.push_back(det("cam", 0.0, TlClass::k3Green, *box));
  EXPECT_TRUE(tracker.update(f).tracks.empty());
  EXPECT_EQ(tracker.provisional_count(), 1u);
  f.timestamp = 0.1;
  f.cameras[0].unmatched[0].timestamp = 0.1;
  const FrameReport r = tracker.update(f);
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_FALSE(r.tracks[0].light_id.has_value());
  EXPECT_EQ(r.tracks[0].state, TlClass::k3Green);
  EXPECT_LT((r.tracks[0].position - truth.centre).norm(), 0.1 * 30.0);
  EXPECT_EQ(tracker.spawned_count(), 1u);
  EXPECT_EQ(index.size(), 1u);
  ASSERT_NE(index.find("spawn-1"), nullptr);
}

TEST(Tracker, DistantOrDifferentClassDetectionsDoNotLink) {
  SpatialIndex index;
  Tracker tracker = make_tracker(&index);
  FrameInput f{0.0, {camera_frame("cam")}};
  f.cameras[0].unmatched.push_back(det("cam", 0.0, TlClass::k3Green, {500, 400, 25, 12}));
  tracker.update(f);
  FrameInput g{0.1, {camera_frame("cam")}};
  g.cameras[0].unmatched.push_back(det("cam", 0.1, TlClass::k3Green, {530, 400, 25, 12}));
  g.cameras[0].unmatched.push_back(det("cam", 0.1, TlClass::k3Red, {500, 400, 25, 12}));
  EXPECT_TRUE(tracker.update(g).tracks.empty());
  EXPECT_EQ(tracker.spawned_count(), 0u);
}

TEST(Tracker, RandomFalsePositivesRarelySpawn) {
  SpatialIndex index;
  Tracker tracker = make_tracker(&index);
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1920.0);
  std::uniform_real_distribution<double> v(0.0, 1200.0);
  std::uniform_int_distribution<std::size_t> cls(0, kNumClasses - 1);
  for (int i = 0; i < 2000; ++i) {
    FrameInput f{0.1 * i, {camera_frame("cam")}};
    f.cameras[0].unmatched.push_back(
        det("cam", f.timestamp, class_at(cls(rng)), {u(rng), v(rng), 30, 14}));
    tracker.update(f);
  }
  EXPECT_EQ(tracker.spawned_count(), 0u);
}

TEST(TrackerConfig, Validation) {
  TrackerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.n_death = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  FlashingConfig f;
  f.window = 40;
  EXPECT_THROW(Tracker(TrackerConfig{}, f, HmmSet{}, TypeHeights{}), ValidationError);
}
