#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "tlfusion/errors.hpp"
#include "tlfusion/geometry.hpp"

using namespace tlfusion;

namespace {

CameraIntrinsics k1000() { return {1000.0, 1000.0, 960.0, 600.0, 1920, 1200}; }

// UTM x forward maps to optical z; camera at the UTM origin.
RigidTransform forward_camera() {
  RigidTransform t;
  t.frame_from = "utm";
  t.frame_to = "cam";
  t.rotation = camera_mount_rotation(0.0);
  return t;
}

double yaw_of(const Quat& q) {
  const Vec3 x = q * Vec3::UnitX();
  return rad_to_deg(std::atan2(x.y(), x.x()));
}

Quat random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

TEST(InterpolatePose, ExactTimestampReturnsStoredPose) {
  const std::vector<TimedPose> buf = {{0.0, yaw_rotation(10.0), {1, 2, 3}},
                                      {1.0, yaw_rotation(20.0), {4, 5, 6}}};
  const TimedPose p = interpolate_pose(buf, 1.0);
  EXPECT_EQ(p.translation, buf[1].translation);
  EXPECT_EQ(p.rotation.coeffs(), buf[1].rotation.coeffs());
}

TEST(InterpolatePose, MidpointTranslationIsLinear) {
  const std::vector<TimedPose> buf = {{0.0, Quat::Identity(), {0, 0, 0}},
                                      {2.0, Quat::Identity(), {2, 0, 0}}};
  const TimedPose p = interpolate_pose(buf, 1.0);
  EXPECT_NEAR((p.translation - Vec3(1, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(InterpolatePose, MidpointOfQuarterTurnIsEighthTurn) {
  const std::vector<TimedPose> buf = {{0.0, Quat::Identity(), Vec3::Zero()},
                                      {1.0, yaw_rotation(90.0), Vec3::Zero()}};
  const TimedPose p = interpolate_pose(buf, 0.5);
  // Half-angle form of a 45 degree rotation about z.
  const double h = std::numbers::pi / 8.0;
  EXPECT_NEAR(std::abs(p.rotation.w()), std::cos(h), 1e-12);
  EXPECT_NEAR(std::abs(p.rotation.z()), std::sin(h), 1e-12);
  EXPECT_NEAR(yaw_of(p.rotation), 45.0, 1e-9);
}

TEST(InterpolatePose, OutsideSpanThrowsWithSpan) {
  const std::vector<TimedPose> buf = {{1.0, Quat::Identity(), Vec3::Zero()},
                                      {2.0, Quat::Identity(), Vec3::Zero()}};
  try {
    interpolate_pose(buf, 2.5);
    FAIL() << "expected ExtrapolationError";
  } catch (const ExtrapolationError& e) {
    EXPECT_EQ(e.query(), 2.5);
    EXPECT_EQ(e.span_begin(), 1.0);
    EXPECT_EQ(e.span_end(), 2.0);
  }
  EXPECT_THROW(interpolate_pose(buf, 0.999), ExtrapolationError);
}

TEST(InterpolatePose, ContinuousInTime) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<TimedPose> buf = {{0.0, random_rotation(rng), {u(rng), u(rng), u(rng)}},
                                        {1.0, random_rotation(rng), {u(rng), u(rng), u(rng)}}};
    const double t = 0.01 + 0.98 * u(rng);
    const double eps = 1e-7;
    const TimedPose a = interpolate_pose(buf, t - eps);
    const TimedPose b = interpolate_pose(buf, t + eps);
    EXPECT_LT((a.translation - b.translation).norm(), 1e-5);
    EXPECT_LT(a.rotation.angularDistance(b.rotation), 1e-5);
  }
}

TEST(PoseBuffer, RejectsNonIncreasingTimestamps) {
  EXPECT_THROW(PoseBuffer({{1.0, Quat::Identity(), Vec3::Zero()},
                           {1.0, Quat::Identity(), Vec3::Zero()}}),
               ValidationError);
}

TEST(PoseBuffer, RejectsNonUnitQuaternion) {
  EXPECT_THROW(PoseBuffer({{0.0, Quat(2, 0, 0, 0), Vec3::Zero()},
                           {1.0, Quat::Identity(), Vec3::Zero()}}),
               ValidationError);
}

TEST(PoseBuffer, BracketGapReportsSpacing) {
  const PoseBuffer buf({{0.0, Quat::Identity(), Vec3::Zero()},
                        {0.5, Quat::Identity(), Vec3::Zero()},
                        {2.0, Quat::Identity(), Vec3::Zero()}});
  EXPECT_DOUBLE_EQ(buf.bracket_gap(0.25), 0.5);
  EXPECT_DOUBLE_EQ(buf.bracket_gap(1.0), 1.5);
  EXPECT_DOUBLE_EQ(buf.bracket_gap(0.5), 0.0);
}

TEST(CameraFromUtm, IdentityChain) {
  const auto e = RigidTransform::identity("ins", "cam");
  const RigidTransform t = camera_from_utm(e, TimedPose{});
  EXPECT_NEAR(t.translation.norm(), 0.0, 1e-12);
  EXPECT_NEAR(t.rotation.angularDistance(Quat::Identity()), 0.0, 1e-12);
  EXPECT_EQ(t.frame_from, "utm");
  EXPECT_EQ(t.frame_to, "cam");
}

TEST(CameraFromUtm, PureVehicleTranslationInverts) {
  const auto e = RigidTransform::identity("ins", "cam");
  const RigidTransform t = camera_from_utm(e, TimedPose{0.0, Quat::Identity(), {5, 0, 0}});
  EXPECT_NEAR((t.translation - Vec3(-5, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(CameraFromUtm, ExtrinsicRotationPassesThrough) {
  RigidTransform e = RigidTransform::identity("ins", "cam");
  e.rotation = yaw_rotation(90.0);
  const RigidTransform t = camera_from_utm(e, TimedPose{});
  EXPECT_NEAR(yaw_of(t.rotation), 90.0, 1e-9);
}

TEST(CameraFromUtm, WrongSourceFrameIsAChainError) {
  const auto e = RigidTransform::identity("lidar", "cam");
  EXPECT_THROW(camera_from_utm(e, TimedPose{}), FrameChainError);
}

TEST(RigidTransform, ComposeWithInverseIsIdentity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int trial = 0; trial < 500; ++trial) {
    RigidTransform t;
    t.frame_from = "a";
    t.frame_to = "b";
    t.rotation = random_rotation(rng);
    t.translation = {u(rng), u(rng), u(rng)};
    const RigidTransform id = compose(t, t.inverse());
    EXPECT_LT(id.rotation.angularDistance(Quat::Identity()), 1e-9);
    EXPECT_LT(id.translation.norm(), 1e-9);
  }
}

TEST(CameraFromUtm, ChainConsistency) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int trial = 0; trial < 500; ++trial) {
    RigidTransform e = make_extrinsic("cam", {u(rng) / 50, u(rng) / 50, 1.5}, u(rng));
    const TimedPose pose{0.0, random_rotation(rng), {u(rng) * 100, u(rng) * 100, u(rng)}};
    const Vec3 p_ins(u(rng), u(rng), u(rng));
    const RigidTransform chain = compose(camera_from_utm(e, pose), as_transform(pose));
    EXPECT_LT((chain.apply(p_ins) - e.apply(p_ins)).norm(), 1e-9);
  }
}

TEST(ProjectPoint, OpticalAxisHitsPrincipalPoint) {
  const Pixel p = project_point(k1000(), {0, 0, 20});
  EXPECT_DOUBLE_EQ(p.u, 960.0);
  EXPECT_DOUBLE_EQ(p.v, 600.0);
}

TEST(ProjectPoint, OffAxisPoint) {
  const Pixel p = project_point(k1000(), {1, 0, 10});
  EXPECT_DOUBLE_EQ(p.u, 1060.0);
  EXPECT_DOUBLE_EQ(p.v, 600.0);
}

TEST(ProjectPoint, BehindCameraThrows) {
  EXPECT_THROW(project_point(k1000(), {0, 0, -5}), BehindCameraError);
  EXPECT_THROW(project_point(k1000(), {1, 1, 0}), BehindCameraError);
}

TEST(ProjectPoint, ScaleInvariantAlongRay) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> xy(-20.0, 20.0);
  std::uniform_real_distribution<double> z(0.1, 100.0);
  std::uniform_real_distribution<double> s(0.01, 100.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const Vec3 p(xy(rng), xy(rng), z(rng));
    const double scale = s(rng);
    const Pixel a = project_point(k1000(), p);
    const Pixel b = project_point(k1000(), scale * p);
    EXPECT_NEAR(a.u, b.u, 1e-9);
    EXPECT_NEAR(a.v, b.v, 1e-9);
  }
}

TEST(ProjectBox, UnitCubeOnAxisIsHundredPixels) {
  const OrientedBox cube{{10, 0, 0}, 180.0, 1.0, 1.0, 1.0};
  const auto box = project_box(cube, forward_camera(), k1000());
  ASSERT_TRUE(box.has_value());
  EXPECT_NEAR(box->h, 100.0, 1e-9);
  EXPECT_NEAR(box->w, 100.0, 1e-9);
  EXPECT_NEAR(box->cx, 960.0, 1e-9);
  EXPECT_NEAR(box->cy, 600.0, 1e-9);
}

TEST(ProjectBox, BehindCameraIsCulled) {
  const OrientedBox cube{{-10, 0, 0}, 0.0, 1.0, 1.0, 1.0};
  EXPECT_FALSE(project_box(cube, forward_camera(), k1000()).has_value());
}

TEST(ProjectBox, StraddlingImagePlaneIsCulled) {
  const OrientedBox cube{{0.2, 0, 0}, 0.0, 1.0, 1.0, 1.0};
  EXPECT_FALSE(project_box(cube, forward_camera(), k1000()).has_value());
}

TEST(ProjectBox, EntirelyLeftOfImageIsCulled) {
  // Optical x is UTM -y, so +y is image left; u < 0 needs |y| / x > 0.96.
  const OrientedBox cube{{10, 12, 0}, 180.0, 1.0, 1.0, 1.0};
  EXPECT_FALSE(project_box(cube, forward_camera(), k1000()).has_value());
}

TEST(ProjectBox, ContainsProjectedCentre) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> x(2.0, 80.0);
  std::uniform_real_distribution<double> y(-30.0, 30.0);
  std::uniform_real_distribution<double> h(0.0, 360.0);
  std::uniform_real_distribution<double> d(0.2, 1.5);
  int kept = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const OrientedBox b{{x(rng), y(rng), y(rng) / 5}, h(rng), d(rng), d(rng), d(rng)};
    const auto box = project_box(b, forward_camera(), k1000());
    if (!box) continue;
    ++kept;
    const Pixel c = project_point(k1000(), forward_camera().apply(b.centre));
    EXPECT_TRUE(box->contains(c, 1e-6));
  }
  EXPECT_GT(kept, 1000);
}

TEST(ClipToImage, ClipsPartialBox) {
  const auto clipped = clip_to_image(PixelBox{10.0, 600.0, 40.0, 60.0}, k1000());
  ASSERT_TRUE(clipped.has_value());
  EXPECT_DOUBLE_EQ(clipped->left(), 0.0);
  EXPECT_DOUBLE_EQ(clipped->right(), 40.0);
  EXPECT_DOUBLE_EQ(clipped->h, 40.0);
  EXPECT_FALSE(clip_to_image(PixelBox{-100.0, 600.0, 40.0, 60.0}, k1000()).has_value());
}

TEST(MakeExtrinsic, ForwardPointLandsOnOpticalAxis) {
  const RigidTransform e = make_extrinsic("cam", {1.5, 0.0, 1.5});
  const Vec3 p = e.apply({21.5, 0.0, 1.5});
  EXPECT_NEAR(p.x(), 0.0, 1e-12);
  EXPECT_NEAR(p.y(), 0.0, 1e-12);
  EXPECT_NEAR(p.z(), 20.0, 1e-12);
  // Up in the vehicle frame is up in the image (negative optical y).
  EXPECT_LT(e.apply({21.5, 0.0, 3.0}).y(), 0.0);
  // Left in the vehicle frame is image left (negative optical x).
  EXPECT_LT(e.apply({21.5, 1.0, 1.5}).x(), 0.0);
}

TEST(CameraModel, ValidatesFieldRanges) {
  CameraModel c{"cam", k1000(), make_extrinsic("cam", Vec3::Zero()), 64.0, 47.3};
  EXPECT_NO_THROW(c.validate());
  c.horizontal_fov_deg = 180.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c.horizontal_fov_deg = 47.3;
  c.max_range_m = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c.max_range_m = 64.0;
  c.intrinsics.cx = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
}
