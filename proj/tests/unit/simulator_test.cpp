#include <algorithm>
#include <map>

#include <gtest/gtest.h>

#include "scenarios.hpp"
#include "tlfusion/errors.hpp"
#include "tlfusion/io.hpp"
#include "tlfusion/simulator.hpp"

using namespace tlfusion;

namespace {

Phase phase(TlClass s, double d) { return {s, d, std::nullopt}; }

Scenario two_light_scenario(NoiseModel noise) {
  return fixture::parked(
      {fixture::light("a", {30, 2, 5}), fixture::light("b", {40, -3, 5}, TlType::kFourArrow)},
      {fixture::steady("a", TlClass::k3Red), fixture::steady("b", TlClass::k4Gleft)},
      {fixture::camera("long"), fixture::camera("wide", {1.5, 0.0, 1.5}, 0.0, 64.0, 90.0, 600.0)},
      5.0, std::move(noise));
}

}  // namespace

TEST(Program, FlashingAtOneHertzHalfDuty) {
  LightProgram p{"x", {phase(TlClass::k4Rleft, 2.0),
                       {TlClass::k4Yleft2, 20.0, FlashingSpec{1.0, 0.5}},
                       phase(TlClass::k4Rleft, 1.0)}};
  for (int k = 0; k < 10; ++k) {
    const auto s = evaluate_program(p, 2.0 + k / 10.0);
    EXPECT_EQ(s.label, TlClass::k4Yleft2) << k;
    EXPECT_TRUE(s.flashing) << k;
    EXPECT_EQ(s.physical, k < 5 ? TlClass::k4Yleft2 : TlClass::k4Off) << k;
  }
  EXPECT_EQ(evaluate_program(p, 1.9).label, TlClass::k4Rleft);
  EXPECT_EQ(evaluate_program(p, 22.0).label, TlClass::k4Rleft);
  EXPECT_FALSE(evaluate_program(p, 22.0).flashing);
  EXPECT_EQ(evaluate_program(p, 1e6).label, TlClass::k4Rleft);
}

TEST(Program, PhaseBoundaries) {
  LightProgram p{"x", {phase(TlClass::k3Green, 20.0), phase(TlClass::k3Yellow, 4.0),
                       phase(TlClass::k3Red, 1.0)}};
  EXPECT_EQ(evaluate_program(p, 19.9).label, TlClass::k3Green);
  EXPECT_EQ(evaluate_program(p, 20.0).label, TlClass::k3Yellow);
  EXPECT_EQ(evaluate_program(p, 24.0).label, TlClass::k3Red);
  EXPECT_THROW(evaluate_program(LightProgram{"e", {}}, 0.0), ValidationError);
}

TEST(Program, ValidateRegulatedSequence) {
  EXPECT_TRUE(validate_program({"x", {phase(TlClass::k3Red, 5), phase(TlClass::k3Green, 5),
                                      phase(TlClass::k3Yellow, 5), phase(TlClass::k3Red, 5)}},
                               TlType::kThreeBulb)
                  .empty());
  const auto bad = validate_program(
      {"x", {phase(TlClass::k3Red, 5), phase(TlClass::k3Yellow, 5)}}, TlType::kThreeBulb);
  ASSERT_EQ(bad.size(), 1u);
  EXPECT_EQ(bad[0].index, 0u);
}

TEST(Program, ValidateRejectsWrongTypeAndBadFlashing) {
  EXPECT_FALSE(
      validate_program({"x", {phase(TlClass::k4Gleft, 5)}}, TlType::kThreeBulb).empty());
  EXPECT_FALSE(validate_program({"x", {{TlClass::k3Red, 5, FlashingSpec{1.0, 0.5}}}},
                                TlType::kThreeBulb)
                   .empty());
  EXPECT_FALSE(validate_program({"x", {{TlClass::k4Yleft2, 5, FlashingSpec{1.0, 0.8}}}},
                                TlType::kFourArrow)
                   .empty());
  EXPECT_TRUE(validate_program({"x", {{TlClass::k4Yleft2, 5, FlashingSpec{1.0, 2.0 / 3.0}}}},
                               TlType::kFourArrow)
                  .empty());
  EXPECT_FALSE(validate_program({"x", {phase(TlClass::k3Red, 0), phase(TlClass::k3Green, 1)}},
                                TlType::kThreeBulb)
                   .empty());
}

TEST(Trajectory, ConstantSpeedWithDwell) {
  const auto poses = sample_trajectory(
      {{{0, 0, 0}, 0, 1.0}, {{10, 0, 0}, 5.0, 2.0}, {{10, 10, 0}, 10.0, 0.0}}, 10.0, 6.0);
  ASSERT_EQ(poses.size(), 61u);
  EXPECT_NEAR(poses[5].translation.x(), 0.0, 1e-12);     // dwelling at start
  EXPECT_NEAR(poses[20].translation.x(), 5.0, 1e-12);    // t=2: 1 s into the 2 s leg
  EXPECT_NEAR(poses[40].translation.x(), 10.0, 1e-12);   // dwelling at the corner
  EXPECT_NEAR(poses[55].translation.y(), 5.0, 1e-12);    // t=5.5: half of the 1 s leg
  EXPECT_NEAR(poses[60].translation.y(), 10.0, 1e-12);
  const Vec3 fwd = poses[55].rotation * Vec3::UnitX();
  EXPECT_NEAR(fwd.y(), 1.0, 1e-12);
  EXPECT_NEAR((poses[5].rotation * Vec3::UnitX()).x(), 1.0, 1e-12);
}

TEST(Generate, Deterministic) {
  const Scenario s = two_light_scenario(fixture::noisy(0.8, 0.1, 0.5, 2.0, 99));
  const auto a = generate(s);
  const auto b = generate(s);
  EXPECT_EQ(serialize_detections(a.detections), serialize_detections(b.detections));
  EXPECT_EQ(serialize_ground_truth(a.ground_truth), serialize_ground_truth(b.ground_truth));
  Scenario other = s;
  other.noise.seed = 100;
  EXPECT_NE(serialize_detections(generate(other).detections), serialize_detections(a.detections));
}

TEST(Generate, NoiselessDetectionsEqualProjections) {
  const Scenario s = two_light_scenario(noiseless_model());
  const auto out = generate(s);
  ASSERT_EQ(out.detections.size(), s.frame_count() * 2);
  const PoseBuffer poses(s.trajectory);
  for (const auto& frame : out.detections) {
    const CameraModel& cam = frame.camera_id == "long" ? s.cameras[0] : s.cameras[1];
    const auto cam_from_utm = camera_from_utm(cam.extrinsic, poses.at(frame.timestamp));
    ASSERT_EQ(frame.detections.size(), 2u);
    for (const auto& d : frame.detections) {
      const bool arrow = d.detected_class() == TlClass::k4Gleft;
      EXPECT_TRUE(arrow || d.detected_class() == TlClass::k3Red);
      EXPECT_EQ(d.confidence[class_index(d.detected_class())], 1.0);
      const auto& light = s.world.lights[arrow ? 1 : 0];
      const auto box = project_box(light.box(), cam_from_utm, cam.intrinsics);
      ASSERT_TRUE(box.has_value());
      EXPECT_NEAR(d.box.cx, box->cx, 1e-9);
      EXPECT_NEAR(d.box.cy, box->cy, 1e-9);
      EXPECT_NEAR(d.box.h, box->h, 1e-9);
      EXPECT_NEAR(d.box.w, box->w, 1e-9);
    }
  }
}

TEST(Generate, OccludedLightsStayInGroundTruth) {
  Scenario s = two_light_scenario(noiseless_model());
  s.occlusions.push_back({"a", "", 1.0, 2.0});
  s.occlusions.push_back({"b", "wide", 0.0, 5.0});
  const auto out = generate(s);
  for (const auto& frame : out.ground_truth) {
    ASSERT_EQ(frame.lights.size(), 2u);
    const bool hidden = frame.timestamp >= 1.0 - 1e-9 && frame.timestamp < 2.0 - 1e-9;
    EXPECT_EQ(frame.lights[0].visible_in.empty(), hidden) << frame.timestamp;
    EXPECT_EQ(frame.lights[1].visible_in, std::vector<std::string>{"long"});
  }
  for (const auto& frame : out.detections) {
    const bool hidden = frame.timestamp >= 1.0 - 1e-9 && frame.timestamp < 2.0 - 1e-9;
    std::size_t expected = 2;
    if (hidden) --expected;
    if (frame.camera_id == "wide") --expected;
    EXPECT_EQ(frame.detections.size(), expected) << frame.camera_id << " " << frame.timestamp;
  }
}

TEST(Generate, OneFalsePositivePerCameraFrameAtRateOne) {
  Scenario s = two_light_scenario(fixture::noisy(1.0, 0.0, 1.0, 0.0, 5));
  const auto out = generate(s);
  for (const auto& frame : out.detections) {
    EXPECT_EQ(frame.detections.size(), 3u);
    const auto& fp = frame.detections.back();
    EXPECT_GE(fp.box.left(), 0.0);
    EXPECT_LE(fp.box.right(), 1920.0);
    EXPECT_GE(fp.box.top(), 0.0);
    EXPECT_LE(fp.box.bottom(), 1200.0);
  }
}

TEST(Generate, OmittedLightIsDetectedButNotPublished) {
  Scenario s = two_light_scenario(noiseless_model());
  s.omit_from_map = {"b"};
  const auto out = generate(s);
  ASSERT_EQ(out.map.lights.size(), 1u);
  EXPECT_EQ(out.map.lights[0].light_id, "a");
  EXPECT_EQ(out.detections[0].detections.size(), 2u);
  EXPECT_EQ(out.ground_truth[0].lights.size(), 2u);
}

TEST(Generate, EmpiricalConfusionMatchesModel) {
  // One steady light per class, all in view of a single camera.
  std::vector<MapTrafficLight> lights;
  std::vector<LightProgram> programs;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const TlClass c = class_at(i);
    const std::string id = "l" + std::to_string(i);
    lights.push_back(fixture::light(id, {40.0, -12.0 + 2.0 * static_cast<double>(i), 6.0},
                                    class_to_type(c)));
    programs.push_back(fixture::steady(id, c));
  }
  const double diagonal = 0.85;
  Scenario s = fixture::parked(std::move(lights), std::move(programs), {fixture::camera("cam")},
                               2000.0, fixture::noisy(diagonal, 0.0, 0.0, 0.0, 2024));
  const auto out = generate(s);
  ASSERT_EQ(out.detections.size(), 20000u);

  std::map<std::pair<TlClass, TlClass>, int> counts;
  for (const auto& frame : out.detections) {
    ASSERT_EQ(frame.detections.size(), kNumClasses);
  }
  // Detections are emitted in world order, so the i-th detection is light i.
  for (const auto& frame : out.detections) {
    for (std::size_t i = 0; i < kNumClasses; ++i) {
      ++counts[{class_at(i), frame.detections[i].detected_class()}];
    }
  }
  for (TlType t : kAllTypes) {
    const auto states = valid_states(t);
    const Eigen::MatrixXd& model = s.noise.of(t);
    for (std::size_t i = 0; i < states.size(); ++i) {
      for (std::size_t j = 0; j < states.size(); ++j) {
        const double freq = counts[{states[i], states[j]}] / 20000.0;
        EXPECT_NEAR(freq, model(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.01)
            << class_name(states[i]) << " -> " << class_name(states[j]);
      }
    }
  }
}

TEST(Generate, HmmCountsFollowTheSamplingModel) {
  const auto out = generate(two_light_scenario(fixture::noisy(0.9, 0.0, 0.0, 0.0, 1)));
  const auto& three = out.hmms[0];
  EXPECT_EQ(three.confusion_counts(0, 0), 9001);
  EXPECT_EQ(three.confusion_counts(0, 1), 501);
  EXPECT_NO_THROW(build_hmm(three));
}

TEST(Scenario, RejectsIllegalProgram) {
  Scenario s = two_light_scenario(noiseless_model());
  s.programs[0].phases = {phase(TlClass::k3Red, 1.0), phase(TlClass::k3Yellow, 1.0)};
  EXPECT_THROW(s.validate(), ScenarioValidationError);
}

TEST(Scenario, RejectsShortTrajectory) {
  Scenario s = two_light_scenario(noiseless_model());
  s.duration_s = 100.0;
  EXPECT_THROW(s.validate(), ScenarioValidationError);
}

TEST(Scenario, BenchmarkFileIsValid) {
  const Scenario s = fixture::benchmark_scenario();
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.cameras.size(), 2u);
  EXPECT_EQ(s.world.lights.size(), 6u);
}
