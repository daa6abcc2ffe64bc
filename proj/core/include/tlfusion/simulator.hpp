#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tlfusion/detection.hpp"
#include "tlfusion/geometry.hpp"
#include "tlfusion/hdmap.hpp"
#include "tlfusion/statefilter.hpp"

namespace tlfusion {

struct FlashingSpec {
  double frequency_hz = 1.0;
  double duty = 0.5;  // fraction of each period the bulb is lit
};

/// One phase of a light program. A flashing phase shows `state` for the
/// first `duty` of each period and the type's off state for the rest.
struct Phase {
  TlClass state = TlClass::k3Red;
  double duration_s = 0.0;
  std::optional<FlashingSpec> flashing;
};

struct LightProgram {
  std::string light_id;
  std::vector<Phase> phases;  // the last phase is held indefinitely
};

struct ProgramSample {
  TlClass label = TlClass::kBackground;     // ground-truth annotation
  TlClass physical = TlClass::kBackground;  // what the bulbs show
  bool flashing = false;
};

/// State of a program `t` seconds after its start. Throws ValidationError on
/// an empty program.
ProgramSample evaluate_program(const LightProgram& program, double t);

struct ProgramViolation {
  std::size_t index = 0;  // phase index of the offending transition or phase
  std::string message;
};

/// Regulated-sequence check over consecutive phases plus per-phase sanity
/// (type membership, positive durations, flashing duty and off-state support).
std::vector<ProgramViolation> validate_program(const LightProgram& program, TlType type);

struct Occlusion {
  std::string light_id;
  std::string camera_id;  // empty: every camera
  double start_s = 0.0;
  double end_s = 0.0;     // half-open [start, end)

  bool covers(std::string_view light, std::string_view camera, double t) const;
};

struct Waypoint {
  Vec3 position = Vec3::Zero();
  double speed_mps = 0.0;  // speed used to reach this waypoint
  double dwell_s = 0.0;    // wait after arriving
};

/// Constant-speed piecewise-linear route sampled at `rate_hz` from t = 0 until
/// at least `until_s`. Heading follows the current segment and is kept while
/// dwelling.
std::vector<TimedPose> sample_trajectory(const std::vector<Waypoint>& route, double rate_hz,
                                         double until_s);

struct NoiseModel {
  /// Per type, rows = true state, columns = observed state, over valid_states.
  std::array<Eigen::MatrixXd, 3> confusion;
  double miss_rate = 0.0;
  double fp_rate = 0.0;  // expected false positives per camera-frame
  double jitter_px = 0.0;
  /// Mass spread uniformly over all classes in emitted confidence vectors.
  double confidence_spread = 0.1;
  std::uint64_t seed = 0;

  const Eigen::MatrixXd& of(TlType t) const { return confusion[static_cast<std::size_t>(t)]; }
  void validate() const;
};

/// Row-stochastic sampling matrix with `diagonal` on the diagonal and the
/// remainder split evenly over the other states. Unless `on_off_errors` is
/// set, lit states are never observed as the off state and vice versa.
Eigen::MatrixXd uniform_error_confusion(TlType type, double diagonal, bool on_off_errors = false);

NoiseModel noiseless_model(std::uint64_t seed = 0);

struct Scenario {
  HdMap world;  // every physical light
  std::vector<std::string> omit_from_map;
  std::vector<TimedPose> trajectory;
  std::vector<CameraModel> cameras;
  std::vector<LightProgram> programs;
  std::vector<Occlusion> occlusions;
  double frame_rate_hz = 10.0;
  double duration_s = 0.0;
  double start_time_s = 0.0;
  NoiseModel noise;

  /// Throws ScenarioValidationError.
  void validate() const;
  /// The world minus the unmapped lights.
  HdMap published_map() const;
  std::size_t frame_count() const;
  double frame_time(std::size_t k) const;
};

struct GroundTruthLight {
  std::string light_id;
  Vec3 position = Vec3::Zero();
  TlClass true_state = TlClass::kBackground;
  bool flashing = false;
  std::vector<std::string> visible_in;
};

struct GroundTruthFrame {
  double timestamp = 0.0;
  std::vector<GroundTruthLight> lights;
};

struct SimulationOutput {
  HdMap map;
  std::vector<CameraModel> cameras;
  std::vector<TimedPose> poses;
  std::vector<CameraFrameDetections> detections;  // sorted by (t, camera_id)
  std::vector<GroundTruthFrame> ground_truth;
  std::array<HmmConfig, 3> hmms;
};

/// Deterministic for a given scenario, including its seed.
SimulationOutput generate(const Scenario& scenario);

/// Writes map.json, calib/<camera>.json, detections.jsonl, poses.jsonl,
/// ground_truth.jsonl and hmm/<type>.json under `dir`.
void write_simulation(const SimulationOutput& out, const std::filesystem::path& dir);

}  // namespace tlfusion
