#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tlfusion/detection.hpp"
#include "tlfusion/geometry.hpp"
#include "tlfusion/hdmap.hpp"
#include "tlfusion/statefilter.hpp"

namespace tlfusion {

struct TrackerConfig {
  int n_birth_map = 2;
  int n_birth_2d = 2;
  int n_death = 15;
  std::size_t history_len = 30;
  /// Gate for linking unassociated detections frame to frame in one camera.
  double provisional_gate_px = 10.0;
  /// Gate for merging a new detection-spawned light with one spawned by
  /// another camera in the same frame.
  double spawn_merge_gate_px = 100.0;

  void validate() const;
};

struct Observation {
  double timestamp = 0.0;
  std::string camera_id;
  PixelBox box;
  TlClass detected_class = TlClass::kBackground;
  ConfidenceVector confidence{};

  static Observation from_detection(const Detection2D& d);
};

enum class TrackSource : std::uint8_t { kMapBacked, kDetectionSpawned };

struct Track {
  std::uint64_t track_id = 0;  // 0 until first birth
  TrackSource source = TrackSource::kMapBacked;
  std::string light_id;
  Vec3 position = Vec3::Zero();
  TlType type = TlType::kThreeBulb;
  std::deque<Observation> history;
  int consecutive_hits = 0;
  int missed_frames = 0;
  std::optional<BeliefState> belief;
  bool flashing = false;
  std::optional<TlClass> flashing_class;
  bool reported = false;
  FlashingLatch latch;

  /// Flashing class when flashing, else the belief argmax.
  TlClass state(const Hmm& hmm) const;
  std::vector<TlClass> detected_classes() const;
};

/// Appends one observation per camera detection, in ascending camera_id
/// order, and runs one forward update for each. With no observations the
/// frame counts as a miss: the hit streak resets and the belief is only
/// predicted. Returns the number of observations appended.
std::size_t fuse_frame_observations(Track& track, std::vector<Observation> observations,
                                    const Hmm& hmm, std::size_t history_len, double t);

/// A detection associated to a light (map or previously spawned) in one camera.
struct MatchedDetection {
  MapTrafficLight light;
  Detection2D detection;
};

struct CameraFrame {
  std::string camera_id;
  CameraIntrinsics intrinsics;
  RigidTransform cam_from_utm;
  std::vector<MatchedDetection> matched;
  std::vector<Detection2D> unmatched;
};

struct FrameInput {
  double timestamp = 0.0;
  std::vector<CameraFrame> cameras;
};

struct TrackReport {
  std::optional<std::uint64_t> track_id;
  std::optional<std::string> light_id;
  Vec3 position = Vec3::Zero();
  TlType type = TlType::kThreeBulb;
  TlClass state = TlClass::kBackground;
  bool flashing = false;
  std::vector<double> belief;
};

struct FrameReport {
  double timestamp = 0.0;
  std::vector<TrackReport> tracks;
};

/// Single-writer track store. Call `update` once per pipeline frame with the
/// per-camera association results.
class Tracker {
 public:
  Tracker(TrackerConfig config, FlashingConfig flashing, HmmSet hmms, TypeHeights heights,
          SpatialIndex* index = nullptr);

  FrameReport update(const FrameInput& frame);

  const Track* find(std::string_view light_id) const;
  std::vector<const Track*> tracks() const;
  std::size_t spawned_count() const;
  std::size_t provisional_count() const { return provisional_.size(); }
  const TrackerConfig& config() const { return config_; }

 private:
  struct Provisional {
    std::string camera_id;
    PixelBox box;
    TlClass detected_class = TlClass::kBackground;
    int hits = 0;
    std::vector<Observation> observations;
    std::vector<Vec3> positions;
  };

  void update_provisional(const CameraFrame& camera, double t,
                          std::vector<std::string>& spawned_this_frame);
  void spawn(const CameraFrame& camera, Provisional& candidate, double t,
             std::vector<std::string>& spawned_this_frame);
  TrackReport report_of(const Track& track) const;

  TrackerConfig config_;
  FlashingConfig flashing_;
  HmmSet hmms_;
  TypeHeights heights_;
  SpatialIndex* index_;
  std::map<std::string, Track> tracks_;
  std::vector<Provisional> provisional_;
  std::uint64_t next_track_id_ = 1;
  std::uint64_t next_spawn_id_ = 1;
};

}  // namespace tlfusion
