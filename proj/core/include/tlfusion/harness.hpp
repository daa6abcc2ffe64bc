#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tlfusion/association.hpp"
#include "tlfusion/detection.hpp"
#include "tlfusion/geometry.hpp"
#include "tlfusion/hdmap.hpp"
#include "tlfusion/simulator.hpp"
#include "tlfusion/statefilter.hpp"
#include "tlfusion/tracker.hpp"

namespace tlfusion {

enum class AblationMode : std::uint8_t { kOdOnly, kOdFusion, kOdFusionTracking };

/// CLI names: od, fusion, tracking.
std::string_view mode_name(AblationMode mode);
AblationMode mode_from_name(std::string_view name);

struct PipelineConfig {
  double gate_px = kDefaultGatePx;
  TrackerConfig tracker;
  FlashingConfig flashing;
  TypeHeights heights;
  /// Largest pose spacing allowed around any frame timestamp.
  double max_pose_gap_s = 0.5;
  HmmSet hmms;

  void validate() const;
};

struct PipelineInputs {
  HdMap map;
  std::vector<CameraModel> cameras;
  std::vector<CameraFrameDetections> detections;
  PoseBuffer poses;
};

/// Frames in (timestamp, camera_id) order. Throws PoseCoverageError for the
/// first frame the pose buffer cannot serve and ConfigError for an unknown
/// camera, both before any frame is processed.
std::vector<FrameReport> run_pipeline(const PipelineInputs& inputs, AblationMode mode,
                                      const PipelineConfig& config);

struct RunStats {
  std::size_t frames = 0;
  double wall_s = 0.0;
  double fps = 0.0;
};

/// As run_pipeline, also timing the frame loop (input loading excluded).
std::vector<FrameReport> run_pipeline_timed(const PipelineInputs& inputs, AblationMode mode,
                                            const PipelineConfig& config, RunStats& stats);

inline constexpr double kDefaultMatchRadiusM = 3.0;

struct LightBreakdown {
  std::size_t frames = 0;
  std::size_t matched = 0;
  std::size_t correct = 0;
  double ape_m = 0.0;
};

/// Confusion counts indexed by class_index; index 13 is background.
using EvalConfusion = Eigen::Matrix<std::int64_t, kNumClassesWithBackground,
                                    kNumClassesWithBackground, Eigen::RowMajor>;

struct EvalReport {
  double ape_m = 0.0;
  double class_accuracy = 0.0;
  EvalConfusion confusion = EvalConfusion::Zero();  // rows ground truth, columns reported
  std::size_t gt_light_frames = 0;
  std::size_t matched = 0;
  std::size_t correct = 0;
  std::size_t false_negatives = 0;
  std::size_t false_positives = 0;
  std::map<std::string, LightBreakdown> per_light;
  std::optional<double> fps;
};

/// Frame-wise one-to-one matching of reported tracks to ground-truth lights on
/// 3D distance within `match_radius_m`. Throws EvaluationError when the
/// ground truth holds no light-frames.
EvalReport evaluate(const std::vector<FrameReport>& reports,
                    const std::vector<GroundTruthFrame>& ground_truth,
                    double match_radius_m = kDefaultMatchRadiusM);

/// One row per ground-truth frame for a single light:
/// t, gt_state, od_state, pipeline_state, flashing_flag, occluded.
/// `od_reports` may be empty, leaving od_state blank. Throws EvaluationError
/// for a light that never appears in the ground truth.
std::string emit_sequence_csv(const std::vector<FrameReport>& reports,
                              const std::vector<FrameReport>& od_reports,
                              const std::vector<GroundTruthFrame>& ground_truth,
                              std::string_view light_id,
                              double match_radius_m = kDefaultMatchRadiusM);

}  // namespace tlfusion
