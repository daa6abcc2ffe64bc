#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tlfusion/detection.hpp"
#include "tlfusion/geometry.hpp"
#include "tlfusion/harness.hpp"
#include "tlfusion/hdmap.hpp"
#include "tlfusion/simulator.hpp"
#include "tlfusion/statefilter.hpp"
#include "tlfusion/tracker.hpp"

// JSON / JSONL wire formats. Parsers take the text plus an origin string
// (usually the file name) used in ParseError messages; JSONL errors also
// carry the 1-based line number.

namespace tlfusion {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

HdMap parse_map(std::string_view text, std::string_view origin = "map");
std::string serialize_map(const HdMap& map);

CameraModel parse_calibration(std::string_view text, std::string_view origin = "calibration");
std::string serialize_calibration(const CameraModel& camera);
/// Every *.json file in `dir`, sorted by camera_id.
std::vector<CameraModel> load_calibration_dir(const std::filesystem::path& dir);

/// One object per detection; a line {camera_id, t, empty: true} marks a camera
/// frame without detections. Times must be non-decreasing per camera. The
/// result is grouped per (t, camera_id) and sorted by that key.
std::vector<CameraFrameDetections> parse_detections(std::string_view text,
                                                    std::string_view origin = "detections");
std::string serialize_detections(std::span<const CameraFrameDetections> frames);

/// {t, quaternion: [w,x,y,z], translation: [x,y,z]} per line.
std::vector<TimedPose> parse_poses(std::string_view text, std::string_view origin = "poses");
std::string serialize_poses(std::span<const TimedPose> poses);

std::vector<FrameReport> parse_reports(std::string_view text, std::string_view origin = "reports");
std::string serialize_reports(std::span<const FrameReport> reports);

std::vector<GroundTruthFrame> parse_ground_truth(std::string_view text,
                                                 std::string_view origin = "ground_truth");
std::string serialize_ground_truth(std::span<const GroundTruthFrame> frames);

HmmConfig parse_hmm(std::string_view text, std::string_view origin = "hmm");
std::string serialize_hmm(const HmmConfig& config);
/// Loads <type>.json for each type present in `dir`; absent types keep the
/// defaults.
HmmSet load_hmm_dir(const std::filesystem::path& dir);

/// Unknown keys are rejected with ConfigError.
PipelineConfig parse_pipeline_config(std::string_view text, std::string_view origin = "config");

Scenario parse_scenario(std::string_view text, std::string_view origin = "scenario");

std::string serialize_eval_report(const EvalReport& report);
std::string serialize_stats(const RunStats& stats);
RunStats parse_stats(std::string_view text, std::string_view origin = "stats");

}  // namespace tlfusion
