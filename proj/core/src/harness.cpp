#include "tlfusion/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "tlfusion/errors.hpp"
#include "tlfusion/logging.hpp"

namespace tlfusion {
namespace {

constexpr double kTimeTolerance = 1e-6;

struct FrameGroup {
  double timestamp = 0.0;
  std::vector<const CameraFrameDetections*> cameras;  // sorted by camera_id
};

std::vector<FrameGroup> group_frames(const std::vector<CameraFrameDetections>& detections) {
  std::map<double, std::vector<const CameraFrameDetections*>> by_time;
  for (const auto& f : detections) by_time[f.timestamp].push_back(&f);
  std::vector<FrameGroup> out;
  out.reserve(by_time.size());
  for (auto& [t, frames] : by_time) {
    std::stable_sort(frames.begin(), frames.end(),
                     [](const auto* a, const auto* b) { return a->camera_id < b->camera_id; });
    out.push_back({t, std::move(frames)});
  }
  return out;
}

std::optional<TrackReport> back_projected_report(const Detection2D& d, const CameraModel& camera,
                                                 const RigidTransform& cam_from_utm,
                                                 const TypeHeights& heights) {
  const TlClass cls = d.detected_class();
  if (cls == TlClass::kBackground) return std::nullopt;
  const TlType type = class_to_type(cls);
  try {
    TrackReport r;
    r.position = back_project(d, camera.intrinsics, cam_from_utm, heights.of(type));
    r.type = type;
    r.state = cls;
    return r;
  } catch (const DegenerateBoxError& e) {
    log_debug(fmt::format("{} at t={}: {}", camera.camera_id, d.timestamp, e.what()));
    return std::nullopt;
  }
}

struct Associated {
  std::vector<MatchedDetection> matched;
  std::vector<Detection2D> unmatched;
};

Associated associate(const std::vector<MapTrafficLight>& visible,
                     const std::vector<Detection2D>& detections, const CameraModel& camera,
                     const RigidTransform& cam_from_utm, double gate_px) {
  std::vector<const MapTrafficLight*> lights;
  std::vector<ProjectedLight> projected;
  for (const auto& light : visible) {
    const auto box = project_box(light.box(), cam_from_utm, camera.intrinsics);
    if (!box) continue;
    const auto clipped = clip_to_image(*box, camera.intrinsics);
    if (!clipped) continue;
    lights.push_back(&light);
    projected.push_back({*clipped, light.type});
  }
  const CostMatrix costs = build_cost_matrix(projected, detections, gate_px);
  const Assignment assignment = solve_assignment(costs);

  Associated out;
  std::vector<bool> used(detections.size(), false);
  for (const auto& [i, j] : assignment.pairs) {
    used[j] = true;
    out.matched.push_back({*lights[i], detections[j]});
  }
  for (std::size_t j = 0; j < detections.size(); ++j) {
    if (!used[j] && detections[j].detected_class() != TlClass::kBackground) {
      out.unmatched.push_back(detections[j]);
    }
  }
  return out;
}

void check_inputs(const PipelineInputs& inputs, const std::vector<FrameGroup>& frames,
                  const std::map<std::string, const CameraModel*>& cameras,
                  const PipelineConfig& config) {
  for (const auto& f : inputs.detections) {
    if (!cameras.count(f.camera_id)) {
      throw ConfigError(fmt::format("detections reference unknown camera_id '{}'", f.camera_id));
    }
  }
  for (const auto& frame : frames) {
    const double t = frame.timestamp;
    if (inputs.poses.empty() || t < inputs.poses.begin_time() || t > inputs.poses.end_time() ||
        inputs.poses.bracket_gap(t) > config.max_pose_gap_s) {
      throw PoseCoverageError(t);
    }
  }
}

std::vector<FrameReport> run_frames(const PipelineInputs& inputs, AblationMode mode,
                                    const PipelineConfig& config, RunStats* stats) {
  config.validate();
  inputs.map.validate();
  std::map<std::string, const CameraModel*> cameras;
  for (const auto& c : inputs.cameras) {
    c.validate();
    if (!cameras.emplace(c.camera_id, &c).second) {
      throw ConfigError(fmt::format("duplicate calibration for camera '{}'", c.camera_id));
    }
  }
  std::vector<CameraModel> ordered;
  for (const auto& [id, c] : cameras) ordered.push_back(*c);

  const auto frames = group_frames(inputs.detections);
  check_inputs(inputs, frames, cameras, config);

  SpatialIndex index(inputs.map);
  Tracker tracker(config.tracker, config.flashing, config.hmms, config.heights, &index);

  std::vector<FrameReport> reports;
  reports.reserve(frames.size());
  const auto start = std::chrono::steady_clock::now();
  for (const auto& frame : frames) {
    const double t = frame.timestamp;
    const TimedPose pose = inputs.poses.at(t);
    FrameReport report{t, {}};

    if (mode == AblationMode::kOdOnly) {
      for (const auto* cf : frame.cameras) {
        const CameraModel& camera = *cameras.at(cf->camera_id);
        const RigidTransform cam_from_utm = camera_from_utm(camera.extrinsic, pose);
        for (const auto& d : cf->detections) {
          if (auto r = back_projected_report(d, camera, cam_from_utm, config.heights)) {
            report.tracks.push_back(std::move(*r));
          }
        }
      }
      reports.push_back(std::move(report));
      continue;
    }

    const auto visible = query_visible(index, pose, ordered);
    FrameInput input{t, {}};
    for (const auto* cf : frame.cameras) {
      const auto pos = static_cast<std::size_t>(std::distance(
          cameras.begin(), cameras.find(cf->camera_id)));
      const CameraModel& camera = ordered[pos];
      const RigidTransform cam_from_utm = camera_from_utm(camera.extrinsic, pose);
      Associated assoc =
          associate(visible[pos].lights, cf->detections, camera, cam_from_utm, config.gate_px);

      if (mode == AblationMode::kOdFusion) {
        for (const auto& m : assoc.matched) {
          TrackReport r;
          r.light_id = m.light.light_id;
          r.position = m.light.position;
          r.type = m.light.type;
          r.state = m.detection.detected_class();
          report.tracks.push_back(std::move(r));
        }
        for (const auto& d : assoc.unmatched) {
          if (auto r = back_projected_report(d, camera, cam_from_utm, config.heights)) {
            report.tracks.push_back(std::move(*r));
          }
        }
        continue;
      }
      input.cameras.push_back(CameraFrame{camera.camera_id, camera.intrinsics, cam_from_utm,
                                          std::move(assoc.matched), std::move(assoc.unmatched)});
    }
    if (mode == AblationMode::kOdFusionTracking) report = tracker.update(input);
    reports.push_back(std::move(report));
  }
  if (stats) {
    stats->frames = frames.size();
    stats->wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    stats->fps = stats->wall_s > 0.0 ? static_cast<double>(stats->frames) / stats->wall_s : 0.0;
  }
  log_info(fmt::format("{} mode: {} frames, {} spawned lights", mode_name(mode), frames.size(),
                       tracker.spawned_count()));
  return reports;
}

const FrameReport* find_frame(const std::map<double, const FrameReport*>& frames, double t) {
  auto it = frames.lower_bound(t - kTimeTolerance);
  if (it == frames.end() || it->first > t + kTimeTolerance) return nullptr;
  return it->second;
}

std::size_t confusion_index(TlClass c) { return class_index(c); }

}  // namespace

std::string_view mode_name(AblationMode mode) {
  switch (mode) {
    case AblationMode::kOdOnly: return "od";
    case AblationMode::kOdFusion: return "fusion";
    case AblationMode::kOdFusionTracking: return "tracking";
  }
  return "od";
}

AblationMode mode_from_name(std::string_view name) {
  if (name == "od" || name == "od_only") return AblationMode::kOdOnly;
  if (name == "fusion" || name == "od_fusion") return AblationMode::kOdFusion;
  if (name == "tracking" || name == "od_fusion_tracking") return AblationMode::kOdFusionTracking;
  throw ConfigError(fmt::format("unknown mode '{}' (expected od, fusion or tracking)", name));
}

void PipelineConfig::validate() const {
  if (!(gate_px > 0.0)) throw ConfigError("gate_px must be positive");
  if (!(max_pose_gap_s > 0.0)) throw ConfigError("max_pose_gap_s must be positive");
  for (TlType t : kAllTypes) {
    if (!(heights.of(t) > 0.0)) throw ConfigError("type heights must be positive");
  }
  try {
    tracker.validate();
    flashing.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

std::vector<FrameReport> run_pipeline(const PipelineInputs& inputs, AblationMode mode,
                                      const PipelineConfig& config) {
  return run_frames(inputs, mode, config, nullptr);
}

std::vector<FrameReport> run_pipeline_timed(const PipelineInputs& inputs, AblationMode mode,
                                            const PipelineConfig& config, RunStats& stats) {
  return run_frames(inputs, mode, config, &stats);
}

EvalReport evaluate(const std::vector<FrameReport>& reports,
                    const std::vector<GroundTruthFrame>& ground_truth, double match_radius_m) {
  if (!(match_radius_m > 0.0)) throw EvaluationError("match radius must be positive");
  std::size_t total = 0;
  for (const auto& g : ground_truth) total += g.lights.size();
  if (total == 0) throw EvaluationError("ground truth contains no light-frames");

  std::map<double, const FrameReport*> by_time;
  for (const auto& r : reports) {
    if (!by_time.emplace(r.timestamp, &r).second) {
      throw EvaluationError(fmt::format("duplicate report frame at t={}", r.timestamp));
    }
  }

  EvalReport out;
  const std::size_t bg = confusion_index(TlClass::kBackground);
  double ape_sum = 0.0;
  std::map<std::string, double> light_ape;
  std::vector<const FrameReport*> consumed;

  for (const auto& gt : ground_truth) {
    const FrameReport* frame = find_frame(by_time, gt.timestamp);
    static const std::vector<TrackReport> kNone;
    const auto& tracks = frame ? frame->tracks : kNone;
    if (frame) consumed.push_back(frame);

    CostMatrix costs(gt.lights.size(), tracks.size());
    for (std::size_t i = 0; i < gt.lights.size(); ++i) {
      for (std::size_t j = 0; j < tracks.size(); ++j) {
        const double d = (gt.lights[i].position - tracks[j].position).norm();
        if (d <= match_radius_m) costs(i, j) = d;
      }
    }
    const Assignment assignment = solve_assignment(costs);
    std::vector<bool> gt_matched(gt.lights.size(), false);
    std::vector<bool> track_matched(tracks.size(), false);
    for (const auto& [i, j] : assignment.pairs) {
      gt_matched[i] = true;
      track_matched[j] = true;
      const GroundTruthLight& g = gt.lights[i];
      const TrackReport& r = tracks[j];
      const double d = costs(i, j);
      ape_sum += d;
      ++out.matched;
      ++out.confusion(confusion_index(g.true_state), confusion_index(r.state));
      const bool correct = r.state == g.true_state && (!g.flashing || r.flashing);
      auto& light = out.per_light[g.light_id];
      ++light.frames;
      ++light.matched;
      light_ape[g.light_id] += d;
      if (correct) {
        ++out.correct;
        ++light.correct;
      }
    }
    for (std::size_t i = 0; i < gt.lights.size(); ++i) {
      if (gt_matched[i]) continue;
      ++out.false_negatives;
      ++out.confusion(confusion_index(gt.lights[i].true_state), bg);
      ++out.per_light[gt.lights[i].light_id].frames;
    }
    for (std::size_t j = 0; j < tracks.size(); ++j) {
      if (track_matched[j]) continue;
      ++out.false_positives;
      ++out.confusion(bg, confusion_index(tracks[j].state));
    }
  }
  // Report frames with no ground-truth frame contribute only false positives.
  for (const auto& r : reports) {
    if (std::find(consumed.begin(), consumed.end(), &r) != consumed.end()) continue;
    for (const auto& track : r.tracks) {
      ++out.false_positives;
      ++out.confusion(bg, confusion_index(track.state));
    }
  }

  out.gt_light_frames = total;
  out.class_accuracy = static_cast<double>(out.correct) / static_cast<double>(total);
  out.ape_m = out.matched ? ape_sum / static_cast<double>(out.matched) : 0.0;
  for (auto& [id, light] : out.per_light) {
    light.ape_m = light.matched ? light_ape[id] / static_cast<double>(light.matched) : 0.0;
  }
  return out;
}

std::string emit_sequence_csv(const std::vector<FrameReport>& reports,
                              const std::vector<FrameReport>& od_reports,
                              const std::vector<GroundTruthFrame>& ground_truth,
                              std::string_view light_id, double match_radius_m) {
  std::optional<Vec3> position;
  for (const auto& g : ground_truth) {
    for (const auto& l : g.lights) {
      if (l.light_id == light_id) {
        position = l.position;
        break;
      }
    }
    if (position) break;
  }
  if (!position) {
    throw EvaluationError(fmt::format("light '{}' never appears in the ground truth", light_id));
  }

  std::map<double, const FrameReport*> pipeline;
  for (const auto& r : reports) pipeline.emplace(r.timestamp, &r);
  std::map<double, const FrameReport*> od;
  for (const auto& r : od_reports) od.emplace(r.timestamp, &r);

  // Tracks carrying the light id win; otherwise the nearest within the radius.
  auto pick = [&](const FrameReport* frame) -> const TrackReport* {
    if (!frame) return nullptr;
    for (const auto& t : frame->tracks) {
      if (t.light_id && *t.light_id == light_id) return &t;
    }
    const TrackReport* best = nullptr;
    double best_d = match_radius_m;
    for (const auto& t : frame->tracks) {
      const double d = (t.position - *position).norm();
      if (d <= best_d) {
        best = &t;
        best_d = d;
      }
    }
    return best;
  };

  std::string csv = "t,gt_state,od_state,pipeline_state,flashing_flag,occluded\n";
  for (const auto& g : ground_truth) {
    const GroundTruthLight* gt = nullptr;
    for (const auto& l : g.lights) {
      if (l.light_id == light_id) gt = &l;
    }
    const TrackReport* p = pick(find_frame(pipeline, g.timestamp));
    const TrackReport* o = od_reports.empty() ? nullptr : pick(find_frame(od, g.timestamp));
    csv += fmt::format("{},{},{},{},{},{}\n", g.timestamp, gt ? class_name(gt->true_state) : "",
                       o ? class_name(o->state) : "", p ? class_name(p->state) : "",
                       p && p->flashing ? 1 : 0, gt && gt->visible_in.empty() ? 1 : 0);
  }
  return csv;
}

}  // namespace tlfusion
