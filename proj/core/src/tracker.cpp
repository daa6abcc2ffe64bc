#include "tlfusion/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "tlfusion/association.hpp"
#include "tlfusion/errors.hpp"
#include "tlfusion/logging.hpp"

namespace tlfusion {
namespace {

constexpr double kSpawnedDepthM = 0.3;

void apply_observation(Track& track, const Observation& obs, const Hmm& hmm) {
  if (!track.belief) track.belief = initial_belief(hmm, obs.timestamp);
  Eigen::VectorXd evidence;
  try {
    evidence = build_evidence(hmm.confusion, restrict_confidence(obs.confidence, hmm.states));
  } catch (const NoEvidenceError&) {
    log_debug(fmt::format("light {}: observation without evidence skipped", track.light_id));
    return;
  }
  try {
    track.belief = forward_update(*track.belief, hmm.transition, evidence, obs.timestamp);
  } catch (const ImpossibleObservationError&) {
    log_warn(fmt::format("light {}: impossible observation at t={:.3f}, belief reset to prior",
                         track.light_id, obs.timestamp));
    track.belief = initial_belief(hmm, obs.timestamp);
  }
}

void predict_only(Track& track, const Hmm& hmm, double t) {
  if (!track.belief) return;
  const Eigen::VectorXd uniform = Eigen::VectorXd::Ones(track.belief->alpha.size());
  try {
    track.belief = forward_update(*track.belief, hmm.transition, uniform, t);
  } catch (const ImpossibleObservationError&) {
    track.belief = initial_belief(hmm, t);
  }
}

void push_history(Track& track, Observation obs, std::size_t history_len) {
  track.history.push_back(std::move(obs));
  while (track.history.size() > history_len) track.history.pop_front();
}

void discard_state(Track& track) {
  track.reported = false;
  track.track_id = 0;
  track.belief.reset();
  track.history.clear();
  track.latch.reset();
  track.flashing = false;
  track.flashing_class.reset();
}

}  // namespace

void TrackerConfig::validate() const {
  if (n_birth_map < 1 || n_birth_2d < 1 || n_death < 1 || history_len < 1) {
    throw ValidationError("tracker counters and history length must be >= 1");
  }
  if (!(provisional_gate_px > 0.0) || !(spawn_merge_gate_px > 0.0)) {
    throw ValidationError("tracker gates must be positive");
  }
}

Observation Observation::from_detection(const Detection2D& d) {
  return Observation{d.timestamp, d.camera_id, d.box, d.detected_class(), d.confidence};
}

TlClass Track::state(const Hmm& hmm) const {
  if (flashing && flashing_class) return *flashing_class;
  if (belief) return map_state(*belief, hmm.states);
  return history.empty() ? TlClass::kBackground : history.back().detected_class;
}

std::vector<TlClass> Track::detected_classes() const {
  std::vector<TlClass> out;
  out.reserve(history.size());
  for (const auto& obs : history) out.push_back(obs.detected_class);
  return out;
}

std::size_t fuse_frame_observations(Track& track, std::vector<Observation> observations,
                                    const Hmm& hmm, std::size_t history_len, double t) {
  if (observations.empty()) {
    ++track.missed_frames;
    track.consecutive_hits = 0;
    predict_only(track, hmm, t);
    return 0;
  }
  std::stable_sort(observations.begin(), observations.end(),
                   [](const Observation& a, const Observation& b) {
                     return a.camera_id < b.camera_id;
                   });
  for (auto& obs : observations) {
    apply_observation(track, obs, hmm);
    push_history(track, std::move(obs), history_len);
  }
  ++track.consecutive_hits;
  track.missed_frames = 0;
  return observations.size();
}

Tracker::Tracker(TrackerConfig config, FlashingConfig flashing, HmmSet hmms, TypeHeights heights,
                 SpatialIndex* index)
    : config_(config),
      flashing_(flashing),
      hmms_(std::move(hmms)),
      heights_(heights),
      index_(index) {
  config_.validate();
  flashing_.validate();
  if (flashing_.window > config_.history_len) {
    throw ValidationError("flashing window cannot exceed the observation history length");
  }
}

FrameReport Tracker::update(const FrameInput& frame) {
  const double t = frame.timestamp;
  std::vector<const CameraFrame*> cameras;
  cameras.reserve(frame.cameras.size());
  for (const auto& c : frame.cameras) cameras.push_back(&c);
  std::sort(cameras.begin(), cameras.end(),
            [](const CameraFrame* a, const CameraFrame* b) { return a->camera_id < b->camera_id; });

  // Associated detections, grouped per light in camera order.
  std::map<std::string, std::vector<Observation>> observed;
  for (const CameraFrame* camera : cameras) {
    for (const auto& m : camera->matched) {
      auto [it, inserted] = tracks_.try_emplace(m.light.light_id);
      if (inserted) {
        Track& track = it->second;
        track.source = TrackSource::kMapBacked;
        track.light_id = m.light.light_id;
        track.position = m.light.position;
        track.type = m.light.type;
      }
      observed[m.light.light_id].push_back(Observation::from_detection(m.detection));
    }
  }

  for (auto& [light_id, track] : tracks_) {
    const Hmm& hmm = hmms_.of(track.type);
    auto it = observed.find(light_id);
    std::vector<Observation> obs =
        it == observed.end() ? std::vector<Observation>{} : std::move(it->second);
    const std::size_t appended =
        fuse_frame_observations(track, std::move(obs), hmm, config_.history_len, t);

    const int birth = track.source == TrackSource::kMapBacked ? config_.n_birth_map
                                                              : config_.n_birth_2d;
    if (!track.reported && track.consecutive_hits >= birth) {
      track.reported = true;
      if (track.track_id == 0) track.track_id = next_track_id_++;
    }
    if (track.missed_frames > config_.n_death) {
      discard_state(track);
    } else if (appended > 0) {
      const auto classes = track.detected_classes();
      track.flashing_class = track.latch.update(classes, flashing_);
      track.flashing = track.flashing_class.has_value();
    }
  }

  std::vector<std::string> spawned_this_frame;
  for (const CameraFrame* camera : cameras) {
    update_provisional(*camera, t, spawned_this_frame);
  }

  FrameReport report{t, {}};
  for (const auto& [light_id, track] : tracks_) {
    if (track.reported) report.tracks.push_back(report_of(track));
  }
  std::sort(report.tracks.begin(), report.tracks.end(),
            [](const TrackReport& a, const TrackReport& b) { return a.track_id < b.track_id; });
  return report;
}

void Tracker::update_provisional(const CameraFrame& camera, double t,
                                 std::vector<std::string>& spawned_this_frame) {
  std::vector<Provisional> previous;
  std::vector<Provisional> others;
  for (auto& p : provisional_) {
    (p.camera_id == camera.camera_id ? previous : others).push_back(std::move(p));
  }

  // Gated L2 on the previous frame's boxes, restricted to the same detected class.
  CostMatrix costs(previous.size(), camera.unmatched.size());
  for (std::size_t i = 0; i < previous.size(); ++i) {
    for (std::size_t j = 0; j < camera.unmatched.size(); ++j) {
      const Detection2D& d = camera.unmatched[j];
      if (d.detected_class() != previous[i].detected_class) continue;
      const double dist = box_distance(previous[i].box, d.box);
      if (dist <= config_.provisional_gate_px) costs(i, j) = dist;
    }
  }
  const Assignment assignment = solve_assignment(costs);

  std::vector<Provisional> next;
  std::vector<bool> used(camera.unmatched.size(), false);
  for (const auto& [i, j] : assignment.pairs) {
    used[j] = true;
    Provisional p = std::move(previous[i]);
    const Detection2D& d = camera.unmatched[j];
    p.box = d.box;
    p.detected_class = d.detected_class();
    ++p.hits;
    p.observations.push_back(Observation::from_detection(d));
    p.positions.push_back(back_project(d, camera.intrinsics, camera.cam_from_utm,
                                       heights_.of(class_to_type(p.detected_class))));
    next.push_back(std::move(p));
  }
  for (std::size_t j = 0; j < camera.unmatched.size(); ++j) {
    if (used[j]) continue;
    const Detection2D& d = camera.unmatched[j];
    if (!(d.box.h > 0.0)) continue;
    Provisional p;
    p.camera_id = camera.camera_id;
    p.box = d.box;
    p.detected_class = d.detected_class();
    p.hits = 1;
    p.observations.push_back(Observation::from_detection(d));
    p.positions.push_back(back_project(d, camera.intrinsics, camera.cam_from_utm,
                                       heights_.of(class_to_type(p.detected_class))));
    next.push_back(std::move(p));
  }

  std::vector<Provisional> kept;
  for (auto& p : next) {
    if (p.hits >= config_.n_birth_2d) {
      spawn(camera, p, t, spawned_this_frame);
    } else {
      kept.push_back(std::move(p));
    }
  }
  provisional_ = std::move(others);
  for (auto& p : kept) provisional_.push_back(std::move(p));
}

void Tracker::spawn(const CameraFrame& camera, Provisional& candidate, double t,
                    std::vector<std::string>& spawned_this_frame) {
  const TlType type = class_to_type(candidate.detected_class);
  const Hmm& hmm = hmms_.of(type);

  // Another camera may already have spawned this light in the same frame.
  for (const auto& id : spawned_this_frame) {
    Track& existing = tracks_.at(id);
    if (existing.type != type) continue;
    const MapTrafficLight* light = index_ ? index_->find(id) : nullptr;
    OrientedBox box{existing.position, 0.0, 0.0, heights_.of(type), kSpawnedDepthM};
    if (light) box = light->box();
    const auto projected = project_box(box, camera.cam_from_utm, camera.intrinsics);
    if (!projected) continue;
    const auto clipped = clip_to_image(*projected, camera.intrinsics);
    if (!clipped || box_distance(*clipped, candidate.box) > config_.spawn_merge_gate_px) continue;
    for (const auto& obs : candidate.observations) {
      if (obs.timestamp == t) {
        apply_observation(existing, obs, hmm);
        push_history(existing, obs, config_.history_len);
      }
    }
    return;
  }

  Vec3 position = Vec3::Zero();
  for (const auto& p : candidate.positions) position += p;
  position /= static_cast<double>(candidate.positions.size());

  const PixelBox& last_box = candidate.observations.back().box;

  const RigidTransform utm_from_cam = camera.cam_from_utm.inverse();
  const Vec3 camera_centre = utm_from_cam.translation;
  const Vec3 to_camera = camera_centre - position;

  MapTrafficLight light;
  light.light_id = fmt::format("spawn-{}", next_spawn_id_++);
  light.position = position;
  light.heading_deg = rad_to_deg(std::atan2(to_camera.y(), to_camera.x()));
  light.height_m = heights_.of(type);
  const double depth = camera.intrinsics.fy * light.height_m / last_box.h;
  light.width_m = std::max(last_box.w * depth / camera.intrinsics.fx, 0.05);
  light.depth_m = kSpawnedDepthM;
  light.type = type;
  if (index_) index_->insert(light);

  Track track;
  track.source = TrackSource::kDetectionSpawned;
  track.light_id = light.light_id;
  track.position = position;
  track.type = type;
  for (const auto& obs : candidate.observations) {
    apply_observation(track, obs, hmm);
    push_history(track, obs, config_.history_len);
  }
  track.consecutive_hits = candidate.hits;
  track.missed_frames = 0;
  track.reported = true;
  track.track_id = next_track_id_++;
  track.flashing_class = track.latch.update(track.detected_classes(), flashing_);
  track.flashing = track.flashing_class.has_value();

  log_debug(fmt::format("spawned {} ({}) at t={:.3f}", light.light_id, type_name(type), t));
  spawned_this_frame.push_back(light.light_id);
  tracks_.emplace(light.light_id, std::move(track));
}

TrackReport Tracker::report_of(const Track& track) const {
  const Hmm& hmm = hmms_.of(track.type);
  TrackReport r;
  r.track_id = track.track_id;
  if (track.source == TrackSource::kMapBacked) r.light_id = track.light_id;
  r.position = track.position;
  r.type = track.type;
  r.state = track.state(hmm);
  r.flashing = track.flashing;
  if (track.belief) {
    r.belief.assign(track.belief->alpha.data(),
                    track.belief->alpha.data() + track.belief->alpha.size());
  }
  return r;
}

const Track* Tracker::find(std::string_view light_id) const {
  const auto it = tracks_.find(std::string(light_id));
  return it == tracks_.end() ? nullptr : &it->second;
}

std::vector<const Track*> Tracker::tracks() const {
  std::vector<const Track*> out;
  out.reserve(tracks_.size());
  for (const auto& [id, track] : tracks_) out.push_back(&track);
  return out;
}

std::size_t Tracker::spawned_count() const {
  return static_cast<std::size_t>(
      std::count_if(tracks_.begin(), tracks_.end(), [](const auto& entry) {
        return entry.second.source == TrackSource::kDetectionSpawned;
      }));
}

}  // namespace tlfusion
