#include "tlfusion/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "tlfusion/errors.hpp"
#include "tlfusion/io.hpp"
#include "tlfusion/rng.hpp"

namespace tlfusion {
namespace {

constexpr double kTimeEps = 1e-9;
constexpr std::int64_t kCountScale = 10000;

// Stream tags so that draws for different purposes never share a key.
constexpr std::uint64_t kTagLight = 1;
constexpr std::uint64_t kTagFalsePositive = 2;

std::optional<TlClass> off_state(TlType type) {
  if (type == TlType::kFourArrow) return TlClass::k4Off;
  return std::nullopt;
}

struct Segment {
  double t0 = 0.0;
  double t1 = 0.0;
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double yaw_deg = 0.0;
};

struct Projection {
  std::size_t light = 0;
  PixelBox box;
};

struct SizeRange {
  double h_min = 10.0;
  double h_max = 80.0;
  double aspect_min = 0.3;  // w / h
  double aspect_max = 1.0;
  bool seen = false;

  void add(const PixelBox& b) {
    const double aspect = b.w / b.h;
    if (!seen) {
      h_min = h_max = b.h;
      aspect_min = aspect_max = aspect;
      seen = true;
      return;
    }
    h_min = std::min(h_min, b.h);
    h_max = std::max(h_max, b.h);
    aspect_min = std::min(aspect_min, aspect);
    aspect_max = std::max(aspect_max, aspect);
  }
};

ConfidenceVector soft_confidence(TlClass observed, double spread) {
  ConfidenceVector x = one_hot(observed);
  for (double& v : x) v = (1.0 - spread) * v + spread / static_cast<double>(kNumClasses);
  return x;
}

}  // namespace

ProgramSample evaluate_program(const LightProgram& program, double t) {
  if (program.phases.empty()) {
    throw ValidationError(fmt::format("program for {} has no phases", program.light_id));
  }
  double start = 0.0;
  std::size_t i = 0;
  for (; i + 1 < program.phases.size(); ++i) {
    const double end = start + program.phases[i].duration_s;
    if (t < end - kTimeEps) break;
    start = end;
  }
  const Phase& phase = program.phases[i];
  ProgramSample s{phase.state, phase.state, false};
  if (phase.flashing) {
    s.flashing = true;
    const double cycles = std::max(0.0, t - start) * phase.flashing->frequency_hz;
    const double frac = cycles - std::floor(cycles + kTimeEps);
    const bool lit = frac < phase.flashing->duty - kTimeEps;
    if (!lit) s.physical = off_state(class_to_type(phase.state)).value_or(phase.state);
  }
  return s;
}

std::vector<ProgramViolation> validate_program(const LightProgram& program, TlType type) {
  std::vector<ProgramViolation> out;
  const auto& phases = program.phases;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const Phase& p = phases[i];
    if (p.state == TlClass::kBackground || class_to_type(p.state) != type) {
      out.push_back({i, fmt::format("{} is not a {} state", class_name(p.state), type_name(type))});
      continue;
    }
    const bool last = i + 1 == phases.size();
    if (!(p.duration_s > 0.0) && !(last && p.duration_s >= 0.0)) {
      out.push_back({i, fmt::format("phase duration {} must be positive", p.duration_s)});
    }
    if (p.flashing) {
      if (!off_state(type)) {
        out.push_back({i, fmt::format("{} has no off state to flash against", type_name(type))});
      }
      if (!is_on(p.state)) out.push_back({i, "flashing phase must name a lit state"});
      if (p.flashing->duty < 0.5 - kTimeEps || p.flashing->duty > 2.0 / 3.0 + kTimeEps) {
        out.push_back({i, fmt::format("flashing duty {} outside [1/2, 2/3]", p.flashing->duty)});
      }
      if (!(p.flashing->frequency_hz > 0.0)) {
        out.push_back({i, "flashing frequency must be positive"});
      }
    }
  }
  for (std::size_t i = 0; i + 1 < phases.size(); ++i) {
    const TlClass from = phases[i].state;
    const TlClass to = phases[i + 1].state;
    if (from == TlClass::kBackground || to == TlClass::kBackground) continue;
    if (class_to_type(from) != type || class_to_type(to) != type) continue;
    if (!is_legal_transition(from, to)) {
      out.push_back({i, fmt::format("{} -> {} is not a regulated transition", class_name(from),
                                    class_name(to))});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ProgramViolation& a, const ProgramViolation& b) {
                     return a.index < b.index;
                   });
  return out;
}

bool Occlusion::covers(std::string_view light, std::string_view camera, double t) const {
  return light == light_id && (camera_id.empty() || camera == camera_id) && t >= start_s - kTimeEps &&
         t < end_s - kTimeEps;
}

std::vector<TimedPose> sample_trajectory(const std::vector<Waypoint>& route, double rate_hz,
                                         double until_s) {
  if (route.empty()) throw ScenarioValidationError("route needs at least one waypoint");
  if (!(rate_hz > 0.0)) throw ScenarioValidationError("pose rate must be positive");

  std::vector<Segment> segments;
  double t = 0.0;
  double yaw = 0.0;
  bool yaw_set = false;
  auto dwell = [&](const Vec3& p, double d) {
    if (d > 0.0) {
      segments.push_back({t, t + d, p, p, yaw});
      t += d;
    }
  };
  dwell(route.front().position, route.front().dwell_s);
  for (std::size_t i = 1; i < route.size(); ++i) {
    const Vec3& a = route[i - 1].position;
    const Vec3& b = route[i].position;
    const double length = (b - a).norm();
    if (length > 0.0) {
      if (!(route[i].speed_mps > 0.0)) {
        throw ScenarioValidationError(fmt::format("waypoint {} needs a positive speed", i));
      }
      yaw = rad_to_deg(std::atan2(b.y() - a.y(), b.x() - a.x()));
      if (!yaw_set) {
        for (auto& s : segments) s.yaw_deg = yaw;
        yaw_set = true;
      }
      const double d = length / route[i].speed_mps;
      segments.push_back({t, t + d, a, b, yaw});
      t += d;
    }
    dwell(b, route[i].dwell_s);
  }

  const auto n = static_cast<std::size_t>(std::ceil(until_s * rate_hz - kTimeEps)) + 1;
  std::vector<TimedPose> poses;
  poses.reserve(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double tk = static_cast<double>(k) / rate_hz;
    while (seg < segments.size() && tk > segments[seg].t1) ++seg;
    Vec3 p = route.back().position;
    double heading = yaw;
    if (seg < segments.size()) {
      const Segment& s = segments[seg];
      const double span = s.t1 - s.t0;
      const double alpha = span > 0.0 ? std::clamp((tk - s.t0) / span, 0.0, 1.0) : 0.0;
      p = s.p0 + alpha * (s.p1 - s.p0);
      heading = s.yaw_deg;
    }
    poses.push_back(TimedPose{tk, yaw_rotation(heading), p});
  }
  return poses;
}

void NoiseModel::validate() const {
  for (TlType type : kAllTypes) {
    const auto& m = of(type);
    const auto n = static_cast<Eigen::Index>(valid_states(type).size());
    if (m.rows() != n || m.cols() != n) {
      throw ScenarioValidationError(
          fmt::format("{} confusion must be {}x{}", type_name(type), n, n));
    }
    if ((m.array() < 0.0).any()) {
      throw ScenarioValidationError(fmt::format("{} confusion has negative entries",
                                                type_name(type)));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(m.row(i).sum() - 1.0) > 1e-9) {
        throw ScenarioValidationError(
            fmt::format("{} confusion row {} does not sum to 1", type_name(type), i));
      }
    }
  }
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(miss_rate) || !in_unit(fp_rate)) {
    throw ScenarioValidationError("miss and false-positive rates must lie in [0, 1]");
  }
  if (!(jitter_px >= 0.0)) throw ScenarioValidationError("box jitter must be >= 0");
  if (!(confidence_spread >= 0.0 && confidence_spread < 1.0)) {
    throw ScenarioValidationError("confidence spread must lie in [0, 1)");
  }
}

Eigen::MatrixXd uniform_error_confusion(TlType type, double diagonal, bool on_off_errors) {
  if (!(diagonal >= 0.0 && diagonal <= 1.0)) {
    throw ScenarioValidationError("confusion diagonal must lie in [0, 1]");
  }
  const auto states = valid_states(type);
  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<Eigen::Index> others;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (!on_off_errors && is_on(states[i]) != is_on(states[j])) continue;
      others.push_back(j);
    }
    if (others.empty()) {
      m(i, i) = 1.0;
      continue;
    }
    m(i, i) = diagonal;
    for (Eigen::Index j : others) m(i, j) = (1.0 - diagonal) / static_cast<double>(others.size());
  }
  return m;
}

NoiseModel noiseless_model(std::uint64_t seed) {
  NoiseModel noise;
  for (TlType type : kAllTypes) {
    const auto n = static_cast<Eigen::Index>(valid_states(type).size());
    noise.confusion[static_cast<std::size_t>(type)] = Eigen::MatrixXd::Identity(n, n);
  }
  noise.confidence_spread = 0.0;
  noise.seed = seed;
  return noise;
}

void Scenario::validate() const {
  try {
    world.validate();
  } catch (const Error& e) {
    throw ScenarioValidationError(fmt::format("world: {}", e.what()));
  }
  if (cameras.empty()) throw ScenarioValidationError("scenario needs at least one camera");
  std::set<std::string> camera_ids;
  for (const auto& c : cameras) {
    try {
      c.validate();
    } catch (const Error& e) {
      throw ScenarioValidationError(fmt::format("camera {}: {}", c.camera_id, e.what()));
    }
    if (!camera_ids.insert(c.camera_id).second) {
      throw ScenarioValidationError(fmt::format("duplicate camera_id '{}'", c.camera_id));
    }
  }
  std::set<std::string> programmed;
  for (const auto& p : programs) {
    const MapTrafficLight* light = world.find(p.light_id);
    if (!light) {
      throw ScenarioValidationError(fmt::format("program for unknown light '{}'", p.light_id));
    }
    if (!programmed.insert(p.light_id).second) {
      throw ScenarioValidationError(fmt::format("light '{}' has two programs", p.light_id));
    }
    if (p.phases.empty()) {
      throw ScenarioValidationError(fmt::format("program for '{}' is empty", p.light_id));
    }
    const auto violations = validate_program(p, light->type);
    if (!violations.empty()) {
      std::string msg = fmt::format("program for '{}' violates the regulated sequence:", p.light_id);
      for (const auto& v : violations) msg += fmt::format(" [{}] {};", v.index, v.message);
      throw ScenarioValidationError(msg);
    }
  }
  for (const auto& l : world.lights) {
    if (!programmed.count(l.light_id)) {
      throw ScenarioValidationError(fmt::format("light '{}' has no program", l.light_id));
    }
  }
  for (const auto& id : omit_from_map) {
    if (!world.find(id)) throw ScenarioValidationError(fmt::format("cannot omit unknown '{}'", id));
  }
  for (const auto& o : occlusions) {
    if (!world.find(o.light_id)) {
      throw ScenarioValidationError(fmt::format("occlusion of unknown light '{}'", o.light_id));
    }
    if (!o.camera_id.empty() && !camera_ids.count(o.camera_id)) {
      throw ScenarioValidationError(fmt::format("occlusion in unknown camera '{}'", o.camera_id));
    }
    if (!(o.end_s > o.start_s)) {
      throw ScenarioValidationError(
          fmt::format("occlusion of '{}' has end <= start", o.light_id));
    }
  }
  if (!(frame_rate_hz > 0.0) || !(duration_s > 0.0)) {
    throw ScenarioValidationError("frame rate and duration must be positive");
  }
  if (trajectory.empty()) throw ScenarioValidationError("scenario has no trajectory");
  try {
    const PoseBuffer buffer(trajectory);
    const double last = frame_time(frame_count() - 1);
    if (buffer.begin_time() > start_time_s || buffer.end_time() < last) {
      throw ScenarioValidationError(
          fmt::format("trajectory [{}, {}] does not cover frames [{}, {}]", buffer.begin_time(),
                      buffer.end_time(), start_time_s, last));
    }
  } catch (const ScenarioValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioValidationError(fmt::format("trajectory: {}", e.what()));
  }
  noise.validate();
}

HdMap Scenario::published_map() const {
  HdMap map{world.utm_zone, {}};
  for (const auto& l : world.lights) {
    if (std::find(omit_from_map.begin(), omit_from_map.end(), l.light_id) == omit_from_map.end()) {
      map.lights.push_back(l);
    }
  }
  return map;
}

std::size_t Scenario::frame_count() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(
                                      std::floor(duration_s * frame_rate_hz + kTimeEps)));
}

double Scenario::frame_time(std::size_t k) const {
  return start_time_s + static_cast<double>(k) / frame_rate_hz;
}

SimulationOutput generate(const Scenario& scenario) {
  scenario.validate();
  const NoiseModel& noise = scenario.noise;
  const PoseBuffer buffer(scenario.trajectory);

  std::vector<const CameraModel*> cameras;
  for (const auto& c : scenario.cameras) cameras.push_back(&c);
  std::sort(cameras.begin(), cameras.end(), [](const CameraModel* a, const CameraModel* b) {
    return a->camera_id < b->camera_id;
  });

  const auto& lights = scenario.world.lights;
  std::map<std::string, const LightProgram*> programs;
  for (const auto& p : scenario.programs) programs[p.light_id] = &p;
  std::vector<std::uint64_t> light_keys;
  for (const auto& l : lights) light_keys.push_back(hash_key(l.light_id));
  std::vector<std::uint64_t> camera_keys;
  for (const auto* c : cameras) camera_keys.push_back(hash_key(c->camera_id));

  // First pass: geometry only, which also fixes the false-positive size range.
  const std::size_t n_frames = scenario.frame_count();
  std::vector<std::vector<std::vector<Projection>>> projections(
      n_frames, std::vector<std::vector<Projection>>(cameras.size()));
  std::vector<SizeRange> sizes(cameras.size());
  for (std::size_t k = 0; k < n_frames; ++k) {
    const TimedPose pose = buffer.at(scenario.frame_time(k));
    for (std::size_t c = 0; c < cameras.size(); ++c) {
      const CameraModel& cam = *cameras[c];
      const RigidTransform cam_from_utm = camera_from_utm(cam.extrinsic, pose);
      for (std::size_t i = 0; i < lights.size(); ++i) {
        if (!within_coverage(lights[i].position, pose, cam)) continue;
        const auto box = project_box(lights[i].box(), cam_from_utm, cam.intrinsics);
        if (!box) continue;
        const auto clipped = clip_to_image(*box, cam.intrinsics);
        if (!clipped || !(clipped->h > 0.0) || !(clipped->w > 0.0)) continue;
        projections[k][c].push_back({i, *clipped});
        sizes[c].add(*clipped);
      }
    }
  }

  SimulationOutput out;
  out.map = scenario.published_map();
  out.cameras.reserve(cameras.size());
  for (const auto* c : cameras) out.cameras.push_back(*c);
  out.poses = scenario.trajectory;

  for (std::size_t k = 0; k < n_frames; ++k) {
    const double t = scenario.frame_time(k);
    std::vector<ProgramSample> samples;
    samples.reserve(lights.size());
    for (const auto& l : lights) samples.push_back(evaluate_program(*programs.at(l.light_id), t));

    std::map<std::size_t, std::vector<std::string>> in_view;  // light -> unoccluded cameras
    std::set<std::size_t> in_range;
    for (std::size_t c = 0; c < cameras.size(); ++c) {
      const CameraModel& cam = *cameras[c];
      CameraFrameDetections frame{cam.camera_id, t, {}};
      for (const Projection& p : projections[k][c]) {
        const MapTrafficLight& light = lights[p.light];
        in_range.insert(p.light);
        const bool occluded =
            std::any_of(scenario.occlusions.begin(), scenario.occlusions.end(),
                        [&](const Occlusion& o) { return o.covers(light.light_id, cam.camera_id, t); });
        if (occluded) continue;
        in_view[p.light].push_back(cam.camera_id);

        KeyedRng rng(noise.seed, {kTagLight, k, camera_keys[c], light_keys[p.light]});
        if (rng.bernoulli(noise.miss_rate)) continue;
        const auto states = valid_states(light.type);
        const TlClass physical = samples[p.light].physical;
        const auto row_index = std::distance(
            states.begin(), std::find(states.begin(), states.end(), physical));
        const Eigen::VectorXd row = noise.of(light.type).row(row_index).transpose();
        const std::size_t observed_index =
            rng.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
        const TlClass observed = states[observed_index];

        Detection2D d;
        d.camera_id = cam.camera_id;
        d.timestamp = t;
        d.box.cx = rng.normal(p.box.cx, noise.jitter_px);
        d.box.cy = rng.normal(p.box.cy, noise.jitter_px);
        d.box.h = std::max(1.0, rng.normal(p.box.h, noise.jitter_px));
        d.box.w = std::max(1.0, rng.normal(p.box.w, noise.jitter_px));
        d.confidence = soft_confidence(observed, noise.confidence_spread);
        d.score = 1.0;
        frame.detections.push_back(std::move(d));
      }

      KeyedRng fp_rng(noise.seed, {kTagFalsePositive, k, camera_keys[c]});
      const double whole = std::floor(noise.fp_rate);
      const auto n_fp = static_cast<std::size_t>(whole) +
                        (fp_rng.bernoulli(noise.fp_rate - whole) ? 1u : 0u);
      const SizeRange& size = sizes[c];
      const auto width = static_cast<double>(cam.intrinsics.width);
      const auto height = static_cast<double>(cam.intrinsics.height);
      for (std::size_t f = 0; f < n_fp; ++f) {
        Detection2D d;
        d.camera_id = cam.camera_id;
        d.timestamp = t;
        d.box.h = std::min(fp_rng.uniform(size.h_min, size.h_max), height);
        d.box.w = std::min(d.box.h * fp_rng.uniform(size.aspect_min, size.aspect_max), width);
        d.box.cx = fp_rng.uniform(0.5 * d.box.w, width - 0.5 * d.box.w);
        d.box.cy = fp_rng.uniform(0.5 * d.box.h, height - 0.5 * d.box.h);
        const auto cls = class_at(static_cast<std::size_t>(
            std::min<double>(fp_rng.uniform() * kNumClasses, kNumClasses - 1)));
        d.confidence = soft_confidence(cls, noise.confidence_spread);
        d.score = 1.0;
        frame.detections.push_back(std::move(d));
      }
      out.detections.push_back(std::move(frame));
    }

    GroundTruthFrame gt{t, {}};
    for (std::size_t i : in_range) {
      GroundTruthLight g;
      g.light_id = lights[i].light_id;
      g.position = lights[i].position;
      g.true_state = samples[i].label;
      g.flashing = samples[i].flashing;
      if (auto it = in_view.find(i); it != in_view.end()) g.visible_in = it->second;
      gt.lights.push_back(std::move(g));
    }
    out.ground_truth.push_back(std::move(gt));
  }

  // Per-type detector statistics for the filter, from the sampling model with
  // a uniform state prior and add-one smoothing.
  for (TlType type : kAllTypes) {
    const auto states = valid_states(type);
    const auto n = static_cast<Eigen::Index>(states.size());
    HmmConfig cfg;
    cfg.type = type;
    cfg.states.assign(states.begin(), states.end());
    cfg.transition = default_transition(type);
    cfg.prior = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    cfg.confusion_counts = CountMatrix(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        cfg.confusion_counts(i, j) =
            std::llround(noise.of(type)(i, j) * static_cast<double>(kCountScale)) + 1;
      }
    }
    out.hmms[static_cast<std::size_t>(type)] = std::move(cfg);
  }
  return out;
}

void write_simulation(const SimulationOutput& out, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "calib", ec);
  fs::create_directories(dir / "hmm", ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  write_text_file(dir / "map.json", serialize_map(out.map));
  for (const auto& c : out.cameras) {
    write_text_file(dir / "calib" / (c.camera_id + ".json"), serialize_calibration(c));
  }
  write_text_file(dir / "detections.jsonl", serialize_detections(out.detections));
  write_text_file(dir / "poses.jsonl", serialize_poses(out.poses));
  write_text_file(dir / "ground_truth.jsonl", serialize_ground_truth(out.ground_truth));
  for (const auto& h : out.hmms) {
    write_text_file(dir / "hmm" / (std::string(type_name(h.type)) + ".json"), serialize_hmm(h));
  }
}

}  // namespace tlfusion
