#include "tlfusion/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tlfusion/errors.hpp"

namespace tlfusion {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

struct Ctx {
  std::string_view origin;
  std::size_t line = 0;  // 0 for whole-document formats

  std::string where() const {
    return line ? fmt::format("{}:{}", origin, line) : std::string(origin);
  }
  [[noreturn]] void fail(std::string_view msg) const {
    throw ParseError(fmt::format("{}: {}", where(), msg));
  }
};

json parse_document(std::string_view text, const Ctx& ctx) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    ctx.fail(e.what());
  }
}

template <typename F>
void for_each_line(std::string_view text, std::string_view origin, F&& f) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const Ctx ctx{origin, line_no};
    f(parse_document(line, ctx), ctx);
  }
}

const json& field(const json& j, const char* key, const Ctx& ctx) {
  if (!j.is_object()) ctx.fail("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) ctx.fail(fmt::format("missing field '{}'", key));
  return *it;
}

double number(const json& j, const char* key, const Ctx& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_number()) ctx.fail(fmt::format("field '{}' must be a number", key));
  const double d = v.get<double>();
  if (!std::isfinite(d)) ctx.fail(fmt::format("field '{}' must be finite", key));
  return d;
}

double number_or(const json& j, const char* key, double fallback, const Ctx& ctx) {
  return j.contains(key) ? number(j, key, ctx) : fallback;
}

std::int64_t integer(const json& v, std::string_view what, const Ctx& ctx) {
  if (!v.is_number_integer()) ctx.fail(fmt::format("{} must be an integer", what));
  return v.get<std::int64_t>();
}

std::string string(const json& j, const char* key, const Ctx& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_string()) ctx.fail(fmt::format("field '{}' must be a string", key));
  return v.get<std::string>();
}

bool boolean(const json& j, const char* key, const Ctx& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_boolean()) ctx.fail(fmt::format("field '{}' must be a boolean", key));
  return v.get<bool>();
}

std::vector<double> numbers(const json& v, std::string_view what, const Ctx& ctx,
                            std::size_t expected = 0) {
  if (!v.is_array()) ctx.fail(fmt::format("{} must be an array", what));
  if (expected && v.size() != expected) {
    ctx.fail(fmt::format("{} must have {} entries, got {}", what, expected, v.size()));
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) ctx.fail(fmt::format("{} entries must be numbers", what));
    out.push_back(e.get<double>());
  }
  return out;
}

Vec3 vec3(const json& v, std::string_view what, const Ctx& ctx) {
  const auto d = numbers(v, what, ctx, 3);
  return {d[0], d[1], d[2]};
}

Quat quaternion(const json& v, std::string_view what, const Ctx& ctx) {
  const auto d = numbers(v, what, ctx, 4);
  Quat q(d[0], d[1], d[2], d[3]);
  const double n = q.norm();
  if (std::abs(n - 1.0) > 1e-6) ctx.fail(fmt::format("{} is not a unit quaternion", what));
  // Leave already-unit values bit-exact so files round-trip.
  if (std::abs(n - 1.0) > 1e-12) q.normalize();
  return q;
}

template <typename T, typename F>
T wrap(const Ctx& ctx, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    ctx.fail(e.what());
  } catch (const json::exception& e) {
    ctx.fail(e.what());
  }
}

TlClass class_field(const json& j, const char* key, const Ctx& ctx) {
  const std::string name = string(j, key, ctx);
  return wrap<TlClass>(ctx, [&] { return class_from_name(name); });
}

TlType type_field(const json& j, const char* key, const Ctx& ctx) {
  const std::string name = string(j, key, ctx);
  return wrap<TlType>(ctx, [&] { return type_from_name(name); });
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const Ctx& ctx) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(fmt::format("{}: unknown key '{}'", ctx.where(), key));
    }
  }
}

ojson vec_json(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }
ojson quat_json(const Quat& q) { return ojson::array({q.w(), q.x(), q.y(), q.z()}); }

MapTrafficLight parse_light(const json& j, const Ctx& ctx) {
  MapTrafficLight l;
  l.light_id = string(j, "light_id", ctx);
  l.position = {number(j, "x", ctx), number(j, "y", ctx), number(j, "z", ctx)};
  l.heading_deg = number(j, "heading_deg", ctx);
  l.width_m = number(j, "width_m", ctx);
  l.height_m = number(j, "height_m", ctx);
  l.depth_m = number(j, "depth_m", ctx);
  l.type = type_field(j, "tl_type", ctx);
  return l;
}

CameraIntrinsics parse_intrinsics(const json& j, const Ctx& ctx) {
  CameraIntrinsics k;
  k.fx = number(j, "fx", ctx);
  k.fy = number(j, "fy", ctx);
  k.cx = number(j, "cx", ctx);
  k.cy = number(j, "cy", ctx);
  k.width = static_cast<int>(integer(field(j, "width", ctx), "width", ctx));
  k.height = static_cast<int>(integer(field(j, "height", ctx), "height", ctx));
  return k;
}

CameraModel parse_camera(const json& j, const Ctx& ctx) {
  CameraModel c;
  c.camera_id = string(j, "camera_id", ctx);
  c.intrinsics = parse_intrinsics(j, ctx);
  c.max_range_m = number(j, "max_range_m", ctx);
  c.horizontal_fov_deg = number(j, "hfov_deg", ctx);
  if (j.contains("extrinsic")) {
    const json& e = j["extrinsic"];
    c.extrinsic.frame_from = std::string(kInsFrame);
    c.extrinsic.frame_to = c.camera_id;
    c.extrinsic.rotation = quaternion(field(e, "quaternion", ctx), "extrinsic.quaternion", ctx);
    c.extrinsic.translation = vec3(field(e, "translation", ctx), "extrinsic.translation", ctx);
  } else if (j.contains("mount")) {
    const json& m = j["mount"];
    c.extrinsic = make_extrinsic(c.camera_id, vec3(field(m, "position", ctx), "mount.position", ctx),
                                 number_or(m, "yaw_deg", 0.0, ctx));
  } else {
    ctx.fail("camera needs an 'extrinsic' (or, in scenarios, a 'mount')");
  }
  wrap<int>(ctx, [&] {
    c.validate();
    return 0;
  });
  return c;
}

ojson track_json(const TrackReport& t) {
  ojson j;
  j["track_id"] = t.track_id ? ojson(*t.track_id) : ojson(nullptr);
  if (t.light_id) j["light_id"] = *t.light_id;
  j["x"] = t.position.x();
  j["y"] = t.position.y();
  j["z"] = t.position.z();
  j["tl_type"] = type_name(t.type);
  j["state"] = class_name(t.state);
  j["flashing"] = t.flashing;
  j["belief"] = t.belief;
  return j;
}

Eigen::MatrixXd sampling_confusion(TlType type, const json& j, const Ctx& ctx) {
  const auto n = valid_states(type).size();
  if (j.contains("matrix")) {
    const json& rows = j["matrix"];
    if (!rows.is_array() || rows.size() != n) {
      ctx.fail(fmt::format("{} confusion matrix must have {} rows", type_name(type), n));
    }
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = numbers(rows[i], "confusion row", ctx, n);
      for (std::size_t k = 0; k < n; ++k) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
      }
    }
    return m;
  }
  const double diagonal = number(j, "diagonal", ctx);
  const bool on_off = j.contains("on_off_errors") && boolean(j, "on_off_errors", ctx);
  return wrap<Eigen::MatrixXd>(ctx, [&] { return uniform_error_confusion(type, diagonal, on_off); });
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

HdMap parse_map(std::string_view text, std::string_view origin) {
  const Ctx ctx{origin};
  const json doc = parse_document(text, ctx);
  HdMap map;
  map.utm_zone = string(doc, "utm_zone", ctx);
  const json& lights = field(doc, "lights", ctx);
  if (!lights.is_array()) ctx.fail("'lights' must be an array");
  for (const auto& l : lights) map.lights.push_back(parse_light(l, ctx));
  wrap<int>(ctx, [&] {
    map.validate();
    return 0;
  });
  return map;
}

std::string serialize_map(const HdMap& map) {
  ojson doc;
  doc["utm_zone"] = map.utm_zone;
  doc["lights"] = ojson::array();
  for (const auto& l : map.lights) {
    ojson j;
    j["light_id"] = l.light_id;
    j["x"] = l.position.x();
    j["y"] = l.position.y();
    j["z"] = l.position.z();
    j["heading_deg"] = l.heading_deg;
    j["width_m"] = l.width_m;
    j["height_m"] = l.height_m;
    j["depth_m"] = l.depth_m;
    j["tl_type"] = type_name(l.type);
    doc["lights"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

CameraModel parse_calibration(std::string_view text, std::string_view origin) {
  const Ctx ctx{origin};
  const json doc = parse_document(text, ctx);
  if (!doc.contains("extrinsic")) ctx.fail("missing field 'extrinsic'");
  return parse_camera(doc, ctx);
}

std::string serialize_calibration(const CameraModel& c) {
  ojson doc;
  doc["camera_id"] = c.camera_id;
  doc["fx"] = c.intrinsics.fx;
  doc["fy"] = c.intrinsics.fy;
  doc["cx"] = c.intrinsics.cx;
  doc["cy"] = c.intrinsics.cy;
  doc["width"] = c.intrinsics.width;
  doc["height"] = c.intrinsics.height;
  doc["extrinsic"] = {{"quaternion", quat_json(c.extrinsic.rotation)},
                      {"translation", vec_json(c.extrinsic.translation)}};
  doc["max_range_m"] = c.max_range_m;
  doc["hfov_deg"] = c.horizontal_fov_deg;
  return doc.dump(2) + "\n";
}

std::vector<CameraModel> load_calibration_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError(fmt::format("calibration directory '{}' not found", dir.string()));
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<CameraModel> cameras;
  for (const auto& f : files) cameras.push_back(parse_calibration(read_text_file(f), f.string()));
  std::sort(cameras.begin(), cameras.end(),
            [](const CameraModel& a, const CameraModel& b) { return a.camera_id < b.camera_id; });
  for (std::size_t i = 1; i < cameras.size(); ++i) {
    if (cameras[i].camera_id == cameras[i - 1].camera_id) {
      throw ConfigError(fmt::format("camera '{}' calibrated twice", cameras[i].camera_id));
    }
  }
  if (cameras.empty()) throw ConfigError(fmt::format("no calibration files in '{}'", dir.string()));
  return cameras;
}

std::vector<CameraFrameDetections> parse_detections(std::string_view text,
                                                    std::string_view origin) {
  std::map<std::pair<double, std::string>, CameraFrameDetections> frames;
  std::map<std::string, double> last_t;
  for_each_line(text, origin, [&](const json& j, const Ctx& ctx) {
    const std::string camera = string(j, "camera_id", ctx);
    const double t = number(j, "t", ctx);
    if (auto it = last_t.find(camera); it != last_t.end() && t < it->second) {
      ctx.fail(fmt::format("time {} goes backwards for camera '{}'", t, camera));
    }
    last_t[camera] = t;
    auto& frame = frames[{t, camera}];
    frame.camera_id = camera;
    frame.timestamp = t;
    if (j.contains("empty")) {
      if (!boolean(j, "empty", ctx)) ctx.fail("'empty' marker must be true");
      return;
    }
    Detection2D d;
    d.camera_id = camera;
    d.timestamp = t;
    d.box = {number(j, "cx", ctx), number(j, "cy", ctx), number(j, "h", ctx), number(j, "w", ctx)};
    const auto conf = numbers(field(j, "conf", ctx), "conf", ctx, kNumClasses);
    std::copy(conf.begin(), conf.end(), d.confidence.begin());
    d.score = number_or(j, "score", 1.0, ctx);
    wrap<int>(ctx, [&] {
      d.validate();
      return 0;
    });
    if (!(d.box.h > 0.0)) ctx.fail("detection box height must be positive");
    frame.detections.push_back(std::move(d));
  });
  std::vector<CameraFrameDetections> out;
  out.reserve(frames.size());
  for (auto& [key, frame] : frames) out.push_back(std::move(frame));
  return out;
}

std::string serialize_detections(std::span<const CameraFrameDetections> frames) {
  std::string out;
  for (const auto& f : frames) {
    if (f.detections.empty()) {
      ojson j;
      j["camera_id"] = f.camera_id;
      j["t"] = f.timestamp;
      j["empty"] = true;
      out += j.dump() + "\n";
      continue;
    }
    for (const auto& d : f.detections) {
      ojson j;
      j["camera_id"] = d.camera_id;
      j["t"] = d.timestamp;
      j["cx"] = d.box.cx;
      j["cy"] = d.box.cy;
      j["h"] = d.box.h;
      j["w"] = d.box.w;
      j["conf"] = d.confidence;
      j["score"] = d.score;
      out += j.dump() + "\n";
    }
  }
  return out;
}

std::vector<TimedPose> parse_poses(std::string_view text, std::string_view origin) {
  std::vector<TimedPose> poses;
  for_each_line(text, origin, [&](const json& j, const Ctx& ctx) {
    poses.push_back(TimedPose{number(j, "t", ctx), quaternion(field(j, "quaternion", ctx), "quaternion", ctx),
                              vec3(field(j, "translation", ctx), "translation", ctx)});
  });
  return poses;
}

std::string serialize_poses(std::span<const TimedPose> poses) {
  std::string out;
  for (const auto& p : poses) {
    ojson j;
    j["t"] = p.timestamp;
    j["quaternion"] = quat_json(p.rotation);
    j["translation"] = vec_json(p.translation);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<FrameReport> parse_reports(std::string_view text, std::string_view origin) {
  std::vector<FrameReport> reports;
  for_each_line(text, origin, [&](const json& j, const Ctx& ctx) {
    FrameReport r{number(j, "t", ctx), {}};
    const json& tracks = field(j, "tracks", ctx);
    if (!tracks.is_array()) ctx.fail("'tracks' must be an array");
    for (const auto& tj : tracks) {
      TrackReport t;
      const json& id = field(tj, "track_id", ctx);
      if (!id.is_null()) t.track_id = static_cast<std::uint64_t>(integer(id, "track_id", ctx));
      if (tj.contains("light_id") && !tj["light_id"].is_null()) {
        t.light_id = string(tj, "light_id", ctx);
      }
      t.position = {number(tj, "x", ctx), number(tj, "y", ctx), number(tj, "z", ctx)};
      t.type = type_field(tj, "tl_type", ctx);
      t.state = class_field(tj, "state", ctx);
      t.flashing = boolean(tj, "flashing", ctx);
      t.belief = numbers(field(tj, "belief", ctx), "belief", ctx);
      r.tracks.push_back(std::move(t));
    }
    reports.push_back(std::move(r));
  });
  return reports;
}

std::string serialize_reports(std::span<const FrameReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    ojson j;
    j["t"] = r.timestamp;
    j["tracks"] = ojson::array();
    for (const auto& t : r.tracks) j["tracks"].push_back(track_json(t));
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<GroundTruthFrame> parse_ground_truth(std::string_view text, std::string_view origin) {
  std::vector<GroundTruthFrame> frames;
  for_each_line(text, origin, [&](const json& j, const Ctx& ctx) {
    GroundTruthFrame f{number(j, "t", ctx), {}};
    const json& lights = field(j, "lights", ctx);
    if (!lights.is_array()) ctx.fail("'lights' must be an array");
    for (const auto& lj : lights) {
      GroundTruthLight g;
      g.light_id = string(lj, "light_id", ctx);
      g.position = {number(lj, "x", ctx), number(lj, "y", ctx), number(lj, "z", ctx)};
      g.true_state = class_field(lj, "true_state", ctx);
      g.flashing = boolean(lj, "flashing", ctx);
      const json& vis = field(lj, "visible_in", ctx);
      if (!vis.is_array()) ctx.fail("'visible_in' must be an array");
      for (const auto& v : vis) {
        if (!v.is_string()) ctx.fail("'visible_in' entries must be strings");
        g.visible_in.push_back(v.get<std::string>());
      }
      f.lights.push_back(std::move(g));
    }
    frames.push_back(std::move(f));
  });
  return frames;
}

std::string serialize_ground_truth(std::span<const GroundTruthFrame> frames) {
  std::string out;
  for (const auto& f : frames) {
    ojson j;
    j["t"] = f.timestamp;
    j["lights"] = ojson::array();
    for (const auto& g : f.lights) {
      ojson lj;
      lj["light_id"] = g.light_id;
      lj["x"] = g.position.x();
      lj["y"] = g.position.y();
      lj["z"] = g.position.z();
      lj["true_state"] = class_name(g.true_state);
      lj["flashing"] = g.flashing;
      lj["visible_in"] = g.visible_in;
      j["lights"].push_back(std::move(lj));
    }
    out += j.dump() + "\n";
  }
  return out;
}

HmmConfig parse_hmm(std::string_view text, std::string_view origin) {
  const Ctx ctx{origin};
  const json doc = parse_document(text, ctx);
  HmmConfig cfg;
  cfg.type = type_field(doc, "tl_type", ctx);
  const json& states = field(doc, "states", ctx);
  if (!states.is_array()) ctx.fail("'states' must be an array");
  for (const auto& s : states) {
    if (!s.is_string()) ctx.fail("'states' entries must be strings");
    const std::string name = s.get<std::string>();
    cfg.states.push_back(wrap<TlClass>(ctx, [&] { return class_from_name(name); }));
  }
  const auto n = cfg.states.size();
  const auto a = numbers(field(doc, "A", ctx), "A", ctx, n * n);
  cfg.transition = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                  Eigen::RowMajor>>(a.data(), n, n);
  const auto pi = numbers(field(doc, "pi", ctx), "pi", ctx, n);
  cfg.prior = Eigen::Map<const Eigen::VectorXd>(pi.data(), static_cast<Eigen::Index>(n));
  const json& counts = field(doc, "confusion_counts", ctx);
  if (!counts.is_array() || counts.size() != n) {
    ctx.fail(fmt::format("'confusion_counts' must have {} rows", n));
  }
  cfg.confusion_counts = CountMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!counts[i].is_array() || counts[i].size() != n) {
      ctx.fail(fmt::format("'confusion_counts' row {} must have {} entries", i, n));
    }
    for (std::size_t k = 0; k < n; ++k) {
      cfg.confusion_counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          integer(counts[i][k], "confusion count", ctx);
    }
  }
  wrap<int>(ctx, [&] {
    build_hmm(cfg);
    return 0;
  });
  return cfg;
}

std::string serialize_hmm(const HmmConfig& cfg) {
  ojson doc;
  doc["tl_type"] = type_name(cfg.type);
  doc["states"] = ojson::array();
  for (TlClass s : cfg.states) doc["states"].push_back(class_name(s));
  doc["A"] = ojson::array();
  for (Eigen::Index i = 0; i < cfg.transition.rows(); ++i) {
    for (Eigen::Index k = 0; k < cfg.transition.cols(); ++k) doc["A"].push_back(cfg.transition(i, k));
  }
  doc["pi"] = std::vector<double>(cfg.prior.data(), cfg.prior.data() + cfg.prior.size());
  doc["confusion_counts"] = ojson::array();
  for (Eigen::Index i = 0; i < cfg.confusion_counts.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index k = 0; k < cfg.confusion_counts.cols(); ++k) {
      row.push_back(cfg.confusion_counts(i, k));
    }
    doc["confusion_counts"].push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

HmmSet load_hmm_dir(const std::filesystem::path& dir) {
  HmmSet set;
  for (TlType type : kAllTypes) {
    const auto path = dir / (std::string(type_name(type)) + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) continue;
    HmmConfig cfg = parse_hmm(read_text_file(path), path.string());
    if (cfg.type != type) {
      throw ConfigError(fmt::format("{} declares tl_type {}", path.string(), type_name(cfg.type)));
    }
    set.set(build_hmm(cfg));
  }
  return set;
}

PipelineConfig parse_pipeline_config(std::string_view text, std::string_view origin) {
  const Ctx ctx{origin};
  const json doc = parse_document(text, ctx);
  if (!doc.is_object()) ctx.fail("expected a JSON object");
  reject_unknown(doc, {"gate_px", "max_pose_gap_s", "tracker", "flashing", "type_heights_m"}, ctx);
  PipelineConfig cfg;
  cfg.gate_px = number_or(doc, "gate_px", cfg.gate_px, ctx);
  cfg.max_pose_gap_s = number_or(doc, "max_pose_gap_s", cfg.max_pose_gap_s, ctx);
  auto count = [&](const json& j, const char* key, auto fallback) {
    using T = decltype(fallback);
    if (!j.contains(key)) return fallback;
    const std::int64_t v = integer(j[key], key, ctx);
    if (v < 0) throw ConfigError(fmt::format("{}: '{}' must be >= 0", ctx.where(), key));
    return static_cast<T>(v);
  };
  if (doc.contains("tracker")) {
    const json& t = doc["tracker"];
    reject_unknown(t, {"n_birth_map", "n_birth_2d", "n_death", "history_len", "provisional_gate_px",
                       "spawn_merge_gate_px"}, ctx);
    cfg.tracker.n_birth_map = count(t, "n_birth_map", cfg.tracker.n_birth_map);
    cfg.tracker.n_birth_2d = count(t, "n_birth_2d", cfg.tracker.n_birth_2d);
    cfg.tracker.n_death = count(t, "n_death", cfg.tracker.n_death);
    cfg.tracker.history_len = count(t, "history_len", cfg.tracker.history_len);
    cfg.tracker.provisional_gate_px =
        number_or(t, "provisional_gate_px", cfg.tracker.provisional_gate_px, ctx);
    cfg.tracker.spawn_merge_gate_px =
        number_or(t, "spawn_merge_gate_px", cfg.tracker.spawn_merge_gate_px, ctx);
  }
  if (doc.contains("flashing")) {
    const json& f = doc["flashing"];
    reject_unknown(f, {"window", "duty_min", "duty_max", "hold_margin"}, ctx);
    cfg.flashing.window = count(f, "window", cfg.flashing.window);
    cfg.flashing.duty_min = number_or(f, "duty_min", cfg.flashing.duty_min, ctx);
    cfg.flashing.duty_max = number_or(f, "duty_max", cfg.flashing.duty_max, ctx);
    cfg.flashing.hold_margin = number_or(f, "hold_margin", cfg.flashing.hold_margin, ctx);
  }
  if (doc.contains("type_heights_m")) {
    const json& h = doc["type_heights_m"];
    reject_unknown(h, {"three_bulb", "four_arrow", "five_doghouse"}, ctx);
    cfg.heights.three_bulb_m = number_or(h, "three_bulb", cfg.heights.three_bulb_m, ctx);
    cfg.heights.four_arrow_m = number_or(h, "four_arrow", cfg.heights.four_arrow_m, ctx);
    cfg.heights.five_doghouse_m = number_or(h, "five_doghouse", cfg.heights.five_doghouse_m, ctx);
  }
  cfg.validate();
  return cfg;
}

Scenario parse_scenario(std::string_view text, std::string_view origin) {
  const Ctx ctx{origin};
  const json doc = parse_document(text, ctx);
  Scenario s;
  s.frame_rate_hz = number(doc, "frame_rate_hz", ctx);
  s.duration_s = number(doc, "duration_s", ctx);
  s.start_time_s = number_or(doc, "start_time_s", 0.0, ctx);
  s.world.utm_zone = doc.contains("utm_zone") ? string(doc, "utm_zone", ctx) : "";

  const json& cameras = field(doc, "cameras", ctx);
  if (!cameras.is_array()) ctx.fail("'cameras' must be an array");
  for (const auto& c : cameras) s.cameras.push_back(parse_camera(c, ctx));

  const json& lights = field(doc, "lights", ctx);
  if (!lights.is_array()) ctx.fail("'lights' must be an array");
  for (const auto& lj : lights) {
    MapTrafficLight light = parse_light(lj, ctx);
    if (lj.contains("omit_from_map") && boolean(lj, "omit_from_map", ctx)) {
      s.omit_from_map.push_back(light.light_id);
    }
    LightProgram program{light.light_id, {}};
    const json& phases = field(lj, "program", ctx);
    if (!phases.is_array()) ctx.fail("'program' must be an array");
    for (const auto& pj : phases) {
      Phase p;
      p.state = class_field(pj, "state", ctx);
      p.duration_s = number_or(pj, "duration_s", 0.0, ctx);
      if (pj.contains("flashing")) {
        const json& f = pj["flashing"];
        p.flashing = FlashingSpec{number(f, "frequency_hz", ctx), number(f, "duty", ctx)};
      }
      program.phases.push_back(p);
    }
    s.programs.push_back(std::move(program));
    s.world.lights.push_back(std::move(light));
  }

  if (doc.contains("occlusions")) {
    for (const auto& oj : doc["occlusions"]) {
      Occlusion o;
      o.light_id = string(oj, "light_id", ctx);
      o.camera_id = oj.contains("camera_id") ? string(oj, "camera_id", ctx) : "";
      o.start_s = number(oj, "start_s", ctx);
      o.end_s = number(oj, "end_s", ctx);
      s.occlusions.push_back(std::move(o));
    }
  }

  const double until = s.start_time_s + s.duration_s;
  if (doc.contains("route")) {
    std::vector<Waypoint> route;
    for (const auto& wj : doc["route"]) {
      route.push_back(Waypoint{{number(wj, "x", ctx), number(wj, "y", ctx), number(wj, "z", ctx)},
                               number_or(wj, "speed_mps", 0.0, ctx),
                               number_or(wj, "dwell_s", 0.0, ctx)});
    }
    const double rate = number_or(doc, "pose_rate_hz", 50.0, ctx);
    s.trajectory = wrap<std::vector<TimedPose>>(ctx, [&] { return sample_trajectory(route, rate, until); });
  } else if (doc.contains("poses")) {
    for (const auto& pj : doc["poses"]) {
      s.trajectory.push_back(TimedPose{number(pj, "t", ctx),
                                       quaternion(field(pj, "quaternion", ctx), "quaternion", ctx),
                                       vec3(field(pj, "translation", ctx), "translation", ctx)});
    }
  } else {
    ctx.fail("scenario needs a 'route' or explicit 'poses'");
  }

  const json& noise = field(doc, "noise", ctx);
  s.noise = noiseless_model(0);
  s.noise.seed = static_cast<std::uint64_t>(integer(field(doc, "seed", ctx), "seed", ctx));
  s.noise.miss_rate = number_or(noise, "miss_rate", 0.0, ctx);
  s.noise.fp_rate = number_or(noise, "fp_rate", 0.0, ctx);
  s.noise.jitter_px = number_or(noise, "jitter_px", 0.0, ctx);
  s.noise.confidence_spread = number_or(noise, "confidence_spread", 0.0, ctx);
  if (noise.contains("confusion")) {
    const json& conf = noise["confusion"];
    for (TlType type : kAllTypes) {
      const std::string key(type_name(type));
      if (conf.contains(key)) {
        s.noise.confusion[static_cast<std::size_t>(type)] = sampling_confusion(type, conf[key], ctx);
      }
    }
  }
  s.validate();
  return s;
}

std::string serialize_eval_report(const EvalReport& r) {
  ojson doc;
  doc["ape_m"] = r.ape_m;
  doc["class_accuracy"] = r.class_accuracy;
  doc["gt_light_frames"] = r.gt_light_frames;
  doc["matched"] = r.matched;
  doc["correct"] = r.correct;
  doc["false_negatives"] = r.false_negatives;
  doc["false_positives"] = r.false_positives;
  if (r.fps) doc["fps"] = *r.fps;
  ojson labels = ojson::array();
  for (std::size_t i = 0; i < kNumClassesWithBackground; ++i) labels.push_back(class_name(class_at(i)));
  ojson matrix = ojson::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
    matrix.push_back(std::move(row));
  }
  doc["confusion"] = {{"rows", "ground_truth"}, {"labels", labels}, {"matrix", matrix}};
  ojson per_light = ojson::object();
  for (const auto& [id, l] : r.per_light) {
    per_light[id] = {{"frames", l.frames}, {"matched", l.matched}, {"correct", l.correct},
                     {"ape_m", l.ape_m}};
  }
  doc["per_light"] = std::move(per_light);
  return doc.dump(2) + "\n";
}

std::string serialize_stats(const RunStats& s) {
  ojson doc;
  doc["frames"] = s.frames;
  doc["wall_s"] = s.wall_s;
  doc["fps"] = s.fps;
  return doc.dump(2) + "\n";
}

RunStats parse_stats(std::string_view text, std::string_view origin) {
  const Ctx ctx{origin};
  const json doc = parse_document(text, ctx);
  RunStats s;
  s.frames = static_cast<std::size_t>(integer(field(doc, "frames", ctx), "frames", ctx));
  s.wall_s = number(doc, "wall_s", ctx);
  s.fps = number(doc, "fps", ctx);
  return s;
}

}  // namespace tlfusion
