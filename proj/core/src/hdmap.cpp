#include "tlfusion/hdmap.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iterator>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/box.hpp>
#include <boost/geometry/geometries/point.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <fmt/format.h>

#include "tlfusion/errors.hpp"
#include "tlfusion/io.hpp"

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace tlfusion {

void HdMap::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& light : lights) {
    if (light.light_id.empty()) throw ValidationError("light_id must not be empty");
    if (!(light.width_m > 0.0 && light.height_m > 0.0 && light.depth_m > 0.0)) {
      throw ValidationError(fmt::format("light {}: dimensions must be positive", light.light_id));
    }
    if (!seen.insert(light.light_id).second) throw DuplicateIdError(light.light_id);
  }
}

const MapTrafficLight* HdMap::find(std::string_view light_id) const {
  const auto it = std::find_if(lights.begin(), lights.end(),
                               [&](const MapTrafficLight& l) { return l.light_id == light_id; });
  return it == lights.end() ? nullptr : &*it;
}

HdMap load_map(const std::filesystem::path& path) {
  HdMap map = parse_map(read_text_file(path), path.string());
  map.validate();
  return map;
}

struct SpatialIndex::Impl {
  using Point = bg::model::point<double, 3, bg::cs::cartesian>;
  using Box = bg::model::box<Point>;
  using Value = std::pair<Point, std::size_t>;

  std::deque<MapTrafficLight> lights;
  std::unordered_map<std::string, std::size_t> by_id;
  bgi::rtree<Value, bgi::rstar<16>> tree;
};

SpatialIndex::SpatialIndex() : impl_(std::make_unique<Impl>()) {}

SpatialIndex::SpatialIndex(const HdMap& map) : SpatialIndex() {
  std::vector<Impl::Value> values;
  values.reserve(map.lights.size());
  for (const auto& light : map.lights) {
    if (!impl_->by_id.emplace(light.light_id, impl_->lights.size()).second) {
      throw DuplicateIdError(light.light_id);
    }
    const auto& p = light.position;
    values.emplace_back(Impl::Point(p.x(), p.y(), p.z()), impl_->lights.size());
    impl_->lights.push_back(light);
  }
  // Bulk (packing) construction.
  impl_->tree = bgi::rtree<Impl::Value, bgi::rstar<16>>(values);
}

SpatialIndex::~SpatialIndex() = default;
SpatialIndex::SpatialIndex(SpatialIndex&&) noexcept = default;
SpatialIndex& SpatialIndex::operator=(SpatialIndex&&) noexcept = default;

void SpatialIndex::insert(MapTrafficLight light) {
  if (!impl_->by_id.emplace(light.light_id, impl_->lights.size()).second) {
    throw DuplicateIdError(light.light_id);
  }
  const auto& p = light.position;
  impl_->tree.insert({Impl::Point(p.x(), p.y(), p.z()), impl_->lights.size()});
  impl_->lights.push_back(std::move(light));
}

std::vector<MapTrafficLight> SpatialIndex::range_query(const Vec3& centre, double radius) const {
  const Impl::Box query(Impl::Point(centre.x() - radius, centre.y() - radius, centre.z() - radius),
                        Impl::Point(centre.x() + radius, centre.y() + radius, centre.z() + radius));
  std::vector<Impl::Value> hits;
  impl_->tree.query(bgi::intersects(query), std::back_inserter(hits));
  std::vector<std::size_t> indices;
  indices.reserve(hits.size());
  for (const auto& [point, index] : hits) {
    if ((impl_->lights[index].position - centre).norm() <= radius) indices.push_back(index);
  }
  std::sort(indices.begin(), indices.end());
  std::vector<MapTrafficLight> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(impl_->lights[i]);
  return out;
}

const MapTrafficLight* SpatialIndex::find(std::string_view light_id) const {
  const auto it = impl_->by_id.find(std::string(light_id));
  return it == impl_->by_id.end() ? nullptr : &impl_->lights[it->second];
}

std::size_t SpatialIndex::size() const { return impl_->lights.size(); }

SpatialIndex build_index(const HdMap& map) { return SpatialIndex(map); }

bool within_coverage(const Vec3& position_utm, const TimedPose& vehicle_pose,
                     const CameraModel& camera) {
  const Vec3 centre = vehicle_pose.rotation * camera.position_in_ins() + vehicle_pose.translation;
  const Vec3 axis = vehicle_pose.rotation * camera.optical_axis_in_ins();
  const Vec3 to_light = position_utm - centre;
  if (to_light.norm() > camera.max_range_m) return false;

  const Eigen::Vector2d d(to_light.x(), to_light.y());
  const Eigen::Vector2d a(axis.x(), axis.y());
  if (d.norm() == 0.0 || a.norm() == 0.0) return false;
  const double cos_angle = std::clamp(d.dot(a) / (d.norm() * a.norm()), -1.0, 1.0);
  return rad_to_deg(std::acos(cos_angle)) <= 0.5 * camera.horizontal_fov_deg;
}

double coverage_radius(std::span<const CameraModel> cameras) {
  double radius = 0.0;
  for (const auto& camera : cameras) {
    radius = std::max(radius, camera.max_range_m + camera.position_in_ins().norm());
  }
  return radius;
}

std::vector<VisibleSet> query_visible(const SpatialIndex& index, const TimedPose& vehicle_pose,
                                      std::span<const CameraModel> cameras) {
  const auto nearby = index.range_query(vehicle_pose.translation, coverage_radius(cameras));
  std::vector<VisibleSet> out;
  out.reserve(cameras.size());
  for (const auto& camera : cameras) {
    VisibleSet set{camera.camera_id, {}};
    for (const auto& light : nearby) {
      if (within_coverage(light.position, vehicle_pose, camera)) set.lights.push_back(light);
    }
    out.push_back(std::move(set));
  }
  return out;
}

}  // namespace tlfusion
