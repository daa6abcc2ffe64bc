#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tlfusion/detection.hpp"
#include "tlfusion/geometry.hpp"

namespace tlfusion {

struct MapTrafficLight {
  std::string light_id;
  Vec3 position = Vec3::Zero();  // UTM metres, housing centre
  double heading_deg = 0.0;      // facing direction, CCW from UTM +x
  double width_m = 0.0;
  double height_m = 0.0;
  double depth_m = 0.0;
  TlType type = TlType::kThreeBulb;

  OrientedBox box() const { return {position, heading_deg, width_m, height_m, depth_m}; }
};

struct HdMap {
  std::string utm_zone;
  std::vector<MapTrafficLight> lights;

  /// Positive dims and unique ids; throws ValidationError / DuplicateIdError.
  void validate() const;
  const MapTrafficLight* find(std::string_view light_id) const;
};

/// Reads and validates a JSON map file.
HdMap load_map(const std::filesystem::path& path);

/// R-tree over light positions. Queries are const and may run concurrently;
/// `insert` is the single-writer path used for detection-spawned lights.
class SpatialIndex {
 public:
  SpatialIndex();
  explicit SpatialIndex(const HdMap& map);
  ~SpatialIndex();
  SpatialIndex(SpatialIndex&&) noexcept;
  SpatialIndex& operator=(SpatialIndex&&) noexcept;
  SpatialIndex(const SpatialIndex&) = delete;
  SpatialIndex& operator=(const SpatialIndex&) = delete;

  /// Throws DuplicateIdError when the id is already indexed.
  void insert(MapTrafficLight light);

  /// Lights whose position lies within `radius` (3D Euclidean) of `centre`,
  /// ordered by insertion.
  std::vector<MapTrafficLight> range_query(const Vec3& centre, double radius) const;

  const MapTrafficLight* find(std::string_view light_id) const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SpatialIndex build_index(const HdMap& map);

struct VisibleSet {
  std::string camera_id;
  std::vector<MapTrafficLight> lights;
};

/// Range + horizontal-FOV coverage predicate of one camera at one vehicle pose.
bool within_coverage(const Vec3& position_utm, const TimedPose& vehicle_pose,
                     const CameraModel& camera);

/// Radius of the vehicle-centred range query that covers every camera.
double coverage_radius(std::span<const CameraModel> cameras);

/// Range query around the vehicle followed by a per-camera range/FOV filter.
/// One entry per camera, in the order given.
std::vector<VisibleSet> query_visible(const SpatialIndex& index, const TimedPose& vehicle_pose,
                                      std::span<const CameraModel> cameras);

}  // namespace tlfusion
