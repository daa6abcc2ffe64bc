#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace tlfusion {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

inline constexpr std::string_view kInsFrame = "ins";
inline constexpr std::string_view kUtmFrame = "utm";

/// Vehicle pose at a timestamp: maps INS-frame points into the UTM frame.
struct TimedPose {
  double timestamp = 0.0;
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Frame-to-frame rigid transform; `apply` maps `frame_from` coordinates
/// into `frame_to` coordinates.
struct RigidTransform {
  std::string frame_from;
  std::string frame_to;
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;

  static RigidTransform identity(std::string_view from, std::string_view to);
};

/// outer ∘ inner. Requires inner.frame_to == outer.frame_from.
RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner);

/// The INS→UTM transform carried by a pose.
RigidTransform as_transform(const TimedPose& pose);

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
};

struct CameraModel {
  std::string camera_id;
  CameraIntrinsics intrinsics;
  RigidTransform extrinsic;  // INS → camera
  double max_range_m = 0.0;
  double horizontal_fov_deg = 0.0;

  void validate() const;
  /// Camera centre expressed in the INS frame.
  Vec3 position_in_ins() const;
  /// Unit optical axis (+z of the camera) expressed in the INS frame.
  Vec3 optical_axis_in_ins() const;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Axis-aligned image box given by its centre and size.
struct PixelBox {
  double cx = 0.0;
  double cy = 0.0;
  double h = 0.0;
  double w = 0.0;

  double left() const { return cx - 0.5 * w; }
  double right() const { return cx + 0.5 * w; }
  double top() const { return cy - 0.5 * h; }
  double bottom() const { return cy + 0.5 * h; }
  bool contains(const Pixel& p, double tol = 1e-9) const;

  static PixelBox from_extent(double left, double top, double right, double bottom);
};

/// 3D oriented housing box. `heading_deg` is the facing direction measured
/// counter-clockwise from UTM +x; width is lateral, depth along the facing axis.
struct OrientedBox {
  Vec3 centre = Vec3::Zero();
  double heading_deg = 0.0;
  double width = 0.0;
  double height = 0.0;
  double depth = 0.0;
};

/// Validated, time-ordered pose history.
class PoseBuffer {
 public:
  PoseBuffer() = default;
  explicit PoseBuffer(std::vector<TimedPose> poses);

  TimedPose at(double t) const;
  std::span<const TimedPose> poses() const { return poses_; }
  bool empty() const { return poses_.empty(); }
  double begin_time() const;
  double end_time() const;
  /// Largest time step between consecutive samples bracketing `t`.
  double bracket_gap(double t) const;

 private:
  std::vector<TimedPose> poses_;
};

/// Translation lerp and rotation slerp between the two poses bracketing `t`.
/// Throws ExtrapolationError outside the buffered span.
TimedPose interpolate_pose(std::span<const TimedPose> buffer, double t);

/// T_cam_utm(t) = T_cam_ins ∘ T_utm_ins(t)⁻¹.
RigidTransform camera_from_utm(const RigidTransform& extrinsic, const TimedPose& vehicle_pose);

/// Pinhole projection; throws BehindCameraError when z <= 0.
Pixel project_point(const CameraIntrinsics& k, const Vec3& p_cam);

/// Projects a housing box into the image. Returns nullopt when any corner is
/// behind the camera or the projected extent misses the image entirely.
std::optional<PixelBox> project_box(const OrientedBox& box, const RigidTransform& cam_from_utm,
                                    const CameraIntrinsics& k);

/// Clips to [0,width]×[0,height]; nullopt when nothing remains.
std::optional<PixelBox> clip_to_image(const PixelBox& box, const CameraIntrinsics& k);

Quat yaw_rotation(double yaw_deg);

/// Rotation taking INS axes (x forward, y left, z up) to optical camera axes
/// (x right, y down, z forward) for a camera yawed `yaw_deg` left of forward.
Quat camera_mount_rotation(double yaw_deg = 0.0);

/// Extrinsic (INS→camera) for a camera mounted at `position_in_ins`.
RigidTransform make_extrinsic(std::string_view camera_id, const Vec3& position_in_ins,
                              double yaw_deg = 0.0);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace tlfusion
