#include "tlfusion/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "tlfusion/errors.hpp"

namespace tlfusion {

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.frame_from = frame_to;
  inv.frame_to = frame_from;
  inv.rotation = rotation.conjugate();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::identity(std::string_view from, std::string_view to) {
  RigidTransform t;
  t.frame_from = std::string(from);
  t.frame_to = std::string(to);
  return t;
}

RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner) {
  if (inner.frame_to != outer.frame_from) {
    throw FrameChainError(fmt::format("cannot compose {}->{} after {}->{}", outer.frame_from,
                                      outer.frame_to, inner.frame_from, inner.frame_to));
  }
  RigidTransform out;
  out.frame_from = inner.frame_from;
  out.frame_to = outer.frame_to;
  out.rotation = (outer.rotation * inner.rotation).normalized();
  out.translation = outer.rotation * inner.translation + outer.translation;
  return out;
}

RigidTransform as_transform(const TimedPose& pose) {
  RigidTransform t;
  t.frame_from = std::string(kInsFrame);
  t.frame_to = std::string(kUtmFrame);
  t.rotation = pose.rotation;
  t.translation = pose.translation;
  return t;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ValidationError("camera focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw ValidationError("camera image dimensions must be positive");
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw ValidationError("principal point must lie strictly inside the image");
  }
}

void CameraModel::validate() const {
  if (camera_id.empty()) throw ValidationError("camera_id must not be empty");
  intrinsics.validate();
  if (!(max_range_m > 0.0)) {
    throw ValidationError(fmt::format("camera {}: max_range must be positive", camera_id));
  }
  if (!(horizontal_fov_deg > 0.0 && horizontal_fov_deg < 180.0)) {
    throw ValidationError(fmt::format("camera {}: horizontal fov must be in (0, 180)", camera_id));
  }
  if (extrinsic.frame_from != kInsFrame) {
    throw FrameChainError(fmt::format("camera {}: extrinsic must map from '{}', got '{}'",
                                      camera_id, kInsFrame, extrinsic.frame_from));
  }
  if (std::abs(extrinsic.rotation.norm() - 1.0) > 1e-9) {
    throw ValidationError(fmt::format("camera {}: extrinsic quaternion is not unit", camera_id));
  }
}

Vec3 CameraModel::position_in_ins() const {
  return -(extrinsic.rotation.conjugate() * extrinsic.translation);
}

Vec3 CameraModel::optical_axis_in_ins() const {
  return extrinsic.rotation.conjugate() * Vec3::UnitZ();
}

bool PixelBox::contains(const Pixel& p, double tol) const {
  return p.u >= left() - tol && p.u <= right() + tol && p.v >= top() - tol &&
         p.v <= bottom() + tol;
}

PixelBox PixelBox::from_extent(double left, double top, double right, double bottom) {
  return PixelBox{0.5 * (left + right), 0.5 * (top + bottom), bottom - top, right - left};
}

PoseBuffer::PoseBuffer(std::vector<TimedPose> poses) : poses_(std::move(poses)) {
  for (std::size_t i = 0; i < poses_.size(); ++i) {
    if (std::abs(poses_[i].rotation.norm() - 1.0) > 1e-9) {
      throw ValidationError(fmt::format("pose {} has a non-unit quaternion", i));
    }
    if (i > 0 && !(poses_[i].timestamp > poses_[i - 1].timestamp)) {
      throw ValidationError(
          fmt::format("pose timestamps must be strictly increasing (index {})", i));
    }
  }
}

TimedPose PoseBuffer::at(double t) const { return interpolate_pose(poses_, t); }

double PoseBuffer::begin_time() const {
  return poses_.empty() ? std::numeric_limits<double>::quiet_NaN() : poses_.front().timestamp;
}

double PoseBuffer::end_time() const {
  return poses_.empty() ? std::numeric_limits<double>::quiet_NaN() : poses_.back().timestamp;
}

double PoseBuffer::bracket_gap(double t) const {
  if (poses_.size() < 2) return std::numeric_limits<double>::infinity();
  auto it = std::lower_bound(poses_.begin(), poses_.end(), t,
                             [](const TimedPose& p, double q) { return p.timestamp < q; });
  if (it == poses_.end()) return std::numeric_limits<double>::infinity();
  if (it->timestamp == t) return 0.0;
  if (it == poses_.begin()) return std::numeric_limits<double>::infinity();
  return it->timestamp - std::prev(it)->timestamp;
}

TimedPose interpolate_pose(std::span<const TimedPose> buffer, double t) {
  if (buffer.size() < 2) {
    const double b = buffer.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : buffer.front().timestamp;
    if (buffer.size() == 1 && buffer.front().timestamp == t) return buffer.front();
    throw ExtrapolationError(t, b, b);
  }
  const double begin = buffer.front().timestamp;
  const double end = buffer.back().timestamp;
  if (!(t >= begin && t <= end)) throw ExtrapolationError(t, begin, end);

  auto it = std::lower_bound(buffer.begin(), buffer.end(), t,
                             [](const TimedPose& p, double q) { return p.timestamp < q; });
  if (it->timestamp == t) return *it;

  const TimedPose& a = *std::prev(it);
  const TimedPose& b = *it;
  const double alpha = (t - a.timestamp) / (b.timestamp - a.timestamp);
  TimedPose out;
  out.timestamp = t;
  out.translation = (1.0 - alpha) * a.translation + alpha * b.translation;
  out.rotation = a.rotation.slerp(alpha, b.rotation).normalized();
  return out;
}

RigidTransform camera_from_utm(const RigidTransform& extrinsic, const TimedPose& vehicle_pose) {
  return compose(extrinsic, as_transform(vehicle_pose).inverse());
}

Pixel project_point(const CameraIntrinsics& k, const Vec3& p_cam) {
  if (!(p_cam.z() > 0.0)) throw BehindCameraError(p_cam.z());
  return Pixel{k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy};
}

std::optional<PixelBox> project_box(const OrientedBox& box, const RigidTransform& cam_from_utm,
                                    const CameraIntrinsics& k) {
  const double heading = deg_to_rad(box.heading_deg);
  const Vec3 facing(std::cos(heading), std::sin(heading), 0.0);
  const Vec3 lateral(-std::sin(heading), std::cos(heading), 0.0);
  const Vec3 up = Vec3::UnitZ();

  // Every housing corner must be in front of the camera.
  for (double sd : {-0.5, 0.5}) {
    for (double sw : {-0.5, 0.5}) {
      for (double sh : {-0.5, 0.5}) {
        const Vec3 corner = box.centre + sd * box.depth * facing + sw * box.width * lateral +
                            sh * box.height * up;
        if (!(cam_from_utm.apply(corner).z() > 0.0)) return std::nullopt;
      }
    }
  }

  // The image extent is taken from the housing face through the box centre.
  double u_min = std::numeric_limits<double>::infinity();
  double v_min = u_min;
  double u_max = -u_min;
  double v_max = -u_min;
  for (double sw : {-0.5, 0.5}) {
    for (double sh : {-0.5, 0.5}) {
      const Vec3 corner = box.centre + sw * box.width * lateral + sh * box.height * up;
      const Pixel p = project_point(k, cam_from_utm.apply(corner));
      u_min = std::min(u_min, p.u);
      u_max = std::max(u_max, p.u);
      v_min = std::min(v_min, p.v);
      v_max = std::max(v_max, p.v);
    }
  }
  if (u_max < 0.0 || u_min > k.width || v_max < 0.0 || v_min > k.height) return std::nullopt;
  return PixelBox::from_extent(u_min, v_min, u_max, v_max);
}

std::optional<PixelBox> clip_to_image(const PixelBox& box, const CameraIntrinsics& k) {
  const double left = std::max(box.left(), 0.0);
  const double right = std::min(box.right(), static_cast<double>(k.width));
  const double top = std::max(box.top(), 0.0);
  const double bottom = std::min(box.bottom(), static_cast<double>(k.height));
  if (right < left || bottom < top) return std::nullopt;
  return PixelBox::from_extent(left, top, right, bottom);
}

Quat yaw_rotation(double yaw_deg) {
  return Quat(Eigen::AngleAxisd(deg_to_rad(yaw_deg), Vec3::UnitZ()));
}

Quat camera_mount_rotation(double yaw_deg) {
  Eigen::Matrix3d ins_to_optical;
  ins_to_optical << 0.0, -1.0, 0.0,  //
      0.0, 0.0, -1.0,                //
      1.0, 0.0, 0.0;
  return (Quat(ins_to_optical) * yaw_rotation(yaw_deg).conjugate()).normalized();
}

RigidTransform make_extrinsic(std::string_view camera_id, const Vec3& position_in_ins,
                              double yaw_deg) {
  RigidTransform t;
  t.frame_from = std::string(kInsFrame);
  t.frame_to = std::string(camera_id);
  t.rotation = camera_mount_rotation(yaw_deg);
  t.translation = -(t.rotation * position_in_ins);
  return t;
}

}  // namespace tlfusion
