#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "tlfusion/detection.hpp"
#include "tlfusion/geometry.hpp"

namespace tlfusion {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultGatePx = 100.0;

/// Dense row-major M×N cost matrix. Entries are finite and >= 0, or
/// kInfiniteCost for a forbidden pairing.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = kInfiniteCost)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  bool feasible(std::size_t i, std::size_t j) const { return (*this)(i, j) != kInfiniteCost; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // sorted by row
  double total_cost = 0.0;
};

struct ProjectedLight {
  PixelBox box;
  TlType type = TlType::kThreeBulb;
};

/// L2 norm of the (cx, cy, h, w) difference.
double box_distance(const PixelBox& a, const PixelBox& b);

/// c(i,j) = L2 box distance when within `gate_px` and the detection's argmax
/// class belongs to the light's type, else kInfiniteCost.
CostMatrix build_cost_matrix(std::span<const ProjectedLight> projected,
                             std::span<const Detection2D> detections, double gate_px);

/// Minimum-cost one-to-one assignment over feasible entries, maximizing the
/// number of pairs first. O(n³) Hungarian on a padded square matrix.
Assignment solve_assignment(const CostMatrix& costs);

/// Recovers the UTM centroid of a detection from the known housing height:
/// z = fy·H/h, p_cam = z·K⁻¹(cx, cy, 1). Throws DegenerateBoxError for h <= 0.
Vec3 back_project(const Detection2D& detection, const CameraIntrinsics& k,
                  const RigidTransform& cam_from_utm, double type_height_m);

}  // namespace tlfusion
