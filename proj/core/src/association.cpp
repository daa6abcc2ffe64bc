#include "tlfusion/association.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tlfusion/errors.hpp"

namespace tlfusion {

double box_distance(const PixelBox& a, const PixelBox& b) {
  const double dx = a.cx - b.cx;
  const double dy = a.cy - b.cy;
  const double dh = a.h - b.h;
  const double dw = a.w - b.w;
  return std::sqrt(dx * dx + dy * dy + dh * dh + dw * dw);
}

CostMatrix build_cost_matrix(std::span<const ProjectedLight> projected,
                             std::span<const Detection2D> detections, double gate_px) {
  if (!(gate_px > 0.0)) throw ValidationError("association gate must be positive");
  CostMatrix costs(projected.size(), detections.size());
  for (std::size_t j = 0; j < detections.size(); ++j) {
    const TlClass cls = detections[j].detected_class();
    for (std::size_t i = 0; i < projected.size(); ++i) {
      if (cls == TlClass::kBackground || class_to_type(cls) != projected[i].type) continue;
      const double d = box_distance(projected[i].box, detections[j].box);
      if (d <= gate_px) costs(i, j) = d;
    }
  }
  return costs;
}

Assignment solve_assignment(const CostMatrix& costs) {
  const std::size_t m = costs.rows();
  const std::size_t n_cols = costs.cols();
  Assignment result;
  if (m == 0 || n_cols == 0) return result;

  // Forbidden and padding cells get a cost larger than any sum of real
  // entries, so the solver first maximizes the number of real pairs.
  double finite_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (costs.feasible(i, j)) finite_sum += costs(i, j);
    }
  }
  const double dominant = 2.0 * finite_sum + 1.0;

  const std::size_t n = std::max(m, n_cols);
  auto cell = [&](std::size_t i, std::size_t j) {
    return (i < m && j < n_cols && costs.feasible(i, j)) ? costs(i, j) : dominant;
  };

  // Shortest augmenting path with row/column potentials (1-based sentinel 0).
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> row_of_col(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  std::vector<double> min_slack(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInfiniteCost);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      double delta = kInfiniteCost;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cell(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < min_slack[j]) {
          min_slack[j] = reduced;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = row_of_col[j];
    if (i == 0) continue;
    if (i - 1 < m && j - 1 < n_cols && costs.feasible(i - 1, j - 1)) {
      result.pairs.emplace_back(i - 1, j - 1);
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  for (const auto& [i, j] : result.pairs) result.total_cost += costs(i, j);
  return result;
}

Vec3 back_project(const Detection2D& detection, const CameraIntrinsics& k,
                  const RigidTransform& cam_from_utm, double type_height_m) {
  if (!(detection.box.h > 0.0)) {
    throw DegenerateBoxError(fmt::format("detection box height {} is not positive",
                                         detection.box.h));
  }
  if (!(type_height_m > 0.0)) {
    throw DegenerateBoxError(fmt::format("type height {} is not positive", type_height_m));
  }
  const double z = k.fy * type_height_m / detection.box.h;
  const Vec3 p_cam((detection.box.cx - k.cx) * z / k.fx, (detection.box.cy - k.cy) * z / k.fy, z);
  return cam_from_utm.inverse().apply(p_cam);
}

}  // namespace tlfusion
