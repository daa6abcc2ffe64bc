#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tlfusion/geometry.hpp"

namespace tlfusion {

/// The 13 detector classes plus background. The enumerator order is the index
/// order of confidence vectors on the wire.
enum class TlClass : std::uint8_t {
  k3Green = 0,
  k3Red,
  k3Yellow,
  k4Gleft,
  k4Off,
  k4Rleft,
  k4Yleft1,
  k4Yleft2,
  k5dhGreen,
  k5dhRed,
  k5dhRedGleft,
  k5dhRedYleft,
  k5dhYellow,
  kBackground,
};

inline constexpr std::size_t kNumClasses = 13;
inline constexpr std::size_t kNumClassesWithBackground = kNumClasses + 1;

enum class TlType : std::uint8_t { kThreeBulb = 0, kFourArrow, kFiveDoghouse };

inline constexpr std::array<TlType, 3> kAllTypes = {TlType::kThreeBulb, TlType::kFourArrow,
                                                    TlType::kFiveDoghouse};

std::string_view class_name(TlClass c);
/// Throws ParseError on an unknown name.
TlClass class_from_name(std::string_view name);
std::size_t class_index(TlClass c);
TlClass class_at(std::size_t index);

std::string_view type_name(TlType t);
TlType type_from_name(std::string_view name);

/// Throws NoTypeError for background.
TlType class_to_type(TlClass c);

/// Valid states of a type in canonical order (red before yellow before green,
/// off last).
std::span<const TlClass> valid_states(TlType t);

/// Global canonical order used for deterministic tie-breaking.
int canonical_rank(TlClass c);

/// Everything but 4-off and background shows an illuminated bulb.
bool is_on(TlClass c);

/// Physical housing heights per type, used for back-projection.
struct TypeHeights {
  double three_bulb_m = 0.76;
  double four_arrow_m = 1.07;
  double five_doghouse_m = 0.76;

  double of(TlType t) const;
};

using ConfidenceVector = std::array<double, kNumClasses>;

ConfidenceVector one_hot(TlClass c);

struct Detection2D {
  std::string camera_id;
  double timestamp = 0.0;
  PixelBox box;
  ConfidenceVector confidence{};
  double score = 1.0;

  /// Argmax of the confidence vector (lowest index on ties).
  TlClass detected_class() const;
  void validate() const;
};

/// All detections of one camera at one frame timestamp. An empty list still
/// marks the camera frame as processed.
struct CameraFrameDetections {
  std::string camera_id;
  double timestamp = 0.0;
  std::vector<Detection2D> detections;
};

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// C(j,k) = P(true state j | observed k) over a type's state list.
struct ConfusionModel {
  TlType type = TlType::kThreeBulb;
  std::vector<TlClass> states;
  Eigen::MatrixXd matrix;

  void validate() const;
};

/// Column-normalizes detector confusion counts (rows = true, columns =
/// observed). Throws DegenerateColumnError on an empty column.
ConfusionModel confusion_from_counts(TlType type, std::vector<TlClass> states,
                                     const CountMatrix& counts);

ConfusionModel identity_confusion(TlType type);

}  // namespace tlfusion
