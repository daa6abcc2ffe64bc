#include "tlfusion/detection.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tlfusion/errors.hpp"

namespace tlfusion {
namespace {

constexpr std::array<std::string_view, kNumClassesWithBackground> kClassNames = {
    "3-green",   "3-red",     "3-yellow",      "4-gleft",       "4-off",
    "4-rleft",   "4-yleft1",  "4-yleft2",      "5dh-green",     "5dh-red",
    "5dh-red-gleft", "5dh-red-yleft", "5dh-yellow", "background"};

constexpr std::array<TlClass, 3> kThreeBulbStates = {TlClass::k3Red, TlClass::k3Yellow,
                                                     TlClass::k3Green};
constexpr std::array<TlClass, 5> kFourArrowStates = {TlClass::k4Rleft, TlClass::k4Yleft1,
                                                     TlClass::k4Yleft2, TlClass::k4Gleft,
                                                     TlClass::k4Off};
constexpr std::array<TlClass, 5> kFiveDoghouseStates = {
    TlClass::k5dhRed, TlClass::k5dhRedYleft, TlClass::k5dhRedGleft, TlClass::k5dhYellow,
    TlClass::k5dhGreen};

}  // namespace

std::string_view class_name(TlClass c) { return kClassNames.at(static_cast<std::size_t>(c)); }

TlClass class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<TlClass>(i);
  }
  throw ParseError(fmt::format("unknown traffic-light class '{}'", name));
}

std::size_t class_index(TlClass c) { return static_cast<std::size_t>(c); }

TlClass class_at(std::size_t index) {
  if (index >= kNumClassesWithBackground) {
    throw ParseError(fmt::format("class index {} out of range", index));
  }
  return static_cast<TlClass>(index);
}

std::string_view type_name(TlType t) {
  switch (t) {
    case TlType::kThreeBulb: return "three_bulb";
    case TlType::kFourArrow: return "four_arrow";
    case TlType::kFiveDoghouse: return "five_doghouse";
  }
  return "unknown";
}

TlType type_from_name(std::string_view name) {
  for (TlType t : kAllTypes) {
    if (type_name(t) == name) return t;
  }
  throw ParseError(fmt::format("unknown traffic-light type '{}'", name));
}

TlType class_to_type(TlClass c) {
  const std::string_view name = class_name(c);
  if (name.starts_with("3-")) return TlType::kThreeBulb;
  if (name.starts_with("4-")) return TlType::kFourArrow;
  if (name.starts_with("5dh-")) return TlType::kFiveDoghouse;
  throw NoTypeError();
}

std::span<const TlClass> valid_states(TlType t) {
  switch (t) {
    case TlType::kThreeBulb: return kThreeBulbStates;
    case TlType::kFourArrow: return kFourArrowStates;
    case TlType::kFiveDoghouse: return kFiveDoghouseStates;
  }
  return {};
}

int canonical_rank(TlClass c) {
  int rank = 0;
  for (TlType t : kAllTypes) {
    for (TlClass s : valid_states(t)) {
      if (s == c) return rank;
      ++rank;
    }
  }
  return rank;  // background sorts last
}

bool is_on(TlClass c) { return c != TlClass::k4Off && c != TlClass::kBackground; }

double TypeHeights::of(TlType t) const {
  switch (t) {
    case TlType::kThreeBulb: return three_bulb_m;
    case TlType::kFourArrow: return four_arrow_m;
    case TlType::kFiveDoghouse: return five_doghouse_m;
  }
  return three_bulb_m;
}

ConfidenceVector one_hot(TlClass c) {
  ConfidenceVector x{};
  x.at(class_index(c)) = 1.0;
  return x;
}

TlClass Detection2D::detected_class() const {
  const auto it = std::max_element(confidence.begin(), confidence.end());
  return static_cast<TlClass>(std::distance(confidence.begin(), it));
}

void Detection2D::validate() const {
  double sum = 0.0;
  for (double v : confidence) {
    if (!(v >= 0.0)) throw ValidationError("confidence entries must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ValidationError(fmt::format("confidence vector sums to {}, expected 1", sum));
  }
  if (!(box.h >= 0.0) || !(box.w >= 0.0)) {
    throw ValidationError("detection box dimensions must be non-negative");
  }
  if (!(score >= 0.0 && score <= 1.0)) throw ValidationError("detection score must be in [0,1]");
}

void ConfusionModel::validate() const {
  const auto n = static_cast<Eigen::Index>(states.size());
  if (matrix.rows() != n || matrix.cols() != n) {
    throw ValidationError("confusion matrix dimensions do not match its state list");
  }
  for (TlClass s : states) {
    if (class_to_type(s) != type) {
      throw ValidationError(fmt::format("state {} does not belong to type {}", class_name(s),
                                        type_name(type)));
    }
  }
  if ((matrix.array() < 0.0).any()) throw ValidationError("confusion entries must be >= 0");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(matrix.col(k).sum() - 1.0) > 1e-9) {
      throw ValidationError(fmt::format("confusion column {} does not sum to 1", k));
    }
  }
}

ConfusionModel confusion_from_counts(TlType type, std::vector<TlClass> states,
                                     const CountMatrix& counts) {
  const auto n = static_cast<Eigen::Index>(states.size());
  if (counts.rows() != n || counts.cols() != n) {
    throw ValidationError(fmt::format("confusion counts must be {}x{}, got {}x{}", n, n,
                                      counts.rows(), counts.cols()));
  }
  if ((counts.array() < 0).any()) throw ValidationError("confusion counts must be >= 0");

  ConfusionModel model{type, std::move(states), Eigen::MatrixXd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::int64_t total = counts.col(k).sum();
    if (total <= 0) throw DegenerateColumnError(static_cast<std::size_t>(k));
    model.matrix.col(k) = counts.col(k).cast<double>() / static_cast<double>(total);
  }
  model.validate();
  return model;
}

ConfusionModel identity_confusion(TlType type) {
  const auto states = valid_states(type);
  const auto n = static_cast<Eigen::Index>(states.size());
  return ConfusionModel{type, {states.begin(), states.end()}, Eigen::MatrixXd::Identity(n, n)};
}

}  // namespace tlfusion
