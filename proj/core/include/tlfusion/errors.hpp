#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tlfusion {

/// Base of every error raised by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI when it reports failures as JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Pose query outside the buffered time span.
class ExtrapolationError : public Error {
 public:
  ExtrapolationError(double t, double span_begin, double span_end);

  double query() const noexcept { return query_; }
  double span_begin() const noexcept { return span_begin_; }
  double span_end() const noexcept { return span_end_; }

 private:
  double query_;
  double span_begin_;
  double span_end_;
};

class FrameChainError : public Error {
 public:
  explicit FrameChainError(const std::string& message)
      : Error("frame_chain", message) {}
};

class BehindCameraError : public Error {
 public:
  explicit BehindCameraError(double z);
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message) : Error("parse", message) {}
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : Error("duplicate_id", "duplicate light_id '" + id + "'") {}
};

class NoTypeError : public Error {
 public:
  NoTypeError() : Error("no_type", "background class has no traffic-light type") {}
};

class DegenerateColumnError : public Error {
 public:
  explicit DegenerateColumnError(std::size_t column)
      : Error("degenerate_column",
              "confusion count column " + std::to_string(column) + " sums to zero") {}
};

class DegenerateBoxError : public Error {
 public:
  explicit DegenerateBoxError(const std::string& message)
      : Error("degenerate_box", message) {}
};

class NoEvidenceError : public Error {
 public:
  NoEvidenceError()
      : Error("no_evidence", "confidence vector is zero on the type's valid states") {}
};

class ImpossibleObservationError : public Error {
 public:
  ImpossibleObservationError()
      : Error("impossible_observation", "belief update normalization constant is zero") {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error("validation", message) {}
};

class ScenarioValidationError : public Error {
 public:
  explicit ScenarioValidationError(const std::string& message)
      : Error("scenario_validation", message) {}
};

class PoseCoverageError : public Error {
 public:
  explicit PoseCoverageError(double t);

  double timestamp() const noexcept { return timestamp_; }

 private:
  double timestamp_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& message) : Error("evaluation", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

}  // namespace tlfusion
