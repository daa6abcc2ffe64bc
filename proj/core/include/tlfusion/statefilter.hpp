#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tlfusion/detection.hpp"

namespace tlfusion {

/// Per-type hidden Markov model over the type's valid states.
/// transition(i,j) = P(q_t = j | q_{t-1} = i); prior = π.
struct Hmm {
  TlType type = TlType::kThreeBulb;
  std::vector<TlClass> states;
  Eigen::MatrixXd transition;
  ConfusionModel confusion;
  Eigen::VectorXd prior;

  void validate() const;
  /// Position of `c` in `states`, or nullopt.
  std::optional<std::size_t> index_of(TlClass c) const;
};

/// Filtered posterior over an Hmm's states.
struct BeliefState {
  Eigen::VectorXd alpha;
  double last_update = 0.0;
};

/// Regulated successors of a state (excluding the self transition).
std::span<const TlClass> legal_successors(TlClass from);
/// Self transitions are always legal.
bool is_legal_transition(TlClass from, TlClass to);

/// Self-transition mass on the diagonal, the remainder split evenly over the
/// legal successors, exact zeros elsewhere.
Eigen::MatrixXd default_transition(TlType type, double self_transition = 0.98);

/// Default per-type model: regulated transition matrix, uniform prior and the
/// given confusion model (identity when omitted).
Hmm default_hmm(TlType type, std::optional<ConfusionModel> confusion = std::nullopt);

/// On-disk form of a per-type model: the confusion model is stored as raw
/// detector counts (rows = true, columns = observed).
struct HmmConfig {
  TlType type = TlType::kThreeBulb;
  std::vector<TlClass> states;
  Eigen::MatrixXd transition;
  Eigen::VectorXd prior;
  CountMatrix confusion_counts;
};

/// Normalizes the counts and validates the result.
Hmm build_hmm(const HmmConfig& config);

/// Per-type model set used by the tracker.
struct HmmSet {
  std::array<Hmm, 3> models = {default_hmm(TlType::kThreeBulb),
                               default_hmm(TlType::kFourArrow),
                               default_hmm(TlType::kFiveDoghouse)};

  const Hmm& of(TlType t) const { return models[static_cast<std::size_t>(t)]; }
  void set(Hmm hmm);
};

BeliefState initial_belief(const Hmm& hmm, double t = 0.0);

/// Restricts a 13-way confidence vector to `states` and renormalizes.
/// Throws NoEvidenceError when nothing remains.
Eigen::VectorXd restrict_confidence(const ConfidenceVector& x, std::span<const TlClass> states);

/// c_t = C·x, left unnormalized.
Eigen::VectorXd build_evidence(const ConfusionModel& confusion, const Eigen::VectorXd& x);

/// α' = normalize(c_t ⊙ (Aᵀ α)). Throws ImpossibleObservationError when the
/// normalization constant is zero.
BeliefState forward_update(const BeliefState& belief, const Eigen::MatrixXd& transition,
                           const Eigen::VectorXd& evidence, double t);

/// Argmax state; ties resolve to the lowest canonical rank.
TlClass map_state(const BeliefState& belief, std::span<const TlClass> states);

struct FlashingConfig {
  std::size_t window = 20;  // observations
  double duty_min = 0.5;
  double duty_max = 2.0 / 3.0;
  /// Widening of the duty band while a flashing flag is held.
  double hold_margin = 0.15;

  void validate() const;
};

/// Duty-cycle check over the most recent `cfg.window` unfiltered detected
/// classes (oldest first). Flashing iff duty_min <= on-fraction <= duty_max
/// and one on-class holds a strict majority of the on-observations; returns
/// that class.
std::optional<TlClass> detect_flashing(std::span<const TlClass> history,
                                       const FlashingConfig& cfg);

/// Holds a flashing decision across single-window dips: once set, the flag is
/// kept while the on-fraction stays within the band widened by `hold_margin`
/// and the latched class still dominates the on-observations.
class FlashingLatch {
 public:
  std::optional<TlClass> update(std::span<const TlClass> history, const FlashingConfig& cfg);
  std::optional<TlClass> current() const { return latched_; }
  void reset() { latched_.reset(); }

 private:
  std::optional<TlClass> latched_;
};

}  // namespace tlfusion
