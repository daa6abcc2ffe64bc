#include "tlfusion/statefilter.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "tlfusion/errors.hpp"

namespace tlfusion {
namespace {

using C = TlClass;

constexpr std::array<C, 1> k3RedNext = {C::k3Green};
constexpr std::array<C, 1> k3GreenNext = {C::k3Yellow};
constexpr std::array<C, 1> k3YellowNext = {C::k3Red};

constexpr std::array<C, 1> k4RleftNext = {C::k4Gleft};
constexpr std::array<C, 1> k4GleftNext = {C::k4Yleft1};
constexpr std::array<C, 2> k4Yleft1Next = {C::k4Yleft2, C::k4Off};
constexpr std::array<C, 2> k4Yleft2Next = {C::k4Off, C::k4Rleft};
constexpr std::array<C, 2> k4OffNext = {C::k4Yleft2, C::k4Rleft};

constexpr std::array<C, 2> k5RedNext = {C::k5dhRedGleft, C::k5dhGreen};
constexpr std::array<C, 1> k5RedGleftNext = {C::k5dhRedYleft};
constexpr std::array<C, 1> k5RedYleftNext = {C::k5dhRed};
constexpr std::array<C, 1> k5GreenNext = {C::k5dhYellow};
constexpr std::array<C, 1> k5YellowNext = {C::k5dhRed};

constexpr double kDutyEps = 1e-9;

struct WindowStats {
  std::size_t on = 0;
  std::size_t window = 0;
  std::optional<TlClass> mode;
  std::size_t mode_count = 0;
};

WindowStats window_stats(std::span<const TlClass> history, std::size_t window) {
  WindowStats s;
  s.window = window;
  std::map<int, std::pair<TlClass, std::size_t>> counts;  // keyed by canonical rank
  for (TlClass c : history.last(window)) {
    if (!is_on(c)) continue;
    ++s.on;
    auto& entry = counts[canonical_rank(c)];
    entry.first = c;
    ++entry.second;
  }
  for (const auto& [rank, entry] : counts) {
    if (entry.second > s.mode_count) {
      s.mode = entry.first;
      s.mode_count = entry.second;
    }
  }
  return s;
}

bool fraction_within(const WindowStats& s, double lo, double hi) {
  const double n = static_cast<double>(s.window);
  const double on = static_cast<double>(s.on);
  return on >= lo * n - kDutyEps && on <= hi * n + kDutyEps;
}

}  // namespace

std::span<const TlClass> legal_successors(TlClass from) {
  switch (from) {
    case C::k3Red: return k3RedNext;
    case C::k3Green: return k3GreenNext;
    case C::k3Yellow: return k3YellowNext;
    case C::k4Rleft: return k4RleftNext;
    case C::k4Gleft: return k4GleftNext;
    case C::k4Yleft1: return k4Yleft1Next;
    case C::k4Yleft2: return k4Yleft2Next;
    case C::k4Off: return k4OffNext;
    case C::k5dhRed: return k5RedNext;
    case C::k5dhRedGleft: return k5RedGleftNext;
    case C::k5dhRedYleft: return k5RedYleftNext;
    case C::k5dhGreen: return k5GreenNext;
    case C::k5dhYellow: return k5YellowNext;
    case C::kBackground: return {};
  }
  return {};
}

bool is_legal_transition(TlClass from, TlClass to) {
  if (from == to) return true;
  const auto next = legal_successors(from);
  return std::find(next.begin(), next.end(), to) != next.end();
}

void Hmm::validate() const {
  const auto n = static_cast<Eigen::Index>(states.size());
  if (n == 0) throw ValidationError("HMM has no states");
  for (TlClass s : states) {
    if (class_to_type(s) != type) {
      throw ValidationError(fmt::format("HMM state {} is not a {} state", class_name(s),
                                        type_name(type)));
    }
  }
  if (transition.rows() != n || transition.cols() != n) {
    throw ValidationError("HMM transition matrix dimensions do not match its states");
  }
  if ((transition.array() < 0.0).any()) throw ValidationError("transition entries must be >= 0");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-9) {
      throw ValidationError(fmt::format("transition row {} does not sum to 1", i));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (transition(i, j) != 0.0 && !is_legal_transition(states[i], states[j])) {
        throw ValidationError(fmt::format("transition {} -> {} is forbidden but has mass {}",
                                          class_name(states[i]), class_name(states[j]),
                                          transition(i, j)));
      }
    }
  }
  if (prior.size() != n || (prior.array() < 0.0).any() || std::abs(prior.sum() - 1.0) > 1e-9) {
    throw ValidationError("HMM prior must be a distribution over its states");
  }
  confusion.validate();
  if (confusion.type != type || confusion.states != states) {
    throw ValidationError("confusion model states must match the HMM states");
  }
}

std::optional<std::size_t> Hmm::index_of(TlClass c) const {
  const auto it = std::find(states.begin(), states.end(), c);
  if (it == states.end()) return std::nullopt;
  return static_cast<std::size_t>(std::distance(states.begin(), it));
}

Eigen::MatrixXd default_transition(TlType type, double self_transition) {
  if (!(self_transition > 0.0 && self_transition <= 1.0)) {
    throw ValidationError("self transition probability must be in (0, 1]");
  }
  const auto states = valid_states(type);
  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto next = legal_successors(states[i]);
    a(i, i) = next.empty() ? 1.0 : self_transition;
    for (TlClass s : next) {
      const auto j = std::distance(states.begin(), std::find(states.begin(), states.end(), s));
      a(i, j) = (1.0 - self_transition) / static_cast<double>(next.size());
    }
  }
  return a;
}

Hmm default_hmm(TlType type, std::optional<ConfusionModel> confusion) {
  const auto states = valid_states(type);
  const auto n = static_cast<Eigen::Index>(states.size());
  Hmm hmm{type,
          {states.begin(), states.end()},
          default_transition(type),
          confusion ? std::move(*confusion) : identity_confusion(type),
          Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
  hmm.validate();
  return hmm;
}

Hmm build_hmm(const HmmConfig& config) {
  Hmm hmm{config.type, config.states, config.transition,
          confusion_from_counts(config.type, config.states, config.confusion_counts),
          config.prior};
  hmm.validate();
  return hmm;
}

void HmmSet::set(Hmm hmm) {
  hmm.validate();
  models[static_cast<std::size_t>(hmm.type)] = std::move(hmm);
}

BeliefState initial_belief(const Hmm& hmm, double t) { return BeliefState{hmm.prior, t}; }

Eigen::VectorXd restrict_confidence(const ConfidenceVector& x, std::span<const TlClass> states) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = x.at(class_index(states[i]));
  }
  const double total = out.sum();
  if (!(total > 0.0)) throw NoEvidenceError();
  return out / total;
}

Eigen::VectorXd build_evidence(const ConfusionModel& confusion, const Eigen::VectorXd& x) {
  if (x.size() != confusion.matrix.cols()) {
    throw ValidationError("confidence vector length does not match the confusion model");
  }
  if (!(x.sum() > 0.0)) throw NoEvidenceError();
  return confusion.matrix * x;
}

BeliefState forward_update(const BeliefState& belief, const Eigen::MatrixXd& transition,
                           const Eigen::VectorXd& evidence, double t) {
  if (transition.rows() != belief.alpha.size() || evidence.size() != belief.alpha.size()) {
    throw ValidationError("belief, transition and evidence dimensions disagree");
  }
  Eigen::VectorXd alpha = evidence.cwiseProduct(transition.transpose() * belief.alpha);
  const double z = alpha.sum();
  if (!(z > 0.0)) throw ImpossibleObservationError();
  return BeliefState{alpha / z, t};
}

TlClass map_state(const BeliefState& belief, std::span<const TlClass> states) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < states.size(); ++i) {
    const double a = belief.alpha(static_cast<Eigen::Index>(i));
    const double b = belief.alpha(static_cast<Eigen::Index>(best));
    if (a > b || (a == b && canonical_rank(states[i]) < canonical_rank(states[best]))) best = i;
  }
  return states[best];
}

void FlashingConfig::validate() const {
  if (window == 0) throw ValidationError("flashing window must be >= 1");
  if (!(duty_min > 0.0 && duty_min < duty_max && duty_max < 1.0)) {
    throw ValidationError("flashing duty bounds must satisfy 0 < min < max < 1");
  }
  if (!(hold_margin >= 0.0)) throw ValidationError("flashing hold margin must be >= 0");
}

std::optional<TlClass> detect_flashing(std::span<const TlClass> history,
                                       const FlashingConfig& cfg) {
  if (history.size() < cfg.window) return std::nullopt;
  const WindowStats s = window_stats(history, cfg.window);
  if (!fraction_within(s, cfg.duty_min, cfg.duty_max)) return std::nullopt;
  if (!s.mode || 2 * s.mode_count <= s.on) return std::nullopt;
  return s.mode;
}

std::optional<TlClass> FlashingLatch::update(std::span<const TlClass> history,
                                             const FlashingConfig& cfg) {
  if (history.size() < cfg.window) {
    latched_.reset();
    return latched_;
  }
  if (latched_) {
    const WindowStats s = window_stats(history, cfg.window);
    const bool in_band =
        fraction_within(s, cfg.duty_min - cfg.hold_margin, cfg.duty_max + cfg.hold_margin);
    if (in_band && s.mode == latched_) return latched_;
    latched_.reset();
  }
  latched_ = detect_flashing(history, cfg);
  return latched_;
}

}  // namespace tlfusion
