#pragma once

// Independent reference implementations used only by tests.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tlfusion/association.hpp"

namespace oracle {

struct BestPairing {
  std::size_t pairs = 0;
  double cost = 0.0;
};

/// Enumerates every partial one-to-one pairing (row i takes one unused
/// feasible column or none) and keeps the one with most pairs, then least
/// cost. Memoized on (row, used-column mask); N must be < 32.
inline BestPairing enumerate_assignments(const tlfusion::CostMatrix& c) {
  const std::size_t m = c.rows();
  const std::size_t n = c.cols();
  const std::size_t masks = std::size_t{1} << n;
  std::vector<BestPairing> memo((m + 1) * masks);
  std::vector<char> known((m + 1) * masks, 0);
  auto better = [](const BestPairing& a, const BestPairing& b) {
    return a.pairs > b.pairs || (a.pairs == b.pairs && a.cost < b.cost);
  };
  auto solve = [&](auto&& self, std::size_t row, std::size_t used) -> BestPairing {
    if (row == m) return {};
    const std::size_t key = row * masks + used;
    if (known[key]) return memo[key];
    BestPairing best = self(self, row + 1, used);
    for (std::size_t j = 0; j < n; ++j) {
      if ((used >> j) & 1u || !c.feasible(row, j)) continue;
      BestPairing cand = self(self, row + 1, used | (std::size_t{1} << j));
      cand.pairs += 1;
      cand.cost += c(row, j);
      if (better(cand, best)) best = cand;
    }
    known[key] = 1;
    memo[key] = best;
    return best;
  };
  return solve(solve, 0, 0);
}

/// Filtered posterior P(q_T | o_1..T) by summing the joint probability of
/// every hidden path q_0..q_T, where q_0 ~ prior and each step applies the
/// transition then weights by the evidence.
inline Eigen::VectorXd path_marginal(const Eigen::MatrixXd& a, const Eigen::VectorXd& prior,
                                     const std::vector<Eigen::VectorXd>& evidence) {
  const auto n = static_cast<std::size_t>(prior.size());
  const std::size_t steps = evidence.size();
  std::vector<std::size_t> path(steps + 1, 0);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(prior.size());
  while (true) {
    double p = prior(static_cast<Eigen::Index>(path[0]));
    for (std::size_t t = 1; t <= steps && p != 0.0; ++t) {
      const auto from = static_cast<Eigen::Index>(path[t - 1]);
      const auto to = static_cast<Eigen::Index>(path[t]);
      p *= a(from, to) * evidence[t - 1](to);
    }
    out(static_cast<Eigen::Index>(path[steps])) += p;
    std::size_t k = 0;
    while (k <= steps && ++path[k] == n) path[k++] = 0;
    if (k > steps) break;
  }
  return out / out.sum();
}

/// Random row-stochastic matrix, some entries forced to zero but every row
/// keeps its diagonal.
inline Eigen::MatrixXd random_stochastic(std::size_t n, std::mt19937_64& rng, double zero_prob) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool zero = i != j && u(rng) < zero_prob;
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = zero ? 0.0 : u(rng) + 1e-3;
    }
    a.row(static_cast<Eigen::Index>(i)) /= a.row(static_cast<Eigen::Index>(i)).sum();
  }
  return a;
}

inline Eigen::VectorXd random_distribution(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = u(rng);
  return v / v.sum();
}

/// Gated cost matrix whose finite entries are multiples of 1/64, so every
/// partial sum is exact in double precision.
inline tlfusion::CostMatrix random_gated_costs(std::size_t m, std::size_t n, double inf_prob,
                                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> ticks(0, 64 * 200);
  tlfusion::CostMatrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (u(rng) >= inf_prob) c(i, j) = ticks(rng) / 64.0;
    }
  }
  return c;
}

}  // namespace oracle
