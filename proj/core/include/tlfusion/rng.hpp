#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>

namespace tlfusion {

/// Counter-based random source. Each stream is fixed by its key, so draws do
/// not depend on the order in which other streams are consumed. Only integer
/// arithmetic and libm basics are used, which keeps output identical across
/// standard libraries.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Box-Muller; no cached second variate so every draw is self-contained.
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p);
  /// Index drawn from unnormalized non-negative weights.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::uint64_t state_;
};

/// splitmix64 finalizer, exposed for key hashing.
std::uint64_t mix64(std::uint64_t x);

/// Stable 64-bit hash of a string (FNV-1a followed by mix64).
std::uint64_t hash_key(std::string_view s);

}  // namespace tlfusion
