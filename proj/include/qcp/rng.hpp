#pragma once

#include <cstdint>
#include <random>

namespace qcp {

/// SplitMix64 finalizer. Used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seeded pseudo-random generator. Every random choice in the library flows
/// through one of these; there is no hidden entropy source.
///
/// A generator is never shared between threads. Workers obtain their own via
/// `split(index)`, which is a pure function of (seed, index):
///   child_seed = splitmix64(seed ^ splitmix64(index + 0x9E3779B97F4A7C15)).
/// Trial `i` of a Monte Carlo run always uses `master.split(i)`, so serial and
/// parallel executions draw identical streams.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }
  Rng split(std::uint64_t index) const;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_below(std::uint64_t n);
  /// Bernoulli draw with success probability p (clamped to [0, 1]).
  bool bernoulli(double p);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace qcp
