#pragma once

#include <cstdint>

namespace gde {

/// Counter-based random stream: every draw is a pure function of
/// (seed, stream_id, counter), so identical construction replays the exact
/// sequence and disjoint stream ids give independent streams. Streams are
/// single-owner; to hand randomness to a parallel task, split() a child
/// instead of sharing.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() { return at(counter_++); }

  /// Uniform draw in [0, 1).
  double uniform();
  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; consumes two counters per draw.
  double normal();
  bool bernoulli(double p);
  /// Exact Poisson sample (Knuth multiplication, halving for large means).
  long poisson(double mean);
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Child stream with a derived stream id; independent of the parent and of
  /// siblings with different tags.
  RngStream split(std::uint64_t tag) const;

  /// Stateless keyed draws, independent of the counter. Used by the Brownian
  /// tree so that a path value depends only on (seed, stream, key).
  std::uint64_t keyed_u64(std::uint64_t k1, std::uint64_t k2) const;
  double keyed_normal(std::uint64_t k1, std::uint64_t k2) const;

  /// SplitMix64 finalizer; the avalanche primitive behind every draw.
  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t at(std::uint64_t counter) const;

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace gde
