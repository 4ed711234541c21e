#pragma once

#include <cstdint>
#include <unordered_map>

#include "gde/matrix.hpp"
#include "gde/rng.hpp"

namespace gde {

/// Reproducible matrix-valued Brownian motion over a fixed span, one
/// independent scalar path per state entry (diagonal noise). Values come
/// from a virtual dyadic bridge tree: B(t) is a pure function of
/// (rng, entry, t), so increments are exactly additive and refining a step
/// never changes the total increment over it. Midpoints are memoized.
class BrownianPath {
 public:
  BrownianPath(RngStream rng, int rows, int cols, double t0, double t1);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double t0() const { return t0_; }
  double t1() const { return t1_; }

  /// B(t) - B(s) entrywise; requires s < t.
  Matrix increment(double s, double t) const;

  /// Scalar path value for one state entry (B(t0) = 0).
  double value_at(int entry, double t) const;

 private:
  double midpoint_value(int entry, int level, std::uint64_t index, double left_value,
                        double right_value, double half_width) const;

  struct NodeKey {
    std::uint64_t hi;  // (entry << 8) | level
    std::uint64_t lo;  // index within the level
    bool operator==(const NodeKey& o) const { return hi == o.hi && lo == o.lo; }
  };
  struct NodeKeyHash {
    std::size_t operator()(const NodeKey& k) const;
  };

  RngStream rng_;
  int rows_ = 0;
  int cols_ = 0;
  double t0_ = 0.0;
  double t1_ = 1.0;
  int max_depth_ = 44;
  mutable std::unordered_map<NodeKey, double, NodeKeyHash> cache_;
};

}  // namespace gde
