#include "gde/brownian.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

BrownianPath::BrownianPath(RngStream rng, int rows, int cols, double t0, double t1)
    : rng_(rng), rows_(rows), cols_(cols), t0_(t0), t1_(t1) {
  if (!(t1 > t0)) throw std::invalid_argument("BrownianPath: need t1 > t0");
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("BrownianPath: empty dimension");
}

std::size_t BrownianPath::NodeKeyHash::operator()(const NodeKey& k) const {
  return static_cast<std::size_t>(RngStream::mix(RngStream::mix(k.hi) ^ k.lo));
}

double BrownianPath::midpoint_value(int entry, int level, std::uint64_t index, double left_value,
                                    double right_value, double half_width) const {
  const NodeKey key{(static_cast<std::uint64_t>(entry) << 8) | static_cast<std::uint64_t>(level),
                    index};
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const double mean = 0.5 * (left_value + right_value);
  const double std_dev = std::sqrt(half_width / 2.0);
  const double v = mean + std_dev * rng_.keyed_normal(RngStream::mix(key.hi) ^ 0x71c9u, key.lo);
  cache_.emplace(key, v);
  return v;
}

double BrownianPath::value_at(int entry, double t) const {
  if (entry < 0 || entry >= rows_ * cols_) {
    throw std::invalid_argument("BrownianPath: entry out of range");
  }
  if (t < t0_ - 1e-12 || t > t1_ + 1e-12) {
    throw std::invalid_argument("BrownianPath: query t=" + std::to_string(t) +
                                " outside span [" + std::to_string(t0_) + ", " +
                                std::to_string(t1_) + "]");
  }
  // endpoint draw keyed per entry
  const std::uint64_t end_key = RngStream::mix(0xE0DF00Dull ^ static_cast<std::uint64_t>(entry));
  const double b_end = std::sqrt(t1_ - t0_) * rng_.keyed_normal(end_key, 0x2545F491u);
  if (t <= t0_) return 0.0;
  if (t >= t1_) return b_end;

  double a = t0_, b = t1_;
  double va = 0.0, vb = b_end;
  std::uint64_t index = 0;
  for (int level = 0; level < max_depth_; ++level) {
    const double mid = 0.5 * (a + b);
    const double vm = midpoint_value(entry, level, index, va, vb, 0.5 * (b - a));
    if (t == mid) return vm;
    if (t < mid) {
      b = mid;
      vb = vm;
      index = index * 2;
    } else {
      a = mid;
      va = vm;
      index = index * 2 + 1;
    }
  }
  // below tree resolution: deterministic linear interpolation
  const double w = (t - a) / (b - a);
  return va + w * (vb - va);
}

Matrix BrownianPath::increment(double s, double t) const {
  if (!(s < t)) {
    throw std::invalid_argument("BrownianPath::increment: need s < t, got s=" +
                                std::to_string(s) + ", t=" + std::to_string(t));
  }
  Matrix inc(rows_, cols_);
  for (int e = 0; e < rows_ * cols_; ++e) {
    inc.values()[e] = value_at(e, t) - value_at(e, s);
  }
  return inc;
}

}  // namespace gde
