#include "gde/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

double u64_to_unit(std::uint64_t x) {
  // 53 mantissa bits -> [0, 1)
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}
}  // namespace

std::uint64_t RngStream::mix(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t RngStream::at(std::uint64_t counter) const {
  return mix(mix(mix(seed_) ^ (stream_ * kGolden)) ^ counter);
}

double RngStream::uniform() { return u64_to_unit(next_u64()); }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
  // Box-Muller on two counter draws; u1 kept away from zero.
  const double u1 = u64_to_unit(next_u64());
  const double u2 = u64_to_unit(next_u64());
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return r * std::cos(2.0 * M_PI * u2);
}

bool RngStream::bernoulli(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli: p outside [0,1]");
  return uniform() < p;
}

long RngStream::poisson(double mean) {
  if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
  if (mean == 0.0) return 0;
  // Poisson additivity keeps the Knuth loop short for large means.
  if (mean > 30.0) {
    const double half = mean / 2.0;
    return poisson(half) + poisson(mean - half);
  }
  const double limit = std::exp(-mean);
  long k = 0;
  double prod = 1.0;
  do {
    ++k;
    prod *= uniform();
  } while (prod > limit);
  return k - 1;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // modulo bias is negligible for n << 2^64
  return next_u64() % n;
}

RngStream RngStream::split(std::uint64_t tag) const {
  return RngStream(seed_, mix(stream_ ^ mix(tag)));
}

std::uint64_t RngStream::keyed_u64(std::uint64_t k1, std::uint64_t k2) const {
  return mix(mix(mix(mix(seed_) ^ (stream_ * kGolden)) ^ k1) ^ (k2 * kGolden));
}

double RngStream::keyed_normal(std::uint64_t k1, std::uint64_t k2) const {
  const double u1 = u64_to_unit(keyed_u64(k1, 2 * k2));
  const double u2 = u64_to_unit(keyed_u64(k1, 2 * k2 + 1));
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return r * std::cos(2.0 * M_PI * u2);
}

}  // namespace gde
