#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "gde/brownian.hpp"

using namespace gde;

TEST_CASE("bridge consistency: [0,1] equals [0,1/2] + [1/2,1]") {
  BrownianPath path(RngStream(5, 2), 2, 3, 0.0, 1.0);
  const Matrix whole = path.increment(0.0, 1.0);
  const Matrix left = path.increment(0.0, 0.5);
  const Matrix right = path.increment(0.5, 1.0);
  for (std::size_t i = 0; i < whole.size(); ++i) {
    // the identity is exact by construction (pointwise path function); the
    // float sum can round in the last ulp
    CHECK(whole.values()[i] ==
          doctest::Approx(left.values()[i] + right.values()[i]).epsilon(1e-15));
  }
  // additivity holds at non-dyadic cuts too (pointwise path function)
  const Matrix a = path.increment(0.0, 0.3);
  const Matrix b = path.increment(0.3, 1.0);
  for (std::size_t i = 0; i < whole.size(); ++i) {
    CHECK(whole.values()[i] == doctest::Approx(a.values()[i] + b.values()[i]).epsilon(1e-14));
  }
}

TEST_CASE("same seed and interval replays the same value") {
  BrownianPath p1(RngStream(17, 4), 1, 1, 0.0, 2.0);
  BrownianPath p2(RngStream(17, 4), 1, 1, 0.0, 2.0);
  for (double s : {0.0, 0.125, 0.3, 1.7}) {
    const double a = p1.increment(s, s + 0.2)(0, 0);
    const double b = p2.increment(s, s + 0.2)(0, 0);
    CHECK(a == b);
  }
  CHECK(p1.increment(0.1, 0.9)(0, 0) == p1.increment(0.1, 0.9)(0, 0));
}

TEST_CASE("increment law: mean and variance across 1e5 paths") {
  const double s = 0.3, delta = 0.25;
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    BrownianPath path(RngStream(9001, static_cast<std::uint64_t>(i)), 1, 1, 0.0, 1.0);
    const double inc = path.increment(s, s + delta)(0, 0);
    sum += inc;
    sq += inc * inc;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) <= 3e-3 * std::sqrt(delta));
  CHECK(var == doctest::Approx(delta).epsilon(0.05));
}

TEST_CASE("entries carry independent paths") {
  BrownianPath path(RngStream(13, 1), 2, 2, 0.0, 1.0);
  const Matrix inc = path.increment(0.0, 1.0);
  // all four endpoint draws distinct
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) CHECK(inc.values()[a] != inc.values()[b]);
}

TEST_CASE("increment rejects s >= t") {
  BrownianPath path(RngStream(1, 1), 1, 1, 0.0, 1.0);
  CHECK_THROWS_AS((void)path.increment(0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS((void)path.increment(0.7, 0.2), std::invalid_argument);
}
