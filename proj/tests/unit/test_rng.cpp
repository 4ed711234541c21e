#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "gde/rng.hpp"

using namespace gde;

TEST_CASE("equal (seed, stream) replays identical first 1e4 draws") {
  RngStream a(123, 5), b(123, 5);
  for (int i = 0; i < 10000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream ids diverge") {
  RngStream a(123, 1), b(123, 2);
  int equal = 0;
  for (int i = 0; i < 1000; ++i)
    if (a.next_u64() == b.next_u64()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("uniform moments") {
  RngStream rng(9);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
}

TEST_CASE("normal moments") {
  RngStream rng(10);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson matches mean and variance, small and split regime") {
  RngStream rng(11);
  for (double lambda : {0.5, 4.0, 55.0}) {
    double sum = 0, sq = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(lambda));
      sum += k;
      sq += k * k;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(lambda).epsilon(0.03));
    CHECK(var == doctest::Approx(lambda).epsilon(0.06));
  }
}

TEST_CASE("split children are independent of parent draws") {
  RngStream parent(77, 3);
  RngStream child1 = parent.split(0);
  RngStream child2 = parent.split(1);
  CHECK(child1.stream_id() != child2.stream_id());
  RngStream child1_again = parent.split(0);
  CHECK(child1.next_u64() == child1_again.next_u64());
}
