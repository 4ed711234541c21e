#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "gde/activation.hpp"
#include "gde/rng.hpp"

using namespace gde;

TEST_CASE("activation closed-form points") {
  const Matrix zero(1, 1, {0.0});
  auto t = activation(ActivationKind::tanh(), zero);
  CHECK(t.value(0, 0) == doctest::Approx(0.0));
  CHECK(t.derivative(0, 0) == doctest::Approx(1.0));

  auto s = activation(ActivationKind::sigmoid(), zero);
  CHECK(s.value(0, 0) == doctest::Approx(0.5));
  CHECK(s.derivative(0, 0) == doctest::Approx(0.25));

  auto l = activation(ActivationKind::leaky_relu(0.01), Matrix(1, 1, {-1.0}));
  CHECK(l.value(0, 0) == doctest::Approx(-0.01));
  CHECK(l.derivative(0, 0) == doctest::Approx(0.01));
}

TEST_CASE("leaky slope domain") {
  CHECK_THROWS_AS(ActivationKind::leaky_relu(0.0), std::invalid_argument);
  CHECK_THROWS_AS(ActivationKind::leaky_relu(1.0), std::invalid_argument);
}

TEST_CASE("softmax rows normalize") {
  auto r = activation(ActivationKind::softmax_rows(), Matrix(2, 3, {1, 2, 3, -1, 0, 5}));
  for (int i = 0; i < 2; ++i) {
    double sum = 0;
    for (int j = 0; j < 3; ++j) sum += r.value(i, j);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

// central-difference oracle for every activation kind; softmax goes through
// its VJP with random cotangents
TEST_CASE("activation derivatives match central differences") {
  RngStream rng(7);
  const double eps = 1e-5;
  const std::vector<ActivationKind> kinds = {
      ActivationKind::identity(),     ActivationKind::tanh(), ActivationKind::sigmoid(),
      ActivationKind::leaky_relu(0.1), ActivationKind::softmax_rows()};
  for (const auto& kind : kinds) {
    Matrix x(3, 4);
    for (auto& v : x.values()) v = rng.uniform(-2, 2) + 0.11;  // keep away from relu kinks
    if (kind.tag == ActivationTag::softmax_rows) {
      Matrix lam(3, 4);
      for (auto& v : lam.values()) v = rng.uniform(-1, 1);
      const auto cached = activation(kind, x);
      const Matrix vjp = activation_vjp(kind, cached, lam);
      // directional probe per entry: d/dx_ij of <lam, softmax(x)>
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 4; ++j) {
          Matrix xp = x, xm = x;
          xp(i, j) += eps;
          xm(i, j) -= eps;
          const auto up = activation(kind, xp);
          const auto dn = activation(kind, xm);
          double fd = 0.0;
          for (std::size_t e = 0; e < up.value.size(); ++e) {
            fd += lam.values()[e] * (up.value.values()[e] - dn.value.values()[e]) / (2 * eps);
          }
          CHECK(vjp(i, j) == doctest::Approx(fd).epsilon(1e-6));
        }
      }
    } else {
      const auto res = activation(kind, x);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 4; ++j) {
          Matrix xp = x, xm = x;
          xp(i, j) += eps;
          xm(i, j) -= eps;
          const double fd = (activation(kind, xp).value(i, j) -
                             activation(kind, xm).value(i, j)) /
                            (2 * eps);
          CHECK(res.derivative(i, j) == doctest::Approx(fd).epsilon(1e-6));
        }
      }
    }
  }
}
