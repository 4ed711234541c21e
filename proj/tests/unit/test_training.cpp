#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "gde/metrics.hpp"
#include "gde/training.hpp"

using namespace gde;

TEST_CASE("adam: zero gradient leaves theta, step count advances") {
  AdamState st(2);
  std::vector<double> theta = {1.0, -2.0};
  adam_step(st, theta, {0.0, 0.0}, 0.1);
  CHECK(theta[0] == 1.0);
  CHECK(theta[1] == -2.0);
  CHECK(st.t == 1);
}

TEST_CASE("adam first step is approximately -lr sign(g)") {
  for (double g : {3.0, -0.5, 120.0}) {
    AdamState st(1);
    std::vector<double> theta = {0.7};
    adam_step(st, theta, {g}, 0.05);
    CHECK(theta[0] == doctest::Approx(0.7 - 0.05 * (g > 0 ? 1.0 : -1.0)).epsilon(1e-6));
  }
}

TEST_CASE("adam converges on the quadratic") {
  AdamState st(1);
  std::vector<double> theta = {1.0};
  for (int i = 0; i < 500; ++i) adam_step(st, theta, {theta[0]}, 0.1);
  CHECK(std::abs(theta[0]) < 1e-3);
}

TEST_CASE("adam rejects non-finite gradients naming the index") {
  AdamState st(3);
  std::vector<double> theta = {0, 0, 0};
  try {
    adam_step(st, theta, {0.0, std::nan(""), 0.0}, 0.1);
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("index 1") != std::string::npos);
  }
}

TEST_CASE("adam first-step update is exactly linear in lr") {
  std::vector<double> g = {0.3, -4.0};
  AdamState s1(2), s2(2);
  std::vector<double> t1 = {0.0, 0.0}, t2 = {0.0, 0.0};
  adam_step(s1, t1, g, 0.01);
  adam_step(s2, t2, g, 0.02);
  for (int i = 0; i < 2; ++i) CHECK(t2[i] == doctest::Approx(2.0 * t1[i]).epsilon(1e-15));
}

TEST_CASE("cosine annealing schedule hits the printed anchors and is periodic") {
  const ScheduleSpec s = ScheduleSpec::cosine(1e-2, 0.0, 10);
  CHECK(lr_schedule(s, 0) == doctest::Approx(1e-2));
  CHECK(lr_schedule(s, 5) == doctest::Approx((1e-2 + 0.0) / 2));
  for (int e = 0; e < 30; ++e) CHECK(lr_schedule(s, e) == doctest::Approx(lr_schedule(s, e + 10)));
}

TEST_CASE("one-cycle schedule: peak and floor anchors, up-then-down") {
  const ScheduleSpec s = ScheduleSpec::one_cycle(1e-2, 300, 4e-4, 1000);
  CHECK(lr_schedule(s, 300) == doctest::Approx(1e-2));
  CHECK(lr_schedule(s, 1000) == doctest::Approx(4e-4));
  for (int e = 1; e <= 300; ++e) CHECK(lr_schedule(s, e) >= lr_schedule(s, e - 1) - 1e-15);
  for (int e = 301; e <= 1000; ++e) CHECK(lr_schedule(s, e) <= lr_schedule(s, e - 1) + 1e-15);
}

TEST_CASE("forecast metric formulas on hand-derived cases") {
  // perfect prediction
  const Matrix y(2, 2, {1, 2, 3, 4});
  const MetricsReport zero = forecast_metrics(y, y);
  CHECK(zero.mape == 0.0);
  CHECK(zero.mape_printed == 0.0);
  CHECK(zero.rmse == 0.0);
  CHECK(zero.mse == 0.0);

  // p=1, T=1, y=100, yhat=90 -> MAPE 10%, RMSE 10
  const MetricsReport single = forecast_metrics(Matrix(1, 1, {100.0}), Matrix(1, 1, {90.0}));
  CHECK(single.mape == doctest::Approx(10.0));
  CHECK(single.mape_printed == doctest::Approx(10.0));
  CHECK(single.rmse == doctest::Approx(10.0));
  CHECK(single.mse == doctest::Approx(100.0));

  // p=2, T=1, errors (3,4) -> per-sensor-then-average RMSE = 3.5
  const MetricsReport pair =
      forecast_metrics(Matrix(1, 2, {1.0, 1.0}), Matrix(1, 2, {-2.0, -3.0}));
  CHECK(pair.rmse == doctest::Approx(3.5));

  // the printed MAPE cancels signed errors across time; conventional does not
  const Matrix targets(2, 1, {1.0, 1.0});
  const Matrix preds(2, 1, {0.5, 1.5});
  const MetricsReport cancel = forecast_metrics(targets, preds);
  CHECK(cancel.mape_printed == doctest::Approx(0.0));
  CHECK(cancel.mape == doctest::Approx(50.0));
}

TEST_CASE("forecast metrics reject near-zero targets") {
  CHECK_THROWS_AS((void)forecast_metrics(Matrix(1, 1, {1e-12}), Matrix(1, 1, {1.0})),
                  std::invalid_argument);
}

TEST_CASE("forecast metrics are invariant to sensor relabeling") {
  const Matrix y(3, 2, {10, 20, 11, 21, 12, 22});
  const Matrix p(3, 2, {9, 22, 12, 20, 13, 24});
  Matrix ys(3, 2), ps(3, 2);
  for (int t = 0; t < 3; ++t) {
    ys(t, 0) = y(t, 1);
    ys(t, 1) = y(t, 0);
    ps(t, 0) = p(t, 1);
    ps(t, 1) = p(t, 0);
  }
  const MetricsReport a = forecast_metrics(y, p);
  const MetricsReport b = forecast_metrics(ys, ps);
  CHECK(a.mape == doctest::Approx(b.mape).epsilon(1e-14));
  CHECK(a.mape_printed == doctest::Approx(b.mape_printed).epsilon(1e-14));
  CHECK(a.rmse == doctest::Approx(b.rmse).epsilon(1e-14));
}

TEST_CASE("extrapolation protocol closed cases") {
  // k=1 with a perfect one-step model on a doubling sequence
  std::vector<Matrix> nominal;
  for (int i = 0; i < 6; ++i) nominal.push_back(Matrix(1, 1, {std::pow(2.0, i)}));
  const StepModel doubler = [](const Matrix& x) { return 2.0 * x; };
  CHECK(extrapolation_eval(doubler, nominal, 1) == doctest::Approx(0.0));
  // and even self-fed it stays exact
  CHECK(extrapolation_eval(doubler, nominal, 3) == doctest::Approx(0.0));

  // identity model on a constant trajectory
  std::vector<Matrix> constant(5, Matrix(1, 1, {3.0}));
  const StepModel identity = [](const Matrix& x) { return x; };
  for (int k : {1, 2, 4}) CHECK(extrapolation_eval(identity, constant, k) == doctest::Approx(0.0));

  // identity model, x(t) = t, k = 2: predictions (1,1,3,3) vs (2,3,4,5)
  std::vector<Matrix> ramp;
  for (int i = 1; i <= 5; ++i) ramp.push_back(Matrix(1, 1, {static_cast<double>(i)}));
  const double mape = extrapolation_eval(identity, ramp, 2);
  const double expect = 100.0 * (0.5 + 2.0 / 3.0 + 0.25 + 0.4) / 4.0;
  CHECK(mape == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("masked softmax cross entropy gradient sums to zero per row") {
  Matrix logits(3, 2, {2.0, -1.0, 0.5, 0.5, -3.0, 1.0});
  const std::vector<int> labels = {0, 1, 1};
  const auto res = softmax_cross_entropy(logits, labels, {0, 2});
  CHECK(res.loss > 0.0);
  CHECK(res.accuracy == doctest::Approx(1.0));
  for (int r : {0, 2}) {
    double s = 0;
    for (int c = 0; c < 2; ++c) s += res.dlogits(r, c);
    CHECK(s == doctest::Approx(0.0).epsilon(1e-12));
  }
  for (int c = 0; c < 2; ++c) CHECK(res.dlogits(1, c) == 0.0);
}
