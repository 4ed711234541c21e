#include "gde/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

MetricsReport forecast_metrics(const Matrix& targets, const Matrix& predictions) {
  if (!targets.same_shape(predictions)) {
    throw std::invalid_argument("forecast_metrics: shape mismatch " + targets.shape_str() + " vs " +
                                predictions.shape_str());
  }
  const int t_len = targets.rows();
  const int p = targets.cols();
  if (t_len == 0 || p == 0) throw std::invalid_argument("forecast_metrics: empty input");

  MetricsReport rep;
  std::vector<double> signed_sum(p, 0.0);
  std::vector<double> sq_sum(p, 0.0);
  for (int t = 0; t < t_len; ++t) {
    for (int j = 0; j < p; ++j) {
      const double y = targets(t, j);
      if (std::abs(y) < 1e-9) {
        throw std::invalid_argument("forecast_metrics: |target| < 1e-9 at (t=" +
                                    std::to_string(t) + ", j=" + std::to_string(j) +
                                    "), MAPE undefined");
      }
      const double e = y - predictions(t, j);
      signed_sum[j] += e / y;
      rep.mape += std::abs(e / y);
      sq_sum[j] += e * e;
      rep.mse += e * e;
    }
  }
  const double denom = static_cast<double>(p) * static_cast<double>(t_len);
  for (int j = 0; j < p; ++j) {
    rep.mape_printed += std::abs(signed_sum[j]);
    rep.rmse += std::sqrt(sq_sum[j] / static_cast<double>(t_len));
  }
  rep.mape_printed *= 100.0 / denom;
  rep.mape *= 100.0 / denom;
  rep.rmse /= static_cast<double>(p);
  rep.mse /= denom;
  return rep;
}

double extrapolation_eval(const StepModel& model, const std::vector<Matrix>& nominal, int k) {
  if (k < 1) throw std::invalid_argument("extrapolation_eval: k must be >= 1");
  if (nominal.size() < 2) throw std::invalid_argument("extrapolation_eval: need >= 2 states");
  double ape_sum = 0.0;
  long count = 0;
  Matrix input = nominal[0];
  int since_sync = 0;
  for (std::size_t i = 0; i + 1 < nominal.size(); ++i) {
    const Matrix pred = model(input);
    const Matrix& target = nominal[i + 1];
    for (std::size_t e = 0; e < target.size(); ++e) {
      const double y = target.values()[e];
      if (std::abs(y) < 1e-9) {
        throw std::invalid_argument("extrapolation_eval: |target| < 1e-9, MAPE undefined");
      }
      ape_sum += std::abs((y - pred.values()[e]) / y);
      ++count;
    }
    ++since_sync;
    if (since_sync == k) {
      input = nominal[i + 1];  // resynchronize to the nominal state
      since_sync = 0;
    } else {
      input = pred;
    }
  }
  return 100.0 * ape_sum / static_cast<double>(count);
}

}  // namespace gde
