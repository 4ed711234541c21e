#pragma once

#include <functional>
#include <vector>

#include "gde/matrix.hpp"

namespace gde {

/// mape_printed follows the source formula verbatim (signed errors summed
/// over time before the 1-norm, so errors can cancel); mape is the
/// conventional mean absolute percentage error. Experiment tables report the
/// conventional one.
struct MetricsReport {
  double mape_printed = 0.0;
  double mape = 0.0;
  double rmse = 0.0;
  double mse = 0.0;
};

/// targets/predictions are T x p (rows = time, cols = sensors). Throws when
/// any |target| < 1e-9 (MAPE division degenerate).
MetricsReport forecast_metrics(const Matrix& targets, const Matrix& predictions);

/// One-step model rolled on its own outputs for k steps, then resynchronized
/// to the nominal state; aggregates the conventional MAPE (percent) over all
/// predicted points.
using StepModel = std::function<Matrix(const Matrix&)>;
double extrapolation_eval(const StepModel& model, const std::vector<Matrix>& nominal, int k);

}  // namespace gde
