#pragma once

#include <chrono>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "gde/matrix.hpp"

namespace gde {

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update in place. Throws on non-finite gradient entries
/// naming the first offending index.
void adam_step(AdamState& state, std::vector<double>& theta, const std::vector<double>& grad,
               double lr);

struct ScheduleSpec {
  enum class Kind { constant, cosine_annealing, one_cycle };
  Kind kind = Kind::constant;
  double lr_max = 1e-2;
  double lr_min = 0.0;
  int t0 = 10;          // cosine annealing restart period
  int peak_epoch = 300;  // one-cycle ramp end
  int total = 1000;      // one-cycle horizon

  static ScheduleSpec constant(double lr);
  static ScheduleSpec cosine(double lr_max, double lr_min, int t0);
  static ScheduleSpec one_cycle(double lr_max, int peak_epoch, double lr_min, int total);
};

double lr_schedule(const ScheduleSpec& spec, int epoch);

/// Masked softmax cross-entropy over logit rows; dlogits is averaged over the
/// masked rows and zero elsewhere.
struct CrossEntropyResult {
  double loss = 0.0;
  Matrix dlogits;
  double accuracy = 0.0;
};
CrossEntropyResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                         const std::vector<int>& rows);

/// Appends `epoch,split,loss,mape,rmse,lr,seconds` rows.
class EpochLogger {
 public:
  explicit EpochLogger(const std::string& path);
  void log(int epoch, const std::string& split, double loss, double mape, double rmse, double lr,
           double seconds);

 private:
  std::ofstream out_;
};

}  // namespace gde
