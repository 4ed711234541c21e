#include "gde/training.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gde {

void adam_step(AdamState& state, std::vector<double>& theta, const std::vector<double>& grad,
               double lr) {
  if (theta.size() != grad.size() || theta.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw std::runtime_error("adam_step: non-finite gradient at index " + std::to_string(i));
    }
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

ScheduleSpec ScheduleSpec::constant(double lr) {
  ScheduleSpec s;
  s.kind = Kind::constant;
  s.lr_max = lr;
  s.lr_min = lr;
  return s;
}

ScheduleSpec ScheduleSpec::cosine(double lr_max, double lr_min, int t0) {
  ScheduleSpec s;
  s.kind = Kind::cosine_annealing;
  s.lr_max = lr_max;
  s.lr_min = lr_min;
  s.t0 = t0;
  return s;
}

ScheduleSpec ScheduleSpec::one_cycle(double lr_max, int peak_epoch, double lr_min, int total) {
  ScheduleSpec s;
  s.kind = Kind::one_cycle;
  s.lr_max = lr_max;
  s.lr_min = lr_min;
  s.peak_epoch = peak_epoch;
  s.total = total;
  return s;
}

double lr_schedule(const ScheduleSpec& spec, int epoch) {
  if (epoch < 0) throw std::invalid_argument("lr_schedule: negative epoch");
  switch (spec.kind) {
    case ScheduleSpec::Kind::constant:
      return spec.lr_max;
    case ScheduleSpec::Kind::cosine_annealing: {
      const int phase = epoch % spec.t0;
      return spec.lr_min + 0.5 * (spec.lr_max - spec.lr_min) *
                               (1.0 + std::cos(M_PI * static_cast<double>(phase) / spec.t0));
    }
    case ScheduleSpec::Kind::one_cycle: {
      if (epoch <= spec.peak_epoch) {
        const double w = spec.peak_epoch == 0
                             ? 1.0
                             : static_cast<double>(epoch) / static_cast<double>(spec.peak_epoch);
        return spec.lr_min + (spec.lr_max - spec.lr_min) * w;
      }
      const int tail = spec.total - spec.peak_epoch;
      const double w = tail == 0 ? 1.0
                                 : static_cast<double>(std::min(epoch, spec.total) - spec.peak_epoch) /
                                       static_cast<double>(tail);
      return spec.lr_min + 0.5 * (spec.lr_max - spec.lr_min) * (1.0 + std::cos(M_PI * w));
    }
  }
  return spec.lr_max;
}

CrossEntropyResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                                         const std::vector<int>& rows) {
  if (static_cast<int>(labels.size()) != logits.rows()) {
    throw std::invalid_argument("softmax_cross_entropy: labels size mismatch");
  }
  CrossEntropyResult res;
  res.dlogits = Matrix(logits.rows(), logits.cols());
  if (rows.empty()) return res;
  int correct = 0;
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (int r : rows) {
    double mx = logits(r, 0);
    int arg = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > mx) {
        mx = logits(r, c);
        arg = c;
      }
    }
    if (arg == labels[r]) ++correct;
    double denom = 0.0;
    for (int c = 0; c < logits.cols(); ++c) denom += std::exp(logits(r, c) - mx);
    const double logp = logits(r, labels[r]) - mx - std::log(denom);
    res.loss -= inv * logp;
    for (int c = 0; c < logits.cols(); ++c) {
      const double p = std::exp(logits(r, c) - mx) / denom;
      res.dlogits(r, c) = inv * (p - (c == labels[r] ? 1.0 : 0.0));
    }
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
  return res;
}

EpochLogger::EpochLogger(const std::string& path) : out_(path) {
  if (!out_) throw std::runtime_error("EpochLogger: cannot open " + path);
  out_ << "epoch,split,loss,mape,rmse,lr,seconds\n";
}

void EpochLogger::log(int epoch, const std::string& split, double loss, double mape, double rmse,
                      double lr, double seconds) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%s,%.10g,%.10g,%.10g,%.10g,%.3f", epoch, split.c_str(), loss,
                mape, rmse, lr, seconds);
  out_ << buf << "\n";
  out_.flush();
}

}  // namespace gde
