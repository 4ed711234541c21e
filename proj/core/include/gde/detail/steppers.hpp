#pragma once

// Solver cores shared by the public matrix-state API and the adjoint's
// augmented state. A state type S plugs in through three free functions:
//   state_axpy(a, x, y)                      y += a*x
//   state_error_rms(e, z, z_new, atol, rtol) scaled RMS error
//   state_finite(z)                          finiteness probe

#include <algorithm>
#include <cmath>
#include <string>

namespace gde::detail {

template <class S, class F>
S euler_step(const F& f, double t, const S& y, double h, long& evals) {
  S out = y;
  state_axpy(h, f(t, y), out);
  ++evals;
  return out;
}

template <class S, class F>
S rk4_step(const F& f, double t, const S& y, double h, long& evals) {
  const S k1 = f(t, y);
  S y2 = y;
  state_axpy(h / 2.0, k1, y2);
  const S k2 = f(t + h / 2.0, y2);
  S y3 = y;
  state_axpy(h / 2.0, k2, y3);
  const S k3 = f(t + h / 2.0, y3);
  S y4 = y;
  state_axpy(h, k3, y4);
  const S k4 = f(t + h, y4);
  S out = y;
  state_axpy(h / 6.0, k1, out);
  state_axpy(h / 3.0, k2, out);
  state_axpy(h / 3.0, k3, out);
  state_axpy(h / 6.0, k4, out);
  evals += 4;
  return out;
}

struct Dopri5Controls {
  double rtol = 1e-6;
  double atol = 1e-8;
  double h_init = 0.1;
  int max_steps = 100000;
};

// Dormand-Prince 5(4) coefficients.
struct Dopri5Tableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b (5th) minus b_hat (4th)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

/// Adaptive Dormand-Prince loop supporting either time direction. Calls
/// on_accept(t, y) after every accepted step (including the final one).
/// Returns an empty string on success, otherwise an error message; the
/// caller keeps whatever on_accept collected as the partial result.
template <class S, class F, class OnAccept>
std::string dopri5_core(const F& f, S y, double t0, double t1, const Dopri5Controls& ctl,
                        OnAccept&& on_accept, long& evals) {
  using T = Dopri5Tableau;
  const double dir = (t1 >= t0) ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  if (span == 0.0) return {};
  double h = dir * std::min(std::abs(ctl.h_init) > 0 ? std::abs(ctl.h_init) : span / 100.0, span);
  double t = t0;
  double err_prev = 1.0;
  int steps = 0;

  S k1 = f(t, y);
  ++evals;
  bool k1_fresh = true;

  while (dir * (t1 - t) > 1e-14 * std::max(1.0, std::abs(t1))) {
    if (++steps > ctl.max_steps) {
      return "dopri5: exceeded max_steps=" + std::to_string(ctl.max_steps) + " at t=" +
             std::to_string(t);
    }
    if (dir * (t + h - t1) > 0.0) h = t1 - t;  // clamp to land on t1 exactly

    if (!k1_fresh) {
      k1 = f(t, y);
      ++evals;
      k1_fresh = true;
    }
    S y2 = y;
    state_axpy(h * T::a21, k1, y2);
    const S k2 = f(t + T::c2 * h, y2);
    S y3 = y;
    state_axpy(h * T::a31, k1, y3);
    state_axpy(h * T::a32, k2, y3);
    const S k3 = f(t + T::c3 * h, y3);
    S y4 = y;
    state_axpy(h * T::a41, k1, y4);
    state_axpy(h * T::a42, k2, y4);
    state_axpy(h * T::a43, k3, y4);
    const S k4 = f(t + T::c4 * h, y4);
    S y5 = y;
    state_axpy(h * T::a51, k1, y5);
    state_axpy(h * T::a52, k2, y5);
    state_axpy(h * T::a53, k3, y5);
    state_axpy(h * T::a54, k4, y5);
    const S k5 = f(t + T::c5 * h, y5);
    S y6 = y;
    state_axpy(h * T::a61, k1, y6);
    state_axpy(h * T::a62, k2, y6);
    state_axpy(h * T::a63, k3, y6);
    state_axpy(h * T::a64, k4, y6);
    state_axpy(h * T::a65, k5, y6);
    const S k6 = f(t + h, y6);
    evals += 5;

    S y_new = y;
    state_axpy(h * T::b1, k1, y_new);
    state_axpy(h * T::b3, k3, y_new);
    state_axpy(h * T::b4, k4, y_new);
    state_axpy(h * T::b5, k5, y_new);
    state_axpy(h * T::b6, k6, y_new);
    const S k7 = f(t + h, y_new);  // FSAL stage
    ++evals;

    S err = y;
    state_scale_to_zero(err);
    state_axpy(h * T::e1, k1, err);
    state_axpy(h * T::e3, k3, err);
    state_axpy(h * T::e4, k4, err);
    state_axpy(h * T::e5, k5, err);
    state_axpy(h * T::e6, k6, err);
    state_axpy(h * T::e7, k7, err);

    if (!state_finite(y_new)) {
      return "dopri5: non-finite state at t=" + std::to_string(t + h);
    }
    const double err_norm = state_error_rms(err, y, y_new, ctl.atol, ctl.rtol);

    if (err_norm <= 1.0) {
      t += h;
      y = y_new;
      k1 = k7;
      k1_fresh = true;
      on_accept(t, y);
      // PI controller (Gustafsson)
      const double e = std::max(err_norm, 1e-10);
      double factor = 0.9 * std::pow(e, -0.17) * std::pow(err_prev, 0.04);
      factor = std::clamp(factor, 0.2, 5.0);
      h *= factor;
      err_prev = e;
    } else {
      const double factor = std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      h *= factor;
      k1_fresh = true;  // k1 still valid at unchanged (t, y)
    }
    if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(t))) {
      return "dopri5: step size underflow at t=" + std::to_string(t);
    }
  }
  return {};
}

}  // namespace gde::detail
