#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "gde/brownian.hpp"
#include "gde/matrix.hpp"

namespace gde {

/// Matrix-valued vector field dZ/dt = f(t, Z).
using OdeField = std::function<Matrix(double, const Matrix&)>;

enum class SolverMethod { euler, rk4, dopri5, euler_heun };

struct SolverConfig {
  SolverMethod method = SolverMethod::rk4;
  double h = 0.1;        // fixed step (also initial step for adaptive methods)
  double rtol = 1e-6;
  double atol = 1e-8;
  int max_steps = 100000;
  bool sde_adaptive = false;  // euler_heun: step-doubling control instead of fixed h
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Matrix> states;
  long n_field_evals = 0;

  const Matrix& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

/// Thrown when a solve diverges or exceeds its step budget; carries whatever
/// was integrated so far.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial_trajectory(std::move(partial)) {}
  Trajectory partial_trajectory;
};

/// Explicit Euler / classical RK4 with steps of cfg.h; the last step is
/// shortened to land on span end. Field evaluations are counted exactly:
/// steps for Euler, 4*steps for RK4.
Trajectory integrate_fixed(const OdeField& field, const Matrix& z0, double t_start, double t_end,
                           const SolverConfig& cfg);

/// Dormand-Prince 5(4) embedded pair with PI step-size control. Error test:
/// RMS of e_i / (atol + rtol*max(|z_i|, |z_new_i|)) <= 1. The final step is
/// clamped to land exactly on span end.
Trajectory integrate_dopri5(const OdeField& field, const Matrix& z0, double t_start, double t_end,
                            const SolverConfig& cfg);

/// Method dispatch for the deterministic solvers.
Trajectory integrate(const OdeField& field, const Matrix& z0, double t_start, double t_end,
                     const SolverConfig& cfg);

// state traits that let the shared stepper cores run over Matrix
void state_axpy(double a, const Matrix& x, Matrix& y);
void state_scale_to_zero(Matrix& x);
bool state_finite(const Matrix& x);
double state_error_rms(const Matrix& e, const Matrix& z, const Matrix& z_new, double atol,
                       double rtol);

/// Stratonovich Euler-Heun predictor-corrector with diagonal noise:
///   Zp = Z + f dt + g(Z) dB,  Z+ = Z + f dt + (g(Z)+g(Zp))/2 dB.
/// With cfg.sde_adaptive, step doubling compares one full step against two
/// half steps sharing bridge-consistent increments and accepts when the RMS
/// difference is <= atol + rtol*rms(Z). Identical path and config replay an
/// identical trajectory.
Trajectory integrate_euler_heun(const OdeField& drift, const OdeField& diffusion, const Matrix& z0,
                                double t_start, double t_end, const BrownianPath& path,
                                const SolverConfig& cfg);

}  // namespace gde
