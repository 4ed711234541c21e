#include "gde/solvers.hpp"

#include <cmath>

namespace gde {

// state traits for Matrix (found by ADL from detail::)
void state_axpy(double a, const Matrix& x, Matrix& y) { axpy(a, x, y); }
void state_scale_to_zero(Matrix& x) {
  for (auto& v : x.values()) v = 0.0;
}
bool state_finite(const Matrix& x) { return all_finite(x); }
double state_error_rms(const Matrix& e, const Matrix& z, const Matrix& z_new, double atol,
                       double rtol) {
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(z.values()[i]), std::abs(z_new.values()[i]));
    const double q = e.values()[i] / sc;
    s += q * q;
  }
  return std::sqrt(s / static_cast<double>(e.size()));
}

}  // namespace gde

#include "gde/detail/steppers.hpp"

namespace gde {

Trajectory integrate_fixed(const OdeField& field, const Matrix& z0, double t_start, double t_end,
                           const SolverConfig& cfg) {
  if (cfg.method != SolverMethod::euler && cfg.method != SolverMethod::rk4) {
    throw std::invalid_argument("integrate_fixed: method must be euler or rk4");
  }
  if (!(cfg.h > 0.0)) throw std::invalid_argument("integrate_fixed: step must be positive");
  const double span = t_end - t_start;
  if (!(span > 0.0)) throw std::invalid_argument("integrate_fixed: need t_end > t_start");
  // ceil(span/h) steps, with a 1e-9 slack so an exact divisor is not rounded up
  const long steps = static_cast<long>(std::ceil(span / cfg.h - 1e-9));

  Trajectory traj;
  traj.times.push_back(t_start);
  traj.states.push_back(z0);
  Matrix z = z0;
  for (long i = 0; i < steps; ++i) {
    const double t = t_start + static_cast<double>(i) * cfg.h;
    const double h = (i + 1 == steps) ? (t_end - t) : cfg.h;
    z = (cfg.method == SolverMethod::euler) ? detail::euler_step(field, t, z, h, traj.n_field_evals)
                                            : detail::rk4_step(field, t, z, h, traj.n_field_evals);
    if (!all_finite(z)) {
      throw SolverError("integrate_fixed: non-finite state at step " + std::to_string(i + 1),
                        std::move(traj));
    }
    traj.times.push_back(t_start + static_cast<double>(i + 1) * cfg.h);
    traj.states.push_back(z);
  }
  traj.times.back() = t_end;
  return traj;
}

Trajectory integrate_dopri5(const OdeField& field, const Matrix& z0, double t_start, double t_end,
                            const SolverConfig& cfg) {
  if (!(cfg.rtol > 0.0 && cfg.atol > 0.0)) {
    throw std::invalid_argument("integrate_dopri5: rtol and atol must be positive");
  }
  Trajectory traj;
  traj.times.push_back(t_start);
  traj.states.push_back(z0);
  detail::Dopri5Controls ctl{cfg.rtol, cfg.atol, cfg.h, cfg.max_steps};
  const std::string err = detail::dopri5_core(
      field, z0, t_start, t_end, ctl,
      [&](double t, const Matrix& y) {
        traj.times.push_back(t);
        traj.states.push_back(y);
      },
      traj.n_field_evals);
  if (!err.empty()) throw SolverError(err, std::move(traj));
  return traj;
}

Trajectory integrate(const OdeField& field, const Matrix& z0, double t_start, double t_end,
                     const SolverConfig& cfg) {
  switch (cfg.method) {
    case SolverMethod::euler:
    case SolverMethod::rk4:
      return integrate_fixed(field, z0, t_start, t_end, cfg);
    case SolverMethod::dopri5:
      return integrate_dopri5(field, z0, t_start, t_end, cfg);
    default:
      throw std::invalid_argument("integrate: euler_heun requires integrate_euler_heun");
  }
}

namespace {

// Heun predictor-corrector on drift and diffusion: the trapezoidal diffusion
// weight realizes the Stratonovich integral, the trapezoidal drift keeps the
// zero-noise limit second order.
Matrix euler_heun_step(const OdeField& drift, const OdeField& diffusion, double t, const Matrix& z,
                       double h, const Matrix& db, long& evals) {
  const Matrix f0 = drift(t, z);
  const Matrix g0 = diffusion(t, z);
  Matrix pred = z;
  axpy(h, f0, pred);
  pred += hadamard(g0, db);
  const Matrix f1 = drift(t + h, pred);
  const Matrix g1 = diffusion(t + h, pred);
  evals += 4;
  Matrix out = z;
  axpy(0.5 * h, f0 + f1, out);
  out += hadamard(0.5 * (g0 + g1), db);
  return out;
}

}  // namespace

Trajectory integrate_euler_heun(const OdeField& drift, const OdeField& diffusion, const Matrix& z0,
                                double t_start, double t_end, const BrownianPath& path,
                                const SolverConfig& cfg) {
  if (!(t_end > t_start)) throw std::invalid_argument("integrate_euler_heun: need t_end > t_start");
  if (!(cfg.h > 0.0)) throw std::invalid_argument("integrate_euler_heun: step must be positive");
  {
    const Matrix g = diffusion(t_start, z0);
    if (g.rows() != z0.rows() || g.cols() != z0.cols()) {
      throw std::invalid_argument("integrate_euler_heun: diffusion shape " + g.shape_str() +
                                  " must match state " + z0.shape_str());
    }
  }
  Trajectory traj;
  traj.times.push_back(t_start);
  traj.states.push_back(z0);

  Matrix z = z0;
  double t = t_start;
  if (!cfg.sde_adaptive) {
    const double span = t_end - t_start;
    const long steps = static_cast<long>(std::ceil(span / cfg.h - 1e-9));
    // carry the endpoint double across iterations so consecutive increments
    // telescope exactly
    double t_cur = t_start;
    for (long i = 0; i < steps; ++i) {
      const double t_next = (i + 1 == steps) ? t_end : t_start + static_cast<double>(i + 1) * cfg.h;
      z = euler_heun_step(drift, diffusion, t_cur, z, t_next - t_cur,
                          path.increment(t_cur, t_next), traj.n_field_evals);
      if (!all_finite(z)) {
        throw SolverError("integrate_euler_heun: non-finite state at step " + std::to_string(i + 1),
                          std::move(traj));
      }
      traj.times.push_back(t_next);
      traj.states.push_back(z);
      t_cur = t_next;
    }
    return traj;
  }

  // step doubling: one full step vs two bridge-consistent half steps
  const double h_min = (t_end - t_start) * 1e-9;
  const double h_max = (t_end - t_start) / 2.0;
  double h = std::min(cfg.h, h_max);
  int steps = 0;
  while (t < t_end - 1e-14 * std::max(1.0, std::abs(t_end))) {
    if (++steps > cfg.max_steps) {
      throw SolverError("integrate_euler_heun: exceeded max_steps=" + std::to_string(cfg.max_steps),
                        std::move(traj));
    }
    h = std::min(h, t_end - t);
    const double tm = t + h / 2.0;
    const Matrix full = euler_heun_step(drift, diffusion, t, z, h, path.increment(t, t + h),
                                        traj.n_field_evals);
    Matrix half = euler_heun_step(drift, diffusion, t, z, h / 2.0, path.increment(t, tm),
                                  traj.n_field_evals);
    half = euler_heun_step(drift, diffusion, tm, half, h / 2.0, path.increment(tm, t + h),
                           traj.n_field_evals);
    if (!all_finite(full) || !all_finite(half)) {
      throw SolverError("integrate_euler_heun: non-finite state at t=" + std::to_string(t),
                        std::move(traj));
    }
    const double err = rms(full - half);
    const double tol = cfg.atol + cfg.rtol * rms(z);
    if (err <= tol) {
      t += h;
      z = half;
      traj.times.push_back(t);
      traj.states.push_back(z);
      if (err <= 0.25 * tol) h = std::min(2.0 * h, h_max);
    } else {
      h = std::max(0.5 * h, h_min);
      if (h <= h_min && err > tol) {
        throw SolverError("integrate_euler_heun: tolerance unreachable at t=" + std::to_string(t),
                          std::move(traj));
      }
    }
  }
  return traj;
}

}  // namespace gde
