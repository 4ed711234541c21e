#include "gde/adjoint.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

namespace {

/// Augmented backward state: replayed z, adjoint lambda, flat theta-gradient.
struct AugState {
  Matrix z;
  Matrix l;
  std::vector<double> g;
};

// state traits so the shared stepper cores accept AugState (found by ADL,
// so they live in the same namespace as AugState)
void state_axpy(double a, const AugState& x, AugState& y) {
  axpy(a, x.z, y.z);
  axpy(a, x.l, y.l);
  for (std::size_t i = 0; i < y.g.size(); ++i) y.g[i] += a * x.g[i];
}
void state_scale_to_zero(AugState& x) {
  for (auto& v : x.z.values()) v = 0.0;
  for (auto& v : x.l.values()) v = 0.0;
  for (auto& v : x.g) v = 0.0;
}
bool state_finite(const AugState& x) {
  if (!all_finite(x.z) || !all_finite(x.l)) return false;
  for (double v : x.g)
    if (!std::isfinite(v)) return false;
  return true;
}
// error control over z and lambda; the gradient accumulator rides along
double state_error_rms(const AugState& e, const AugState& z, const AugState& z_new,
                       double atol, double rtol) {
  double s = 0.0;
  std::size_t n = 0;
  auto acc = [&](const Matrix& em, const Matrix& zm, const Matrix& znm) {
    for (std::size_t i = 0; i < em.size(); ++i) {
      const double sc =
          atol + rtol * std::max(std::abs(zm.values()[i]), std::abs(znm.values()[i]));
      const double q = em.values()[i] / sc;
      s += q * q;
      ++n;
    }
  };
  acc(e.z, z.z, z_new.z);
  acc(e.l, z.l, z_new.l);
  return std::sqrt(s / static_cast<double>(n));
}

}  // namespace

}  // namespace gde

#include "gde/detail/steppers.hpp"

namespace gde {

IntervalAdjoint interval_adjoint_backward(const FieldSpec& spec, const ParamStore& params,
                                          const GraphContext& ctx, double t_start, double t_end,
                                          const Matrix& z_end, const Matrix& lambda_end,
                                          const SolverConfig& cfg, std::vector<double>& dtheta) {
  if (!(t_end > t_start)) {
    throw std::invalid_argument("interval_adjoint_backward: need t_end > t_start");
  }
  AugState s{z_end, lambda_end, std::vector<double>(params.size(), 0.0)};
  auto rhs = [&](double t, const AugState& a) -> AugState {
    FieldGrad fg = field_vjp(spec, t, a.z, a.l, params, ctx);
    AugState d;
    d.z = fg.value;
    d.l = -1.0 * fg.dz;
    d.g.resize(fg.dtheta.size());
    for (std::size_t i = 0; i < d.g.size(); ++i) d.g[i] = -fg.dtheta[i];
    return d;
  };

  long evals = 0;
  if (cfg.method == SolverMethod::dopri5) {
    detail::Dopri5Controls ctl{cfg.rtol, cfg.atol, cfg.h, cfg.max_steps};
    const std::string err =
        detail::dopri5_core(rhs, s, t_end, t_start, ctl, [&](double, const AugState& a) { s = a; },
                            evals);
    if (!err.empty()) throw SolverError("adjoint backward solve failed: " + err, Trajectory{});
  } else if (cfg.method == SolverMethod::euler || cfg.method == SolverMethod::rk4) {
    const double span = t_end - t_start;
    const long steps = static_cast<long>(std::ceil(span / cfg.h - 1e-9));
    double t = t_end;
    for (long i = 0; i < steps; ++i) {
      const double h = (i + 1 == steps) ? (t_start - t) : -cfg.h;
      s = (cfg.method == SolverMethod::euler) ? detail::euler_step(rhs, t, s, h, evals)
                                              : detail::rk4_step(rhs, t, s, h, evals);
      t += h;
      if (!state_finite(s)) {
        throw SolverError("adjoint backward solve diverged at t=" + std::to_string(t),
                          Trajectory{});
      }
    }
  } else {
    throw std::invalid_argument("interval_adjoint_backward: unsupported solver method");
  }
  for (std::size_t i = 0; i < dtheta.size(); ++i) dtheta[i] += s.g[i];
  return {s.z, s.l};
}

AdjointResult terminal_adjoint_grad(const FieldSpec& spec, const ParamStore& params,
                                    const Matrix& z0, double t_start, double t_end,
                                    const Matrix& dl_dzT, const GraphContext& ctx,
                                    const SolverConfig& cfg) {
  auto rhs = [&](double t, const Matrix& z) { return field_eval(spec, t, z, params, ctx); };
  const Trajectory fwd = integrate(rhs, z0, t_start, t_end, cfg);
  AdjointResult out;
  out.dtheta.assign(params.size(), 0.0);
  const IntervalAdjoint back = interval_adjoint_backward(
      spec, params, ctx, t_start, t_end, fwd.final_state(), dl_dzT, cfg, out.dtheta);
  out.dz0 = back.lambda;
  return out;
}

AdjointResult unrolled_fixed_grad(const FieldSpec& spec, const ParamStore& params,
                                  const Matrix& z0, double t_start, double t_end,
                                  const Matrix& dl_dzT, const GraphContext& ctx,
                                  const SolverConfig& cfg) {
  if (cfg.method != SolverMethod::euler && cfg.method != SolverMethod::rk4) {
    throw std::invalid_argument("unrolled_fixed_grad: method must be euler or rk4");
  }
  auto rhs = [&](double t, const Matrix& z) { return field_eval(spec, t, z, params, ctx); };
  const Trajectory fwd = integrate_fixed(rhs, z0, t_start, t_end, cfg);

  AdjointResult out;
  out.dtheta.assign(params.size(), 0.0);
  Matrix lam = dl_dzT;
  for (std::size_t i = fwd.states.size() - 1; i-- > 0;) {
    const double t = fwd.times[i];
    const double h = fwd.times[i + 1] - fwd.times[i];
    const Matrix& z = fwd.states[i];
    if (cfg.method == SolverMethod::euler) {
      // z' = z + h f(t, z)
      FieldGrad fg = field_vjp(spec, t, z, lam, params, ctx);
      for (std::size_t j = 0; j < out.dtheta.size(); ++j) out.dtheta[j] += h * fg.dtheta[j];
      axpy(h, fg.dz, lam);
    } else {
      // reverse the four stages of the classical RK4 step
      const Matrix k1 = rhs(t, z);
      Matrix z2 = z;
      axpy(h / 2.0, k1, z2);
      const Matrix k2 = rhs(t + h / 2.0, z2);
      Matrix z3 = z;
      axpy(h / 2.0, k2, z3);
      const Matrix k3 = rhs(t + h / 2.0, z3);
      Matrix z4 = z;
      axpy(h, k3, z4);

      Matrix dk1 = (h / 6.0) * lam;
      Matrix dk2 = (h / 3.0) * lam;
      Matrix dk3 = (h / 3.0) * lam;
      const Matrix dk4 = (h / 6.0) * lam;
      Matrix dz = lam;

      FieldGrad g4 = field_vjp(spec, t + h, z4, dk4, params, ctx);
      dz += g4.dz;
      axpy(h, g4.dz, dk3);
      FieldGrad g3 = field_vjp(spec, t + h / 2.0, z3, dk3, params, ctx);
      dz += g3.dz;
      axpy(h / 2.0, g3.dz, dk2);
      FieldGrad g2 = field_vjp(spec, t + h / 2.0, z2, dk2, params, ctx);
      dz += g2.dz;
      axpy(h / 2.0, g2.dz, dk1);
      FieldGrad g1 = field_vjp(spec, t, z, dk1, params, ctx);
      dz += g1.dz;

      for (std::size_t j = 0; j < out.dtheta.size(); ++j) {
        out.dtheta[j] += g1.dtheta[j] + g2.dtheta[j] + g3.dtheta[j] + g4.dtheta[j];
      }
      lam = std::move(dz);
    }
  }
  out.dz0 = lam;
  return out;
}

std::vector<double> finite_difference_grad(
    const std::function<double(const std::vector<double>&)>& loss, const std::vector<double>& at,
    double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_difference_grad: epsilon must be > 0");
  std::vector<double> grad(at.size(), 0.0);
  std::vector<double> probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    probe[i] = at[i] + epsilon;
    const double up = loss(probe);
    probe[i] = at[i] - epsilon;
    const double down = loss(probe);
    probe[i] = at[i];
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_rel_error: length mismatch");
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::max(std::abs(a[i]), std::abs(b[i])));
  }
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace gde
