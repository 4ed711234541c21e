#include "gde/models.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

namespace {
const GraphContext& empty_context() {
  static const GraphContext ctx{Graph(0)};
  return ctx;
}
}  // namespace

Matrix apply_map(const FieldSpec& map, const Matrix& in, const ParamStore& params) {
  if (map.layers.empty()) return in;
  return field_eval(map, 0.0, in, params, empty_context());
}

Matrix apply_map_vjp(const FieldSpec& map, const Matrix& in, const Matrix& lambda,
                     const ParamStore& params, std::vector<double>& dtheta) {
  if (map.layers.empty()) return lambda;
  FieldTape tape;
  field_eval(map, 0.0, in, params, empty_context(), &tape);
  return field_vjp_tape(map, tape, lambda, params, empty_context(), dtheta);
}

Matrix gde_initial_state(const NeuralGDEModel& m, const Matrix& x, const ParamStore& params) {
  const Matrix p0 = apply_map(m.input_map, x, params);
  if (!m.second_order) return p0;
  // velocity block zero-initialized
  return hcat(p0, Matrix(p0.rows(), p0.cols()));
}

Matrix gde_readout(const NeuralGDEModel& m, const Matrix& z, const ParamStore& params) {
  const Matrix p = m.second_order ? col_slice(z, 0, z.cols() / 2) : z;
  return apply_map(m.output_map, p, params);
}

std::vector<Matrix> gde_forward(const NeuralGDEModel& m, const Matrix& x, const GraphContext& ctx,
                                const ParamStore& params, const std::vector<double>& t_eval) {
  if (t_eval.empty()) throw std::invalid_argument("gde_forward: empty t_eval");
  for (std::size_t i = 0; i < t_eval.size(); ++i) {
    if (t_eval[i] < m.span_start - 1e-12 || t_eval[i] > m.span_end + 1e-12) {
      throw std::invalid_argument("gde_forward: t_eval outside span");
    }
    if (i > 0 && t_eval[i] <= t_eval[i - 1]) {
      throw std::invalid_argument("gde_forward: t_eval must be ascending");
    }
  }
  auto rhs = [&](double t, const Matrix& z) { return field_eval(m.field, t, z, params, ctx); };
  std::vector<Matrix> out;
  Matrix z = gde_initial_state(m, x, params);
  double t = m.span_start;
  for (double te : t_eval) {
    if (te > t + 1e-14) {
      z = integrate(rhs, z, t, te, m.solver).final_state();
      t = te;
    }
    out.push_back(gde_readout(m, z, params));
  }
  return out;
}

Matrix gde_predict(const NeuralGDEModel& m, const Matrix& x, const GraphContext& ctx,
                   const ParamStore& params) {
  return gde_forward(m, x, ctx, params, {m.span_end}).back();
}

GdeGrad gde_terminal_grad(const NeuralGDEModel& m, const Matrix& x, const GraphContext& ctx,
                          const ParamStore& params, const Matrix& dl_dy, bool unrolled) {
  GdeGrad out;
  out.dtheta.assign(params.size(), 0.0);

  const Matrix z0 = gde_initial_state(m, x, params);
  auto rhs = [&](double t, const Matrix& z) { return field_eval(m.field, t, z, params, ctx); };
  const Matrix zT = integrate(rhs, z0, m.span_start, m.span_end, m.solver).final_state();

  const int half = m.second_order ? zT.cols() / 2 : zT.cols();
  const Matrix pT = m.second_order ? col_slice(zT, 0, half) : zT;
  Matrix dp = apply_map_vjp(m.output_map, pT, dl_dy, params, out.dtheta);
  Matrix dzT = m.second_order ? hcat(dp, Matrix(dp.rows(), dp.cols())) : std::move(dp);

  Matrix dz0;
  if (unrolled) {
    AdjointResult r =
        unrolled_fixed_grad(m.field, params, z0, m.span_start, m.span_end, dzT, ctx, m.solver);
    for (std::size_t i = 0; i < out.dtheta.size(); ++i) out.dtheta[i] += r.dtheta[i];
    dz0 = std::move(r.dz0);
  } else {
    const IntervalAdjoint back = interval_adjoint_backward(m.field, params, ctx, m.span_start,
                                                           m.span_end, zT, dzT, m.solver,
                                                           out.dtheta);
    dz0 = back.lambda;
  }
  const Matrix dp0 = m.second_order ? col_slice(dz0, 0, half) : dz0;
  out.dx = apply_map_vjp(m.input_map, x, dp0, params, out.dtheta);
  return out;
}

double gde_mse_grad(const NeuralGDEModel& m, const Matrix& x, const Matrix& target,
                    const GraphContext& ctx, const ParamStore& params, std::vector<double>& grad) {
  if (grad.size() != params.size()) throw std::invalid_argument("gde_mse_grad: grad size mismatch");
  const Matrix z0 = gde_initial_state(m, x, params);
  auto rhs = [&](double t, const Matrix& z) { return field_eval(m.field, t, z, params, ctx); };
  const Matrix zT = integrate(rhs, z0, m.span_start, m.span_end, m.solver).final_state();

  const int half = m.second_order ? zT.cols() / 2 : zT.cols();
  const Matrix pT = m.second_order ? col_slice(zT, 0, half) : zT;
  const Matrix pred = apply_map(m.output_map, pT, params);
  if (!pred.same_shape(target)) {
    throw std::invalid_argument("gde_mse_grad: prediction " + pred.shape_str() +
                                " vs target " + target.shape_str());
  }
  double loss = 0.0;
  Matrix dl(pred.rows(), pred.cols());
  const double inv = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred.values()[i] - target.values()[i];
    loss += e * e * inv;
    dl.values()[i] = 2.0 * e * inv;
  }

  Matrix dp = apply_map_vjp(m.output_map, pT, dl, params, grad);
  const Matrix dzT = m.second_order ? hcat(dp, Matrix(dp.rows(), dp.cols())) : std::move(dp);
  const IntervalAdjoint back = interval_adjoint_backward(m.field, params, ctx, m.span_start,
                                                         m.span_end, zT, dzT, m.solver, grad);
  const Matrix dp0 = m.second_order ? col_slice(back.lambda, 0, half) : back.lambda;
  apply_map_vjp(m.input_map, x, dp0, params, grad);
  return loss;
}

// ---------------------------------------------------------------------------
// Hybrid GCDE-GRU
// ---------------------------------------------------------------------------

HybridForward gcde_gru_forward(const HybridGDEModel& m, const DynamicGraphStream& stream,
                               const Matrix& z_init, const ParamStore& params) {
  stream.validate();
  if (stream.size() < 2) throw std::invalid_argument("gcde_gru_forward: stream length must be >= 2");
  if (z_init.cols() != m.nz) {
    throw std::invalid_argument("gcde_gru_forward: z_init width " + z_init.shape_str() +
                                " != nz=" + std::to_string(m.nz));
  }
  const std::size_t k_count = stream.size();
  HybridForward fwd;
  fwd.arc.timestamps = stream.timestamps;
  fwd.contexts.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) fwd.contexts.emplace_back(stream.graphs[k]);

  Matrix z = z_init;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (k > 0) {
      if (m.flow) {
        const GraphContext& ctx = fwd.contexts[k - 1];
        auto rhs = [&](double t, const Matrix& s) {
          return field_eval(*m.flow, t, s, params, ctx);
        };
        Trajectory seg =
            integrate(rhs, z, stream.timestamps[k - 1], stream.timestamps[k], m.solver);
        z = seg.final_state();
        fwd.arc.segments.push_back(std::move(seg));
      } else {
        fwd.arc.segments.emplace_back();
      }
    }
    fwd.arc.pre_jump.push_back(z);
    if (m.jump) {
      z = gcgru_jump(fwd.contexts[k].laplacian, z, stream.features[k], *m.jump, params, nullptr);
    }
    fwd.arc.post_jump.push_back(z);
    fwd.predictions.push_back(apply_map(m.output_map, z, params));
  }
  return fwd;
}

namespace {

void check_loss(const TimestampedLoss& loss, std::size_t k_count) {
  if (loss.dc_dz.size() != k_count) {
    throw std::invalid_argument("TimestampedLoss: need one (possibly empty) cotangent per "
                                "timestamp, got " +
                                std::to_string(loss.dc_dz.size()) + " for " +
                                std::to_string(k_count));
  }
}

}  // namespace

AdjointResult hybrid_adjoint_grad(const HybridGDEModel& m, const DynamicGraphStream& stream,
                                  const HybridForward& fwd, const TimestampedLoss& loss,
                                  const ParamStore& params) {
  const std::size_t k_count = stream.size();
  check_loss(loss, k_count);
  if (fwd.arc.pre_jump.size() != k_count) {
    throw std::invalid_argument("hybrid_adjoint_grad: arc does not match stream");
  }
  AdjointResult out;
  out.dtheta.assign(params.size(), 0.0);

  const int n = fwd.arc.pre_jump[0].rows();
  Matrix lambda(n, m.nz);
  for (std::size_t k = k_count; k-- > 0;) {
    // (a) cost cotangent injection on the post-jump state
    if (!loss.dc_dz[k].empty()) lambda += loss.dc_dz[k];
    // (b) jump VJP back to the pre-jump state
    if (m.jump) {
      GCGRUCache cache;
      gcgru_jump(fwd.contexts[k].laplacian, fwd.arc.pre_jump[k], stream.features[k], *m.jump,
                 params, &cache);
      GCGRUGrad g = gcgru_vjp(*m.jump, cache, lambda, fwd.contexts[k].laplacian, params,
                              out.dtheta);
      lambda = std::move(g.dz);
    }
    if (k > 0 && m.flow) {
      const IntervalAdjoint back = interval_adjoint_backward(
          *m.flow, params, fwd.contexts[k - 1], stream.timestamps[k - 1], stream.timestamps[k],
          fwd.arc.pre_jump[k], lambda, m.solver, out.dtheta);
      lambda = back.lambda;
    }
  }
  if (!loss.dc_dtheta.empty()) {
    if (loss.dc_dtheta.size() != out.dtheta.size()) {
      throw std::invalid_argument("TimestampedLoss: dc_dtheta length mismatch");
    }
    for (std::size_t i = 0; i < out.dtheta.size(); ++i) out.dtheta[i] += loss.dc_dtheta[i];
  }
  out.dz0 = std::move(lambda);
  return out;
}

AdjointResult hybrid_unrolled_grad(const HybridGDEModel& m, const DynamicGraphStream& stream,
                                   const Matrix& z_init, const TimestampedLoss& loss,
                                   const ParamStore& params, const SolverConfig& flow_cfg) {
  if (flow_cfg.method != SolverMethod::euler && flow_cfg.method != SolverMethod::rk4) {
    throw std::invalid_argument("hybrid_unrolled_grad: flow solver must be fixed-step");
  }
  HybridGDEModel fixed = m;
  fixed.solver = flow_cfg;
  const HybridForward fwd = gcde_gru_forward(fixed, stream, z_init, params);
  const std::size_t k_count = stream.size();
  check_loss(loss, k_count);

  AdjointResult out;
  out.dtheta.assign(params.size(), 0.0);
  const int n = z_init.rows();
  Matrix lambda(n, m.nz);
  for (std::size_t k = k_count; k-- > 0;) {
    if (!loss.dc_dz[k].empty()) lambda += loss.dc_dz[k];
    if (m.jump) {
      GCGRUCache cache;
      gcgru_jump(fwd.contexts[k].laplacian, fwd.arc.pre_jump[k], stream.features[k], *m.jump,
                 params, &cache);
      GCGRUGrad g = gcgru_vjp(*m.jump, cache, lambda, fwd.contexts[k].laplacian, params,
                              out.dtheta);
      lambda = std::move(g.dz);
    }
    if (k > 0 && m.flow) {
      AdjointResult r = unrolled_fixed_grad(*m.flow, params, fwd.arc.post_jump[k - 1],
                                            stream.timestamps[k - 1], stream.timestamps[k], lambda,
                                            fwd.contexts[k - 1], flow_cfg);
      for (std::size_t i = 0; i < out.dtheta.size(); ++i) out.dtheta[i] += r.dtheta[i];
      lambda = std::move(r.dz0);
    }
  }
  if (!loss.dc_dtheta.empty()) {
    for (std::size_t i = 0; i < out.dtheta.size(); ++i) out.dtheta[i] += loss.dc_dtheta[i];
  }
  out.dz0 = std::move(lambda);
  return out;
}

}  // namespace gde
