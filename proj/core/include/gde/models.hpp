#pragma once

#include <optional>
#include <vector>

#include "gde/adjoint.hpp"
#include "gde/field.hpp"
#include "gde/graph.hpp"
#include "gde/solvers.hpp"

namespace gde {

/// Applies an affine map stack (empty spec = identity).
Matrix apply_map(const FieldSpec& map, const Matrix& in, const ParamStore& params);
/// VJP through the map; returns the input cotangent, accumulates parameter grads.
Matrix apply_map_vjp(const FieldSpec& map, const Matrix& in, const Matrix& lambda,
                     const ParamStore& params, std::vector<double>& dtheta);

/// Continuous-depth graph model: Y_t = out(Phi_t(in(X))). With second_order,
/// the input map feeds the position block, velocity starts at zero, and the
/// output map reads the position block.
struct NeuralGDEModel {
  FieldSpec input_map;   // affine stack, empty = identity
  FieldSpec field;
  FieldSpec output_map;  // affine stack, empty = identity
  double span_start = 0.0;
  double span_end = 1.0;
  SolverConfig solver;
  bool second_order = false;
};

Matrix gde_initial_state(const NeuralGDEModel& m, const Matrix& x, const ParamStore& params);
Matrix gde_readout(const NeuralGDEModel& m, const Matrix& z, const ParamStore& params);

/// Predictions at each requested depth (ascending, within the span).
std::vector<Matrix> gde_forward(const NeuralGDEModel& m, const Matrix& x, const GraphContext& ctx,
                                const ParamStore& params, const std::vector<double>& t_eval);
/// Prediction at span end.
Matrix gde_predict(const NeuralGDEModel& m, const Matrix& x, const GraphContext& ctx,
                   const ParamStore& params);

/// Full-model gradient for a terminal loss, given dL/dY at span end. Chains
/// the output-map VJP, the continuous adjoint over the span (or the unrolled
/// reverse pass when `unrolled`), and the input-map VJP. Returns the flat
/// parameter gradient and dL/dX.
struct GdeGrad {
  std::vector<double> dtheta;
  Matrix dx;
};
GdeGrad gde_terminal_grad(const NeuralGDEModel& m, const Matrix& x, const GraphContext& ctx,
                          const ParamStore& params, const Matrix& dl_dy, bool unrolled = false);

/// Mean-squared-error training step helper: one forward solve, loss
/// L = mean((Y - target)^2), gradient accumulated into `grad`.
double gde_mse_grad(const NeuralGDEModel& m, const Matrix& x, const Matrix& target,
                    const GraphContext& ctx, const ParamStore& params, std::vector<double>& grad);

// ---------------------------------------------------------------------------
// Hybrid model: continuous flow between timestamps, gated jump at each one
// ---------------------------------------------------------------------------

struct HybridGDEModel {
  std::optional<FieldSpec> flow;  // nullopt: no flow (discrete recurrence)
  std::optional<GCGRUSpec> jump;  // nullopt: identity jump
  FieldSpec output_map;           // per-node affine head, empty = identity
  SolverConfig solver;
  int nz = 0;
};

/// Piecewise solution record: flow segments plus per-timestamp jump pairs.
/// Segment k starts at jump k's post-state.
struct HybridArc {
  std::vector<double> timestamps;
  std::vector<Trajectory> segments;  // size K-1 (empty when no flow)
  std::vector<Matrix> pre_jump;      // size K
  std::vector<Matrix> post_jump;     // size K
};

struct HybridForward {
  HybridArc arc;
  std::vector<Matrix> predictions;          // head(post_jump[k])
  std::vector<GraphContext> contexts;       // per timestamp
};

/// Alternates flow over [t_k, t_{k+1}] (with the graph observed at t_k) and
/// GCGRU jumps on arrival of (X, G) at each timestamp; emits a prediction
/// after every jump.
HybridForward gcde_gru_forward(const HybridGDEModel& m, const DynamicGraphStream& stream,
                               const Matrix& z_init, const ParamStore& params);

/// Per-timestamp cost cotangents on the post-jump state; an empty matrix
/// means no cost at that timestamp. dc_dtheta carries any direct parameter
/// dependence of the costs (may be empty).
struct TimestampedLoss {
  std::vector<Matrix> dc_dz;
  std::vector<double> dc_dtheta;
};

/// Reversed-hybrid-domain adjoint: integrates lambda backward through every
/// interval, injecting cost cotangents and pulling back through the jump VJP
/// at each timestamp. Returns flow+jump parameter gradients and dL/dZ_init.
AdjointResult hybrid_adjoint_grad(const HybridGDEModel& m, const DynamicGraphStream& stream,
                                  const HybridForward& fwd, const TimestampedLoss& loss,
                                  const ParamStore& params);

/// Discretize-then-optimize reference: same loss, gradients through an
/// unrolled fixed-step forward. Independent of the adjoint path.
AdjointResult hybrid_unrolled_grad(const HybridGDEModel& m, const DynamicGraphStream& stream,
                                   const Matrix& z_init, const TimestampedLoss& loss,
                                   const ParamStore& params, const SolverConfig& flow_cfg);

}  // namespace gde
