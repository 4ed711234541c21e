#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "gde/field.hpp"
#include "gde/solvers.hpp"

namespace gde {

struct AdjointResult {
  std::vector<double> dtheta;
  Matrix dz0;
};

/// Continuous terminal-loss adjoint: runs the forward solve, then integrates
/// the augmented (z, lambda, theta-grad) system backward from span end with
/// the same solver family. Orientation is fixed so the result matches finite
/// differences: lambda(T) = dL/dZ(T), dL/dZ0 = lambda(t0).
AdjointResult terminal_adjoint_grad(const FieldSpec& spec, const ParamStore& params,
                                    const Matrix& z0, double t_start, double t_end,
                                    const Matrix& dl_dzT, const GraphContext& ctx,
                                    const SolverConfig& cfg);

/// Backward leg of the adjoint over one interval, starting from the stored
/// end state. Used by the hybrid adjoint between jumps; accumulates field
/// parameter gradients into dtheta and returns (z, lambda) at t_start.
struct IntervalAdjoint {
  Matrix z;
  Matrix lambda;
};
IntervalAdjoint interval_adjoint_backward(const FieldSpec& spec, const ParamStore& params,
                                          const GraphContext& ctx, double t_start, double t_end,
                                          const Matrix& z_end, const Matrix& lambda_end,
                                          const SolverConfig& cfg, std::vector<double>& dtheta);

/// Discretize-then-optimize: exact reverse-mode through the stored steps of
/// a fixed-step (euler or rk4) forward solve. Independent of the continuous
/// adjoint path and used both as its oracle and as the gradient engine for
/// stiff or stochastic unrolls.
AdjointResult unrolled_fixed_grad(const FieldSpec& spec, const ParamStore& params,
                                  const Matrix& z0, double t_start, double t_end,
                                  const Matrix& dl_dzT, const GraphContext& ctx,
                                  const SolverConfig& cfg);

/// Central differences, coordinate by coordinate.
std::vector<double> finite_difference_grad(
    const std::function<double(const std::vector<double>&)>& loss, const std::vector<double>& at,
    double epsilon);

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace gde
