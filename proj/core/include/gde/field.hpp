#pragma once

#include <utility>
#include <vector>

#include "gde/layers.hpp"

namespace gde {

/// Stacked vector field f(t, Z) on a graph: an ordered composition of layer
/// primitives. Parameters may be piecewise-constant in depth (one slab of
/// views per depth-grid cell), and a second-order wrapper splits the state
/// into [position | velocity] blocks with dP/dt = V and dV/dt = stack(Z).
struct FieldSpec {
  std::vector<LayerSpec> layers;
  bool second_order = false;
  int slabs = 1;          // > 1: piecewise-constant parameters over [t0, t1]
  double t0 = 0.0;
  double t1 = 1.0;

  int slab_index(double t) const;
  /// Checks that consecutive layer dims chain (and halve for second_order).
  void validate() const;
};

struct FieldTape {
  int slab = 0;
  std::vector<LayerCache> layers;
  int state_cols = 0;
};

Matrix field_eval(const FieldSpec& spec, double t, const Matrix& z, const ParamStore& params,
                  const GraphContext& ctx, FieldTape* tape = nullptr);

struct FieldGrad {
  Matrix value;  // f(t, Z) from the taped forward pass
  Matrix dz;
  std::vector<double> dtheta;
};

/// Reverse pass over a recorded tape; dtheta is accumulated in place.
Matrix field_vjp_tape(const FieldSpec& spec, const FieldTape& tape, const Matrix& lambda,
                      const ParamStore& params, const GraphContext& ctx,
                      std::vector<double>& dtheta);

/// Forward-then-reverse at (t, Z): returns (df/dZ)^T lambda and (df/dtheta)^T lambda.
FieldGrad field_vjp(const FieldSpec& spec, double t, const Matrix& z, const Matrix& lambda,
                    const ParamStore& params, const GraphContext& ctx);

// -- spec construction helpers ------------------------------------------------

/// GCN stack with the given widths; activation on all but the last layer
/// unless `last_act` overrides it.
FieldSpec make_gcn_field(ParamStore& params, const std::string& prefix,
                         const std::vector<int>& dims, const ActivationKind& hidden_act,
                         const ActivationKind& last_act = ActivationKind::identity(),
                         int slabs = 1);
FieldSpec make_affine_field(ParamStore& params, const std::string& prefix,
                            const std::vector<int>& dims, const ActivationKind& hidden_act,
                            const ActivationKind& last_act = ActivationKind::identity(),
                            bool bias = true);

}  // namespace gde
