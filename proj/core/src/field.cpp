#include "gde/field.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

int FieldSpec::slab_index(double t) const {
  if (slabs <= 1) return 0;
  const double span = t1 - t0;
  if (t < t0 - 1e-12 * std::abs(span) - 1e-12 || t > t1 + 1e-12 * std::abs(span) + 1e-12) {
    throw std::invalid_argument("FieldSpec: depth t=" + std::to_string(t) +
                                " outside declared span [" + std::to_string(t0) + ", " +
                                std::to_string(t1) + "]");
  }
  const int idx = static_cast<int>(std::floor((t - t0) / span * slabs));
  return std::min(std::max(idx, 0), slabs - 1);
}

void FieldSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("FieldSpec: empty layer stack");
  for (std::size_t i = 1; i < layers.size(); ++i) {
    if (layer_out_dim(layers[i - 1]) != layer_in_dim(layers[i])) {
      throw std::invalid_argument("FieldSpec: layer " + std::to_string(i - 1) + " out dim " +
                                  std::to_string(layer_out_dim(layers[i - 1])) +
                                  " does not chain into layer " + std::to_string(i));
    }
  }
  if (second_order) {
    const int in = layer_in_dim(layers.front());
    const int out = layer_out_dim(layers.back());
    if (in != 2 * out) {
      throw std::invalid_argument(
          "FieldSpec: second-order stack must map the doubled state to the velocity block (got " +
          std::to_string(in) + " -> " + std::to_string(out) + ")");
    }
  }
}

namespace {

Matrix run_stack(const FieldSpec& spec, int slab, const Matrix& z0, const ParamStore& params,
                 const GraphContext& ctx, FieldTape* tape) {
  Matrix z = z0;
  for (const auto& layer : spec.layers) {
    LayerCache cache;
    Matrix next = std::visit(
        [&](const auto& s) -> Matrix {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, GCNLayerSpec>) {
            GCNCache c;
            Matrix out = gcn_forward(s, slab, z, params, ctx, tape ? &c : nullptr);
            cache = std::move(c);
            return out;
          } else if constexpr (std::is_same_v<T, AffineLayerSpec>) {
            AffineCache c;
            Matrix out = affine_forward(s, slab, z, params, tape ? &c : nullptr);
            cache = std::move(c);
            return out;
          } else if constexpr (std::is_same_v<T, GATLayerSpec>) {
            GATCache c;
            Matrix out = gat_forward(s, slab, z, params, ctx, tape ? &c : nullptr);
            cache = std::move(c);
            return out;
          } else {
            GMDECache c;
            Matrix out = gmde_forward(s, slab, z, params, ctx, tape ? &c : nullptr);
            cache = std::move(c);
            return out;
          }
        },
        layer);
    if (tape) tape->layers.push_back(std::move(cache));
    z = std::move(next);
  }
  return z;
}

Matrix stack_vjp(const FieldSpec& spec, const FieldTape& tape, const Matrix& lambda,
                 const ParamStore& params, const GraphContext& ctx, std::vector<double>& dtheta) {
  Matrix lam = lambda;
  for (std::size_t i = spec.layers.size(); i-- > 0;) {
    lam = std::visit(
        [&](const auto& s) -> Matrix {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, GCNLayerSpec>) {
            return gcn_vjp(s, tape.slab, std::get<GCNCache>(tape.layers[i]), lam, params, ctx,
                           dtheta);
          } else if constexpr (std::is_same_v<T, AffineLayerSpec>) {
            return affine_vjp(s, tape.slab, std::get<AffineCache>(tape.layers[i]), lam, params,
                              dtheta);
          } else if constexpr (std::is_same_v<T, GATLayerSpec>) {
            return gat_vjp(s, tape.slab, std::get<GATCache>(tape.layers[i]), lam, params, ctx,
                           dtheta);
          } else {
            return gmde_vjp(s, tape.slab, std::get<GMDECache>(tape.layers[i]), lam, params, ctx,
                            dtheta);
          }
        },
        spec.layers[i]);
  }
  return lam;
}

}  // namespace

Matrix field_eval(const FieldSpec& spec, double t, const Matrix& z, const ParamStore& params,
                  const GraphContext& ctx, FieldTape* tape) {
  const int slab = spec.slab_index(t);
  if (tape) {
    tape->slab = slab;
    tape->layers.clear();
    tape->state_cols = z.cols();
  }
  if (!spec.second_order) {
    return run_stack(spec, slab, z, params, ctx, tape);
  }
  if (z.cols() % 2 != 0) {
    throw std::invalid_argument("field_eval: second-order state must have even width, got " +
                                z.shape_str());
  }
  const int half = z.cols() / 2;
  const Matrix accel = run_stack(spec, slab, z, params, ctx, tape);
  if (accel.cols() != half) {
    throw std::invalid_argument("field_eval: second-order stack output width " +
                                std::to_string(accel.cols()) + " != half state " +
                                std::to_string(half));
  }
  // dP/dt = V, dV/dt = stack(Z)
  return hcat(col_slice(z, half, z.cols()), accel);
}

Matrix field_vjp_tape(const FieldSpec& spec, const FieldTape& tape, const Matrix& lambda,
                      const ParamStore& params, const GraphContext& ctx,
                      std::vector<double>& dtheta) {
  if (!spec.second_order) {
    return stack_vjp(spec, tape, lambda, params, ctx, dtheta);
  }
  const int half = tape.state_cols / 2;
  const Matrix lam_p = col_slice(lambda, 0, half);
  const Matrix lam_v = col_slice(lambda, half, 2 * half);
  Matrix dz = stack_vjp(spec, tape, lam_v, params, ctx, dtheta);
  for (int i = 0; i < dz.rows(); ++i)
    for (int j = 0; j < half; ++j) dz(i, half + j) += lam_p(i, j);
  return dz;
}

FieldGrad field_vjp(const FieldSpec& spec, double t, const Matrix& z, const Matrix& lambda,
                    const ParamStore& params, const GraphContext& ctx) {
  FieldTape tape;
  FieldGrad grad;
  grad.value = field_eval(spec, t, z, params, ctx, &tape);
  grad.dtheta.assign(params.size(), 0.0);
  grad.dz = field_vjp_tape(spec, tape, lambda, params, ctx, grad.dtheta);
  return grad;
}

FieldSpec make_gcn_field(ParamStore& params, const std::string& prefix,
                         const std::vector<int>& dims, const ActivationKind& hidden_act,
                         const ActivationKind& last_act, int slabs) {
  if (dims.size() < 2) throw std::invalid_argument("make_gcn_field: need at least two dims");
  FieldSpec spec;
  spec.slabs = slabs;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    GCNLayerSpec layer;
    layer.in_dim = dims[i];
    layer.out_dim = dims[i + 1];
    layer.act = (i + 2 == dims.size()) ? last_act : hidden_act;
    for (int s = 0; s < slabs; ++s) {
      std::string name = prefix + ".w" + std::to_string(i);
      if (slabs > 1) name += ".s" + std::to_string(s);
      layer.weight.push_back(params.add_view(name, dims[i], dims[i + 1]));
    }
    spec.layers.push_back(layer);
  }
  spec.validate();
  return spec;
}

FieldSpec make_affine_field(ParamStore& params, const std::string& prefix,
                            const std::vector<int>& dims, const ActivationKind& hidden_act,
                            const ActivationKind& last_act, bool bias) {
  if (dims.size() < 2) throw std::invalid_argument("make_affine_field: need at least two dims");
  FieldSpec spec;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    AffineLayerSpec layer;
    layer.in_dim = dims[i];
    layer.out_dim = dims[i + 1];
    layer.act = (i + 2 == dims.size()) ? last_act : hidden_act;
    layer.weight.push_back(params.add_view(prefix + ".w" + std::to_string(i), dims[i], dims[i + 1]));
    if (bias) {
      layer.bias.push_back(params.add_view(prefix + ".b" + std::to_string(i), 1, dims[i + 1]));
    }
    spec.layers.push_back(layer);
  }
  spec.validate();
  return spec;
}

}  // namespace gde
