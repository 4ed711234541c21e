#pragma once

#include "gde/matrix.hpp"

namespace gde {

enum class ActivationTag { identity, tanh_, sigmoid, relu, leaky_relu, softmax_rows };

struct ActivationKind {
  ActivationTag tag = ActivationTag::identity;
  double slope = 0.01;  // leaky_relu only, must lie in (0,1)

  static ActivationKind identity() { return {ActivationTag::identity, 0.0}; }
  static ActivationKind tanh() { return {ActivationTag::tanh_, 0.0}; }
  static ActivationKind sigmoid() { return {ActivationTag::sigmoid, 0.0}; }
  static ActivationKind relu() { return {ActivationTag::relu, 0.0}; }
  static ActivationKind leaky_relu(double slope);
  static ActivationKind softmax_rows() { return {ActivationTag::softmax_rows, 0.0}; }
};

struct ActivationResult {
  Matrix value;
  /// Elementwise sigma'(x). For softmax_rows this slot holds only the
  /// diagonal terms value*(1-value); the full row Jacobian is applied
  /// through activation_vjp.
  Matrix derivative;
};

ActivationResult activation(const ActivationKind& kind, const Matrix& x);

/// Pulls an upstream cotangent back through the activation given the cached
/// forward result. This is the one place the softmax row Jacobian lives.
Matrix activation_vjp(const ActivationKind& kind, const ActivationResult& cached,
                      const Matrix& upstream);

const char* activation_name(const ActivationKind& kind);
ActivationKind activation_from_name(const std::string& name);

}  // namespace gde
