#include "gde/activation.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

ActivationKind ActivationKind::leaky_relu(double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw std::invalid_argument("leaky_relu slope must lie in (0,1), got " +
                                std::to_string(slope));
  }
  return {ActivationTag::leaky_relu, slope};
}

ActivationResult activation(const ActivationKind& kind, const Matrix& x) {
  require_finite(x, "activation input");
  ActivationResult r{Matrix(x.rows(), x.cols()), Matrix(x.rows(), x.cols())};
  switch (kind.tag) {
    case ActivationTag::identity:
      r.value = x;
      r.derivative = Matrix::constant(x.rows(), x.cols(), 1.0);
      break;
    case ActivationTag::tanh_:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = std::tanh(x.values()[i]);
        r.value.values()[i] = t;
        r.derivative.values()[i] = 1.0 - t * t;
      }
      break;
    case ActivationTag::sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-x.values()[i]));
        r.value.values()[i] = s;
        r.derivative.values()[i] = s * (1.0 - s);
      }
      break;
    case ActivationTag::relu:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x.values()[i];
        r.value.values()[i] = v > 0.0 ? v : 0.0;
        r.derivative.values()[i] = v > 0.0 ? 1.0 : 0.0;
      }
      break;
    case ActivationTag::leaky_relu:
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x.values()[i];
        r.value.values()[i] = v > 0.0 ? v : kind.slope * v;
        r.derivative.values()[i] = v > 0.0 ? 1.0 : kind.slope;
      }
      break;
    case ActivationTag::softmax_rows:
      for (int i = 0; i < x.rows(); ++i) {
        double mx = x(i, 0);
        for (int j = 1; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
        double sum = 0.0;
        for (int j = 0; j < x.cols(); ++j) {
          const double e = std::exp(x(i, j) - mx);
          r.value(i, j) = e;
          sum += e;
        }
        for (int j = 0; j < x.cols(); ++j) {
          const double p = r.value(i, j) / sum;
          r.value(i, j) = p;
          r.derivative(i, j) = p * (1.0 - p);
        }
      }
      break;
  }
  require_finite(r.value, "activation value");
  require_finite(r.derivative, "activation derivative");
  return r;
}

Matrix activation_vjp(const ActivationKind& kind, const ActivationResult& cached,
                      const Matrix& upstream) {
  if (kind.tag == ActivationTag::softmax_rows) {
    // row Jacobian: d_j = p_j * (u_j - sum_k u_k p_k)
    const Matrix& p = cached.value;
    Matrix out(p.rows(), p.cols());
    for (int i = 0; i < p.rows(); ++i) {
      double inner = 0.0;
      for (int j = 0; j < p.cols(); ++j) inner += upstream(i, j) * p(i, j);
      for (int j = 0; j < p.cols(); ++j) out(i, j) = p(i, j) * (upstream(i, j) - inner);
    }
    return out;
  }
  return hadamard(upstream, cached.derivative);
}

const char* activation_name(const ActivationKind& kind) {
  switch (kind.tag) {
    case ActivationTag::identity: return "identity";
    case ActivationTag::tanh_: return "tanh";
    case ActivationTag::sigmoid: return "sigmoid";
    case ActivationTag::relu: return "relu";
    case ActivationTag::leaky_relu: return "leaky_relu";
    case ActivationTag::softmax_rows: return "softmax_rows";
  }
  return "?";
}

ActivationKind activation_from_name(const std::string& name) {
  if (name == "identity" || name == "none") return ActivationKind::identity();
  if (name == "tanh") return ActivationKind::tanh();
  if (name == "sigmoid") return ActivationKind::sigmoid();
  if (name == "relu") return ActivationKind::relu();
  if (name == "leaky_relu") return ActivationKind::leaky_relu(0.01);
  if (name == "softmax_rows") return ActivationKind::softmax_rows();
  throw std::invalid_argument("unknown activation: " + name);
}

}  // namespace gde
