#include "gde/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

Matrix::Matrix(int rows, int cols)
    : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows) * cols, 0.0) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
}

Matrix::Matrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument("Matrix: values length " + std::to_string(values_.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::constant(int rows, int cols, double value) {
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = value;
  return m;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: dimension mismatch " + a.shape_str() + " * " +
                                b.shape_str());
  }
  Matrix c(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* ci = c.data() + static_cast<std::size_t>(i) * m;
    const double* ai = a.data() + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b.data() + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  require_finite(c, "matmul");
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("hadamard: shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] *= b.values()[i];
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("operator+: shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] += b.values()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("operator-: shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] -= b.values()[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (auto& v : c.values()) v *= s;
  return c;
}

Matrix& operator+=(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("operator+=: shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  for (std::size_t i = 0; i < a.size(); ++i) a.values()[i] += b.values()[i];
  return a;
}

Matrix& operator-=(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("operator-=: shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  for (std::size_t i = 0; i < a.size(); ++i) a.values()[i] -= b.values()[i];
  return a;
}

void axpy(double a, const Matrix& x, Matrix& y) {
  if (!x.same_shape(y)) {
    throw std::invalid_argument("axpy: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
  }
  for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] += a * x.values()[i];
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double rms(const Matrix& a) {
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s / static_cast<double>(a.size()));
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double dot(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("dot: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

bool all_finite(const Matrix& a) {
  for (double v : a.values())
    if (!std::isfinite(v)) return false;
  return true;
}

void require_finite(const Matrix& a, const char* where) {
  if (!all_finite(a)) {
    throw std::runtime_error(std::string(where) + ": non-finite entry in " + a.shape_str() +
                             " result");
  }
}

Matrix hcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("hcat: row mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  Matrix c(a.rows(), a.cols() + b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
    for (int j = 0; j < b.cols(); ++j) c(i, a.cols() + j) = b(i, j);
  }
  return c;
}

Matrix col_slice(const Matrix& a, int c0, int c1) {
  if (c0 < 0 || c1 > a.cols() || c0 > c1) {
    throw std::invalid_argument("col_slice: bad range [" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") for " + a.shape_str());
  }
  Matrix c(a.rows(), c1 - c0);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = c0; j < c1; ++j) c(i, j - c0) = a(i, j);
  return c;
}

}  // namespace gde
