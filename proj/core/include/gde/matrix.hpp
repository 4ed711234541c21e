#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gde {

/// Dense row-major matrix of doubles. Graphs in scope stay small (n up to a
/// few hundred nodes), so there is no sparse storage and no BLAS dependency.
/// Exported operations reject non-finite results.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-filled
  Matrix(int rows, int cols, std::vector<double> values);

  static Matrix identity(int n);
  static Matrix constant(int rows, int cols, double value);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(int i, int j) { return values_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return values_[static_cast<std::size_t>(i) * cols_ + j]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix& operator+=(Matrix& a, const Matrix& b);
Matrix& operator-=(Matrix& a, const Matrix& b);

/// y += a * x
void axpy(double a, const Matrix& x, Matrix& y);

double max_abs(const Matrix& a);
double rms(const Matrix& a);
double frobenius_norm(const Matrix& a);
double dot(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& a);
/// Throws std::runtime_error naming `where` if a holds a NaN/Inf entry.
void require_finite(const Matrix& a, const char* where);

/// Concatenates columns: [a | b].
Matrix hcat(const Matrix& a, const Matrix& b);
/// Column slice [c0, c1).
Matrix col_slice(const Matrix& a, int c0, int c1);

}  // namespace gde
