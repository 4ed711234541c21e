#include <doctest.h>

#include <stdexcept>

#include "gde/matrix.hpp"
#include "gde/rng.hpp"

using namespace gde;

TEST_CASE("matmul identity and zero cases") {
  const Matrix a(2, 2, {1, 2, 3, 4});
  const Matrix prod = matmul(Matrix::identity(2), a);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(prod(i, j) == a(i, j));

  const Matrix z = matmul(Matrix(2, 2), Matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("matmul hand expansion") {
  // [[1,2],[3,4]] * [[5,6],[7,8]]: four dot products expanded by hand
  const Matrix c = matmul(Matrix(2, 2, {1, 2, 3, 4}), Matrix(2, 2, {5, 6, 7, 8}));
  CHECK(c(0, 0) == doctest::Approx(1 * 5 + 2 * 7));
  CHECK(c(0, 1) == doctest::Approx(1 * 6 + 2 * 8));
  CHECK(c(1, 0) == doctest::Approx(3 * 5 + 4 * 7));
  CHECK(c(1, 1) == doctest::Approx(3 * 6 + 4 * 8));
  CHECK(c(0, 0) == 19.0);
  CHECK(c(1, 1) == 50.0);
}

TEST_CASE("matmul rejects dimension mismatch naming both shapes") {
  try {
    matmul(Matrix(2, 3), Matrix(2, 2));
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("2x2") != std::string::npos);
  }
}

TEST_CASE("matmul associativity on random 5x5 triples") {
  RngStream rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a(5, 5), b(5, 5), c(5, 5);
    for (auto& v : a.values()) v = rng.uniform(-1, 1);
    for (auto& v : b.values()) v = rng.uniform(-1, 1);
    for (auto& v : c.values()) v = rng.uniform(-1, 1);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    double scale = max_abs(left);
    for (std::size_t i = 0; i < left.size(); ++i) {
      CHECK(std::abs(left.values()[i] - right.values()[i]) <= 1e-12 * std::max(scale, 1.0));
    }
  }
}

TEST_CASE("finiteness is enforced on exported results") {
  Matrix a(1, 1, {1e308});
  Matrix b(1, 1, {1e308});
  CHECK_THROWS_AS((void)matmul(a, b), std::runtime_error);
}

TEST_CASE("hcat and col_slice round trip") {
  const Matrix a(2, 2, {1, 2, 3, 4});
  const Matrix b(2, 1, {9, 8});
  const Matrix c = hcat(a, b);
  CHECK(c.cols() == 3);
  CHECK(c(1, 2) == 8.0);
  const Matrix back = col_slice(c, 0, 2);
  CHECK(back(1, 1) == 4.0);
}
