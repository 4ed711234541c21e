#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "gde/field.hpp"
#include "gde/rng.hpp"
#include "gde/solvers.hpp"

using namespace gde;

namespace {
Graph ring(int n) {
  Graph g(n);
  for (int i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
  return g;
}
}  // namespace

TEST_CASE("single identity affine layer is the identity field") {
  ParamStore params;
  FieldSpec spec = make_affine_field(params, "f", {3, 3}, ActivationKind::identity(),
                                     ActivationKind::identity(), false);
  params.set_view("f.w0", Matrix::identity(3));
  GraphContext ctx{Graph(2)};
  Matrix z(2, 3, {1, 2, 3, 4, 5, 6});
  const Matrix out = field_eval(spec, 0.3, z, params, ctx);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(out.values()[i] == z.values()[i]);
}

TEST_CASE("second-order free motion and harmonic oscillator") {
  // inner stack == 0: d/dt [P|V] = [V|0]
  ParamStore params;
  FieldSpec spec = make_affine_field(params, "f", {2, 1}, ActivationKind::identity(),
                                     ActivationKind::identity(), false);
  spec.second_order = true;
  GraphContext ctx{Graph(1)};

  const Matrix z0(1, 2, {1.0, 0.5});  // P = 1, V = 0.5
  SolverConfig cfg;
  cfg.method = SolverMethod::rk4;
  cfg.h = 0.05;
  auto rhs = [&](double t, const Matrix& z) { return field_eval(spec, t, z, params, ctx); };
  const Matrix zT = integrate_fixed(rhs, z0, 0.0, 1.0, cfg).final_state();
  CHECK(zT(0, 0) == doctest::Approx(1.0 + 0.5).epsilon(1e-12));  // P + t V
  CHECK(zT(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  // inner stack = -P: harmonic field, P(t) = cos t from P=1, V=0
  params.set_view("f.w0", Matrix(2, 1, {-1.0, 0.0}));
  const Matrix osc0(1, 2, {1.0, 0.0});
  SolverConfig tight;
  tight.method = SolverMethod::dopri5;
  tight.rtol = 1e-10;
  tight.atol = 1e-12;
  const Matrix oscT = integrate_dopri5(rhs, osc0, 0.0, 1.0, tight).final_state();
  CHECK(oscT(0, 0) == doctest::Approx(std::cos(1.0)).epsilon(1e-8));
}

TEST_CASE("piecewise-constant slabs select by depth and reject out-of-span t") {
  ParamStore params;
  FieldSpec spec = make_gcn_field(params, "f", {2, 2}, ActivationKind::identity(),
                                  ActivationKind::identity(), 2);
  params.set_view("f.w0.s0", Matrix::identity(2));
  params.set_view("f.w0.s1", 3.0 * Matrix::identity(2));
  GraphContext ctx{Graph(2)};
  const Matrix z(2, 2, {1, 0, 0, 1});
  CHECK(field_eval(spec, 0.25, z, params, ctx)(0, 0) == doctest::Approx(1.0));
  CHECK(field_eval(spec, 0.75, z, params, ctx)(0, 0) == doctest::Approx(3.0));
  CHECK(field_eval(spec, 1.0, z, params, ctx)(0, 0) == doctest::Approx(3.0));
  CHECK_THROWS_AS((void)field_eval(spec, 1.5, z, params, ctx), std::invalid_argument);
}

TEST_CASE("field vjp: zero cotangent gives zero gradients") {
  RngStream rng(51);
  ParamStore params;
  FieldSpec spec = make_gcn_field(params, "f", {2, 3, 2}, ActivationKind::tanh());
  for (auto& v : params.theta()) v = rng.uniform(-1, 1);
  GraphContext ctx(ring(4));
  Matrix z(4, 2);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);
  const FieldGrad g = field_vjp(spec, 0.0, z, Matrix(4, 2), params, ctx);
  for (double v : g.dz.values()) CHECK(v == 0.0);
  for (double v : g.dtheta) CHECK(v == 0.0);
}

// <field_vjp dZ, V> must equal <lambda, (f(Z+eps V) - f(Z-eps V)) / 2 eps>
TEST_CASE("field vjp satisfies the directional-derivative identity") {
  RngStream rng(52);
  for (int trial = 0; trial < 5; ++trial) {
    ParamStore params;
    FieldSpec spec = make_gcn_field(params, "f", {3, 4, 3}, ActivationKind::tanh());
    for (auto& v : params.theta()) v = rng.uniform(-1, 1);
    GraphContext ctx(ring(5));
    Matrix z(5, 3), lam(5, 3), dir(5, 3);
    for (auto& v : z.values()) v = rng.uniform(-1, 1);
    for (auto& v : lam.values()) v = rng.uniform(-1, 1);
    for (auto& v : dir.values()) v = rng.uniform(-1, 1);

    const FieldGrad g = field_vjp(spec, 0.0, z, lam, params, ctx);
    const double lhs = dot(g.dz, dir);

    const double eps = 1e-5;
    Matrix zp = z, zm = z;
    axpy(eps, dir, zp);
    axpy(-eps, dir, zm);
    const Matrix fp = field_eval(spec, 0.0, zp, params, ctx);
    const Matrix fm = field_eval(spec, 0.0, zm, params, ctx);
    const double rhs = dot(lam, (1.0 / (2 * eps)) * (fp - fm));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
  }
}

TEST_CASE("field vjp with slabs routes gradients to the active slab") {
  RngStream rng(53);
  ParamStore params;
  FieldSpec spec = make_gcn_field(params, "f", {2, 2}, ActivationKind::tanh(),
                                  ActivationKind::tanh(), 2);
  for (auto& v : params.theta()) v = rng.uniform(-1, 1);
  GraphContext ctx(ring(3));
  Matrix z(3, 2), lam(3, 2);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);
  for (auto& v : lam.values()) v = rng.uniform(-1, 1);

  const FieldGrad g = field_vjp(spec, 0.2, z, lam, params, ctx);
  const ViewInfo& s0 = params.info("f.w0.s0");
  const ViewInfo& s1 = params.info("f.w0.s1");
  double s0_norm = 0, s1_norm = 0;
  for (std::size_t i = 0; i < s0.size(); ++i) s0_norm += std::abs(g.dtheta[s0.offset + i]);
  for (std::size_t i = 0; i < s1.size(); ++i) s1_norm += std::abs(g.dtheta[s1.offset + i]);
  CHECK(s0_norm > 0.0);
  CHECK(s1_norm == 0.0);

  // finite-difference check on the active slab
  const double eps = 1e-6;
  for (std::size_t i = 0; i < s0.size(); ++i) {
    const std::size_t k = s0.offset + i;
    const double keep = params.theta()[k];
    params.theta()[k] = keep + eps;
    const Matrix up = field_eval(spec, 0.2, z, params, ctx);
    params.theta()[k] = keep - eps;
    const Matrix dn = field_eval(spec, 0.2, z, params, ctx);
    params.theta()[k] = keep;
    double fd = 0.0;
    for (std::size_t e = 0; e < up.size(); ++e)
      fd += lam.values()[e] * (up.values()[e] - dn.values()[e]) / (2 * eps);
    CHECK(g.dtheta[k] == doctest::Approx(fd).epsilon(2e-5));
  }
}

TEST_CASE("second-order vjp matches finite differences") {
  RngStream rng(54);
  ParamStore params;
  FieldSpec spec = make_gcn_field(params, "f", {4, 3, 2}, ActivationKind::tanh());
  spec.second_order = true;
  for (auto& v : params.theta()) v = rng.uniform(-1, 1);
  GraphContext ctx(ring(3));
  Matrix z(3, 4), lam(3, 4), dir(3, 4);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);
  for (auto& v : lam.values()) v = rng.uniform(-1, 1);
  for (auto& v : dir.values()) v = rng.uniform(-1, 1);

  const FieldGrad g = field_vjp(spec, 0.0, z, lam, params, ctx);
  const double eps = 1e-5;
  Matrix zp = z, zm = z;
  axpy(eps, dir, zp);
  axpy(-eps, dir, zm);
  const Matrix fp = field_eval(spec, 0.0, zp, params, ctx);
  const Matrix fm = field_eval(spec, 0.0, zm, params, ctx);
  CHECK(dot(g.dz, dir) ==
        doctest::Approx(dot(lam, (1.0 / (2 * eps)) * (fp - fm))).epsilon(1e-5));
}
