#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "gde/adjoint.hpp"
#include "gde/rng.hpp"

using namespace gde;

TEST_CASE("finite differences are exact on quadratics and linear forms") {
  const auto quad = [](const std::vector<double>& th) {
    double s = 0;
    for (double v : th) s += 0.5 * v * v;
    return s;
  };
  const auto grad = finite_difference_grad(quad, {1.0, 2.0}, 1e-4);
  CHECK(grad[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(grad[1] == doctest::Approx(2.0).epsilon(1e-10));

  const std::vector<double> a = {0.3, -1.7, 2.5};
  const auto lin = [&](const std::vector<double>& th) {
    double s = 0;
    for (std::size_t i = 0; i < th.size(); ++i) s += a[i] * th[i];
    return s;
  };
  for (double eps : {1e-2, 1e-5}) {
    const auto g = finite_difference_grad(lin, {0.0, 0.0, 0.0}, eps);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(g[i] == doctest::Approx(a[i]).epsilon(1e-10));
  }
}

TEST_CASE("scalar sensitivity dL/dtheta of zdot = theta z equals z0 e^theta") {
  ParamStore params;
  FieldSpec spec = make_affine_field(params, "f", {1, 1}, ActivationKind::identity(),
                                     ActivationKind::identity(), false);
  params.set_view("f.w0", Matrix(1, 1, {0.0}));  // theta = 0
  GraphContext ctx{Graph(1)};
  SolverConfig cfg;
  cfg.method = SolverMethod::dopri5;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;

  const AdjointResult res = terminal_adjoint_grad(spec, params, Matrix(1, 1, {1.0}), 0.0, 1.0,
                                                  Matrix(1, 1, {1.0}), ctx, cfg);
  CHECK(res.dtheta[0] == doctest::Approx(1.0).epsilon(1e-5));  // z0 e^theta at theta=0
  CHECK(res.dz0(0, 0) == doctest::Approx(1.0).epsilon(1e-5));  // dz(1)/dz0 = e^theta

  // cross-oracle: finite differences through the forward solve
  const auto loss = [&](const std::vector<double>& th) {
    ParamStore probe = params;
    probe.theta() = th;
    auto rhs = [&](double t, const Matrix& z) { return field_eval(spec, t, z, probe, ctx); };
    return integrate(rhs, Matrix(1, 1, {1.0}), 0.0, 1.0, cfg).final_state()(0, 0);
  };
  const auto fd = finite_difference_grad(loss, params.theta(), 1e-5);
  CHECK(res.dtheta[0] == doctest::Approx(fd[0]).epsilon(1e-6));
}

TEST_CASE("zero terminal cotangent gives zero gradients") {
  RngStream rng(61);
  ParamStore params;
  FieldSpec spec = make_gcn_field(params, "f", {2, 3, 2}, ActivationKind::tanh());
  for (auto& v : params.theta()) v = rng.uniform(-1, 1);
  Graph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  GraphContext ctx(g);
  Matrix z0(3, 2);
  for (auto& v : z0.values()) v = rng.uniform(-1, 1);
  SolverConfig cfg;
  cfg.method = SolverMethod::rk4;
  cfg.h = 0.1;
  const AdjointResult res =
      terminal_adjoint_grad(spec, params, z0, 0.0, 1.0, Matrix(3, 2), ctx, cfg);
  for (double v : res.dtheta) CHECK(v == 0.0);
  for (double v : res.dz0.values()) CHECK(v == 0.0);
}

TEST_CASE("adjoint gradient matches finite differences on a random 3-node model") {
  RngStream rng(62);
  ParamStore params;
  FieldSpec spec = make_gcn_field(params, "f", {2, 3, 2}, ActivationKind::tanh());
  for (auto& v : params.theta()) v = rng.uniform(-0.8, 0.8);
  Graph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  GraphContext ctx(g);
  Matrix z0(3, 2), dl(3, 2);
  for (auto& v : z0.values()) v = rng.uniform(-1, 1);
  for (auto& v : dl.values()) v = rng.uniform(-1, 1);

  SolverConfig cfg;
  cfg.method = SolverMethod::dopri5;
  cfg.rtol = 1e-9;
  cfg.atol = 1e-11;
  const AdjointResult res = terminal_adjoint_grad(spec, params, z0, 0.0, 1.0, dl, ctx, cfg);

  const auto loss = [&](const std::vector<double>& th) {
    ParamStore probe = params;
    probe.theta() = th;
    auto rhs = [&](double t, const Matrix& z) { return field_eval(spec, t, z, probe, ctx); };
    const Matrix zT = integrate(rhs, z0, 0.0, 1.0, cfg).final_state();
    return dot(dl, zT);
  };
  const auto fd = finite_difference_grad(loss, params.theta(), 1e-5);
  CHECK(max_rel_error(res.dtheta, fd) < 1e-4);
}

TEST_CASE("unrolled reverse pass agrees with the continuous adjoint") {
  RngStream rng(63);
  ParamStore params;
  FieldSpec spec = make_gcn_field(params, "f", {2, 2}, ActivationKind::tanh(),
                                  ActivationKind::tanh());
  for (auto& v : params.theta()) v = rng.uniform(-1, 1);
  Graph g(3);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  GraphContext ctx(g);
  Matrix z0(3, 2), dl(3, 2);
  for (auto& v : z0.values()) v = rng.uniform(-1, 1);
  for (auto& v : dl.values()) v = rng.uniform(-1, 1);

  SolverConfig fixed;
  fixed.method = SolverMethod::rk4;
  fixed.h = 0.02;
  const AdjointResult unrolled = unrolled_fixed_grad(spec, params, z0, 0.0, 1.0, dl, ctx, fixed);

  SolverConfig tight;
  tight.method = SolverMethod::dopri5;
  tight.rtol = 1e-10;
  tight.atol = 1e-12;
  const AdjointResult adj = terminal_adjoint_grad(spec, params, z0, 0.0, 1.0, dl, ctx, tight);

  CHECK(max_rel_error(unrolled.dtheta, adj.dtheta) < 1e-5);
  CHECK(max_rel_error(unrolled.dz0.values(), adj.dz0.values()) < 1e-5);

  // the unrolled pass is exact for its own discretization: check against FD
  // through the same fixed-step forward
  const auto loss = [&](const std::vector<double>& th) {
    ParamStore probe = params;
    probe.theta() = th;
    auto rhs = [&](double t, const Matrix& z) { return field_eval(spec, t, z, probe, ctx); };
    return dot(dl, integrate_fixed(rhs, z0, 0.0, 1.0, fixed).final_state());
  };
  const auto fd = finite_difference_grad(loss, params.theta(), 1e-6);
  CHECK(max_rel_error(unrolled.dtheta, fd) < 1e-6);
}

TEST_CASE("adjoint outputs are linear in the terminal cotangent") {
  RngStream rng(64);
  ParamStore params;
  FieldSpec spec = make_gcn_field(params, "f", {2, 2}, ActivationKind::tanh(),
                                  ActivationKind::identity());
  for (auto& v : params.theta()) v = rng.uniform(-1, 1);
  GraphContext ctx(([] {
    Graph g(2);
    g.add_edge(0, 1);
    return g;
  })());
  Matrix z0(2, 2), dl(2, 2);
  for (auto& v : z0.values()) v = rng.uniform(-1, 1);
  for (auto& v : dl.values()) v = rng.uniform(-1, 1);
  SolverConfig cfg;
  cfg.method = SolverMethod::rk4;
  cfg.h = 0.05;

  const AdjointResult base = terminal_adjoint_grad(spec, params, z0, 0.0, 1.0, dl, ctx, cfg);
  const double c = 3.25;
  const AdjointResult scaled = terminal_adjoint_grad(spec, params, z0, 0.0, 1.0, c * dl, ctx, cfg);
  for (std::size_t i = 0; i < base.dtheta.size(); ++i) {
    CHECK(scaled.dtheta[i] == doctest::Approx(c * base.dtheta[i]).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < base.dz0.size(); ++i) {
    CHECK(scaled.dz0.values()[i] == doctest::Approx(c * base.dz0.values()[i]).epsilon(1e-12));
  }
}
