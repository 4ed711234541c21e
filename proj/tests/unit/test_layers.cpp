#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "gde/layers.hpp"
#include "gde/rng.hpp"

using namespace gde;

namespace {

Graph path_graph(int n) {
  Graph g(n);
  for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
  return g;
}

void randomize(ParamStore& params, RngStream& rng, double scale = 0.7) {
  for (auto& v : params.theta()) v = rng.uniform(-scale, scale);
}

}  // namespace

TEST_CASE("gcn forward closed forms") {
  ParamStore params;
  GCNLayerSpec spec{1, 1, ActivationKind::tanh(), {params.add_view("w", 1, 1)}};

  // L = [[0.5, 0.5], [0.5, 0.5]] via the single-edge graph; Z = [[1],[3]]
  GraphContext ctx(([] {
    Graph g(2);
    g.add_edge(0, 1);
    return g;
  })());
  params.set_view("w", Matrix(1, 1, {1.0}));
  const Matrix out = gcn_forward(spec, 0, Matrix(2, 1, {1.0, 3.0}), params, ctx, nullptr);
  CHECK(out(0, 0) == doctest::Approx(std::tanh(2.0)).epsilon(1e-12));
  CHECK(out(1, 0) == doctest::Approx(std::tanh(2.0)).epsilon(1e-12));
  CHECK(out(0, 0) == doctest::Approx(0.9640275800758169));

  // identity composition: L = I (empty graph has self-loops only), W = I
  ParamStore p2;
  GCNLayerSpec ident{2, 2, ActivationKind::identity(), {p2.add_view("w", 2, 2)}};
  p2.set_view("w", Matrix::identity(2));
  GraphContext lonely(Graph(2));
  const Matrix z(2, 2, {1, 2, 3, 4});
  const Matrix same = gcn_forward(ident, 0, z, p2, lonely, nullptr);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(same.values()[i] == doctest::Approx(z.values()[i]));

  // zero weights -> tanh(0) = 0
  p2.set_view("w", Matrix(2, 2));
  const Matrix zero = gcn_forward(ident, 0, z, p2, lonely, nullptr);
  for (double v : zero.values()) CHECK(v == 0.0);
}

TEST_CASE("gat attention closed forms") {
  // single node: softmax over the lone self logit is 1 regardless of a, W
  {
    ParamStore params;
    GATLayerSpec spec{1, 1, ActivationKind::identity(), 0.2,
                      {params.add_view("w", 1, 1)}, {params.add_view("a", 1, 2)}};
    RngStream rng(1);
    randomize(params, rng);
    GraphContext ctx{Graph(1)};
    GATCache cache;
    gat_forward(spec, 0, Matrix(1, 1, {0.37}), params, ctx, &cache);
    CHECK(cache.alpha(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  // zero attention vector, 2 fully connected nodes: uniform rows
  {
    ParamStore params;
    GATLayerSpec spec{1, 1, ActivationKind::identity(), 0.2,
                      {params.add_view("w", 1, 1)}, {params.add_view("a", 1, 2)}};
    params.set_view("w", Matrix(1, 1, {1.3}));
    GraphContext ctx(path_graph(2));
    GATCache cache;
    gat_forward(spec, 0, Matrix(2, 1, {0.2, -0.9}), params, ctx, &cache);
    CHECK(cache.alpha(0, 0) == doctest::Approx(0.5));
    CHECK(cache.alpha(0, 1) == doctest::Approx(0.5));
    CHECK(cache.alpha(1, 0) == doctest::Approx(0.5));
  }
  // hand case: W=[[1]], a=(1,0), Z=[[1],[2]]: both logits of node 0 use
  // a1*W*z_0 = 1, so its row is uniform
  {
    ParamStore params;
    GATLayerSpec spec{1, 1, ActivationKind::identity(), 0.2,
                      {params.add_view("w", 1, 1)}, {params.add_view("a", 1, 2)}};
    params.set_view("w", Matrix(1, 1, {1.0}));
    params.set_view("a", Matrix(1, 2, {1.0, 0.0}));
    GraphContext ctx(path_graph(2));
    GATCache cache;
    gat_forward(spec, 0, Matrix(2, 1, {1.0, 2.0}), params, ctx, &cache);
    CHECK(cache.alpha(0, 0) == doctest::Approx(0.5));
    CHECK(cache.alpha(0, 1) == doctest::Approx(0.5));
  }
}

TEST_CASE("gat rows are stochastic over neighborhood plus self") {
  RngStream rng(4);
  ParamStore params;
  GATLayerSpec spec{3, 2, ActivationKind::tanh(), 0.2,
                    {params.add_view("w", 3, 2)}, {params.add_view("a", 1, 4)}};
  randomize(params, rng);
  Graph g(5);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.add_edge(2, 3);
  GraphContext ctx(g);
  Matrix z(5, 3);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);
  GATCache cache;
  gat_forward(spec, 0, z, params, ctx, &cache);
  for (int v = 0; v < 5; ++v) {
    double row = 0;
    for (int u = 0; u < 5; ++u) {
      row += cache.alpha(v, u);
      if (u != v && !g.has_edge(v, u)) CHECK(cache.alpha(v, u) == 0.0);
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gmde closed forms") {
  ParamStore params;
  GMDELayerSpec spec;
  spec.dim = 1;
  spec.msg_dim = 1;
  spec.msg_act = ActivationKind::identity();
  spec.upd_act = ActivationKind::identity();
  spec.msg_w = {params.add_view("mw", 2, 1)};
  spec.msg_b = {params.add_view("mb", 1, 1)};
  spec.upd_w = {params.add_view("uw", 1, 1)};
  spec.upd_b = {params.add_view("ub", 1, 1)};

  Graph g(3);  // node 0 adjacent to 1 and 2; no other edges
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  GraphContext ctx(g);

  // all update weights zero, identity activation -> zeros
  const Matrix z(3, 1, {0.0, 1.0, 2.0});
  Matrix out = gmde_forward(spec, 0, z, params, ctx, nullptr);
  for (double v : out.values()) CHECK(v == 0.0);

  // message = copy of z_u, update = identity: node 0 sums z_1 + z_2 = 3
  params.set_view("mw", Matrix(2, 1, {0.0, 1.0}));
  params.set_view("uw", Matrix(1, 1, {1.0}));
  out = gmde_forward(spec, 0, z, params, ctx, nullptr);
  CHECK(out(0, 0) == doctest::Approx(3.0));

  // isolated node gets the bias-only row g(0)
  Graph g2(3);
  g2.add_edge(0, 1);
  GraphContext ctx2(g2);  // node 2 isolated
  params.set_view("ub", Matrix(1, 1, {0.25}));
  out = gmde_forward(spec, 0, z, params, ctx2, nullptr);
  CHECK(out(2, 0) == doctest::Approx(0.25));
}

TEST_CASE("gmde is permutation equivariant") {
  RngStream rng(12);
  ParamStore params;
  GMDELayerSpec spec;
  spec.dim = 2;
  spec.msg_dim = 3;
  spec.msg_act = ActivationKind::tanh();
  spec.upd_act = ActivationKind::tanh();
  spec.msg_w = {params.add_view("mw", 4, 3)};
  spec.msg_b = {params.add_view("mb", 1, 3)};
  spec.upd_w = {params.add_view("uw", 3, 2)};
  spec.upd_b = {params.add_view("ub", 1, 2)};
  randomize(params, rng);

  const int n = 6;
  Graph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.4)) g.add_edge(i, j);
  Matrix z(n, 2);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);
  const Matrix out = gmde_forward(spec, 0, z, params, GraphContext(g), nullptr);

  // random permutation
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);

  Graph pg(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (g.adjacency(i, j) != 0.0) pg.adjacency(perm[i], perm[j]) = 1.0;
  Matrix pz(n, 2);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c) pz(perm[i], c) = z(i, c);
  const Matrix pout = gmde_forward(spec, 0, pz, params, GraphContext(pg), nullptr);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c) CHECK(pout(perm[i], c) == doctest::Approx(out(i, c)).epsilon(1e-12));
}

TEST_CASE("gcgru closed forms") {
  const int n = 2, nx = 2, nz = 3;
  ParamStore params;
  const GCGRUSpec spec = GCGRUSpec::create(params, "jump", nx, nz);
  GraphContext ctx(path_graph(n));
  RngStream rng(8);
  Matrix z(n, nz), x(n, nx);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);
  for (auto& v : x.values()) v = rng.uniform(-1, 1);

  // all-zero weights: H = R = 0.5, Ztilde = 0, so Z+ = Z/2
  Matrix out = gcgru_jump(ctx.laplacian, z, x, spec, params, nullptr);
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(out.values()[i] == doctest::Approx(0.5 * z.values()[i]).epsilon(1e-12));
  }
  // zero state and zero weights: fixed point at zero
  out = gcgru_jump(ctx.laplacian, Matrix(n, nz), x, spec, params, nullptr);
  for (double v : out.values()) CHECK(v == 0.0);

  // saturating the H gate keeps Z: large positive w_hz with positive Z
  params.set_view(spec.w_hz, Matrix::constant(nz, nz, 200.0));
  Matrix zpos = Matrix::constant(n, nz, 0.8);
  out = gcgru_jump(ctx.laplacian, zpos, Matrix(n, nx), spec, params, nullptr);
  for (std::size_t i = 0; i < zpos.size(); ++i) {
    CHECK(out.values()[i] == doctest::Approx(zpos.values()[i]).epsilon(1e-8));
  }
}

TEST_CASE("gcgru output is elementwise bounded when |Z| <= 1") {
  RngStream rng(15);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3, nx = 2, nz = 2;
    ParamStore params;
    const GCGRUSpec spec = GCGRUSpec::create(params, "j", nx, nz);
    randomize(params, rng, 2.0);
    GraphContext ctx(path_graph(n));
    Matrix z(n, nz), x(n, nx);
    for (auto& v : z.values()) v = rng.uniform(-1, 1);
    for (auto& v : x.values()) v = rng.uniform(-3, 3);
    const Matrix out = gcgru_jump(ctx.laplacian, z, x, spec, params, nullptr);
    for (double v : out.values()) CHECK(std::abs(v) <= 1.0 + 1e-12);
  }
}

// ---------------------------------------------------------------------------
// finite-difference oracle for every layer VJP
// ---------------------------------------------------------------------------

namespace {

// <lambda, layer(x + eps v)> central difference against the VJP
template <class Fwd, class Vjp>
void check_vjp(ParamStore& params, const Matrix& z, Fwd&& fwd, Vjp&& vjp, RngStream& rng) {
  Matrix lam(fwd(params, z).rows(), fwd(params, z).cols());
  for (auto& v : lam.values()) v = rng.uniform(-1, 1);

  std::vector<double> dtheta(params.size(), 0.0);
  const Matrix dz = vjp(params, z, lam, dtheta);

  const double eps = 1e-6;
  // input cotangent, entry by entry
  for (int i = 0; i < z.rows(); ++i) {
    for (int j = 0; j < z.cols(); ++j) {
      Matrix zp = z, zm = z;
      zp(i, j) += eps;
      zm(i, j) -= eps;
      const Matrix up = fwd(params, zp), dn = fwd(params, zm);
      double fd = 0.0;
      for (std::size_t e = 0; e < up.size(); ++e) {
        fd += lam.values()[e] * (up.values()[e] - dn.values()[e]) / (2 * eps);
      }
      CHECK(dz(i, j) == doctest::Approx(fd).epsilon(2e-5));
    }
  }
  // parameter cotangent
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double keep = params.theta()[k];
    params.theta()[k] = keep + eps;
    const Matrix up = fwd(params, z);
    params.theta()[k] = keep - eps;
    const Matrix dn = fwd(params, z);
    params.theta()[k] = keep;
    double fd = 0.0;
    for (std::size_t e = 0; e < up.size(); ++e) {
      fd += lam.values()[e] * (up.values()[e] - dn.values()[e]) / (2 * eps);
    }
    CHECK(dtheta[k] == doctest::Approx(fd).epsilon(2e-5));
  }
}

}  // namespace

TEST_CASE("gcn vjp matches finite differences and the linear closed form") {
  RngStream rng(31);
  ParamStore params;
  GCNLayerSpec spec{3, 2, ActivationKind::tanh(), {params.add_view("w", 3, 2)}};
  randomize(params, rng);
  GraphContext ctx(path_graph(4));
  Matrix z(4, 3);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);

  check_vjp(
      params, z,
      [&](const ParamStore& p, const Matrix& zz) { return gcn_forward(spec, 0, zz, p, ctx, nullptr); },
      [&](const ParamStore& p, const Matrix& zz, const Matrix& lam, std::vector<double>& dth) {
        GCNCache cache;
        gcn_forward(spec, 0, zz, p, ctx, &cache);
        return gcn_vjp(spec, 0, cache, lam, p, ctx, dth);
      },
      rng);

  // identity activation: dZ = L^T lam W^T and dW = (L Z)^T lam
  GCNLayerSpec lin{3, 2, ActivationKind::identity(), spec.weight};
  Matrix lam(4, 2);
  for (auto& v : lam.values()) v = rng.uniform(-1, 1);
  GCNCache cache;
  gcn_forward(lin, 0, z, params, ctx, &cache);
  std::vector<double> dtheta(params.size(), 0.0);
  const Matrix dz = gcn_vjp(lin, 0, cache, lam, params, ctx, dtheta);
  const Matrix w = params.view("w");
  const Matrix dz_expect = matmul(transpose(ctx.laplacian), matmul(lam, transpose(w)));
  for (std::size_t i = 0; i < dz.size(); ++i) {
    CHECK(dz.values()[i] == doctest::Approx(dz_expect.values()[i]).epsilon(1e-12));
  }
  const Matrix dw_expect = matmul(transpose(matmul(ctx.laplacian, z)), lam);
  const Matrix dw = read_view(dtheta, params.info("w"));
  for (std::size_t i = 0; i < dw.size(); ++i) {
    CHECK(dw.values()[i] == doctest::Approx(dw_expect.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("affine vjp matches finite differences") {
  RngStream rng(32);
  ParamStore params;
  AffineLayerSpec spec{3, 2, ActivationKind::sigmoid(),
                       {params.add_view("w", 3, 2)},
                       {params.add_view("b", 1, 2)}};
  randomize(params, rng);
  Matrix z(4, 3);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);
  check_vjp(
      params, z,
      [&](const ParamStore& p, const Matrix& zz) { return affine_forward(spec, 0, zz, p, nullptr); },
      [&](const ParamStore& p, const Matrix& zz, const Matrix& lam, std::vector<double>& dth) {
        AffineCache cache;
        affine_forward(spec, 0, zz, p, &cache);
        return affine_vjp(spec, 0, cache, lam, p, dth);
      },
      rng);
}

TEST_CASE("gat vjp matches finite differences") {
  RngStream rng(33);
  ParamStore params;
  GATLayerSpec spec{3, 2, ActivationKind::tanh(), 0.2,
                    {params.add_view("w", 3, 2)}, {params.add_view("a", 1, 4)}};
  randomize(params, rng);
  Graph g(5);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  g.add_edge(0, 4);
  GraphContext ctx(g);
  Matrix z(5, 3);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);
  check_vjp(
      params, z,
      [&](const ParamStore& p, const Matrix& zz) { return gat_forward(spec, 0, zz, p, ctx, nullptr); },
      [&](const ParamStore& p, const Matrix& zz, const Matrix& lam, std::vector<double>& dth) {
        GATCache cache;
        gat_forward(spec, 0, zz, p, ctx, &cache);
        return gat_vjp(spec, 0, cache, lam, p, ctx, dth);
      },
      rng);
}

TEST_CASE("gmde vjp matches finite differences") {
  RngStream rng(34);
  ParamStore params;
  GMDELayerSpec spec;
  spec.dim = 2;
  spec.msg_dim = 3;
  spec.msg_act = ActivationKind::tanh();
  spec.upd_act = ActivationKind::tanh();
  spec.msg_w = {params.add_view("mw", 4, 3)};
  spec.msg_b = {params.add_view("mb", 1, 3)};
  spec.upd_w = {params.add_view("uw", 3, 2)};
  spec.upd_b = {params.add_view("ub", 1, 2)};
  randomize(params, rng);
  GraphContext ctx(path_graph(4));
  Matrix z(4, 2);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);
  check_vjp(
      params, z,
      [&](const ParamStore& p, const Matrix& zz) { return gmde_forward(spec, 0, zz, p, ctx, nullptr); },
      [&](const ParamStore& p, const Matrix& zz, const Matrix& lam, std::vector<double>& dth) {
        GMDECache cache;
        gmde_forward(spec, 0, zz, p, ctx, &cache);
        return gmde_vjp(spec, 0, cache, lam, p, ctx, dth);
      },
      rng);
}

TEST_CASE("gcgru vjp matches finite differences") {
  RngStream rng(35);
  const int n = 3, nx = 2, nz = 2;
  ParamStore params;
  const GCGRUSpec spec = GCGRUSpec::create(params, "j", nx, nz);
  randomize(params, rng);
  GraphContext ctx(path_graph(n));
  Matrix x(n, nx);
  for (auto& v : x.values()) v = rng.uniform(-1, 1);
  Matrix z(n, nz);
  for (auto& v : z.values()) v = rng.uniform(-1, 1);

  Matrix lam(n, nz);
  for (auto& v : lam.values()) v = rng.uniform(-1, 1);
  GCGRUCache cache;
  gcgru_jump(ctx.laplacian, z, x, spec, params, &cache);
  std::vector<double> dtheta(params.size(), 0.0);
  const GCGRUGrad grad = gcgru_vjp(spec, cache, lam, ctx.laplacian, params, dtheta);

  const double eps = 1e-6;
  auto probe = [&](const Matrix& zz, const Matrix& xx) {
    return gcgru_jump(ctx.laplacian, zz, xx, spec, params, nullptr);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < nz; ++j) {
      Matrix zp = z, zm = z;
      zp(i, j) += eps;
      zm(i, j) -= eps;
      const Matrix up = probe(zp, x), dn = probe(zm, x);
      double fd = 0.0;
      for (std::size_t e = 0; e < up.size(); ++e)
        fd += lam.values()[e] * (up.values()[e] - dn.values()[e]) / (2 * eps);
      CHECK(grad.dz(i, j) == doctest::Approx(fd).epsilon(2e-5));
    }
    for (int j = 0; j < nx; ++j) {
      Matrix xp = x, xm = x;
      xp(i, j) += eps;
      xm(i, j) -= eps;
      const Matrix up = probe(z, xp), dn = probe(z, xm);
      double fd = 0.0;
      for (std::size_t e = 0; e < up.size(); ++e)
        fd += lam.values()[e] * (up.values()[e] - dn.values()[e]) / (2 * eps);
      CHECK(grad.dx(i, j) == doctest::Approx(fd).epsilon(2e-5));
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double keep = params.theta()[k];
    params.theta()[k] = keep + eps;
    const Matrix up = probe(z, x);
    params.theta()[k] = keep - eps;
    const Matrix dn = probe(z, x);
    params.theta()[k] = keep;
    double fd = 0.0;
    for (std::size_t e = 0; e < up.size(); ++e)
      fd += lam.values()[e] * (up.values()[e] - dn.values()[e]) / (2 * eps);
    CHECK(dtheta[k] == doctest::Approx(fd).epsilon(2e-5));
  }
}
