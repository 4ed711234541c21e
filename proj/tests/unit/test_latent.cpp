#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "gde/adjoint.hpp"
#include "gde/latent.hpp"

using namespace gde;

namespace {

/// 3-node toy latent model: outputs {0,1}, one latent node bridging them.
LatentGDEModel tiny_model(ParamStore& params) {
  LatentGDEModel m;
  Graph g(3);
  g.add_edge(0, 2);
  g.add_edge(1, 2);
  m.augmented = GraphContext(g);
  m.output_nodes = {0, 1};

  FieldSpec drift;
  drift.layers.push_back(GCNLayerSpec{1, 2, ActivationKind::tanh(), {params.add_view("drift.w0", 1, 2)}});
  drift.layers.push_back(GCNLayerSpec{2, 1, ActivationKind::identity(), {params.add_view("drift.w1", 2, 1)}});
  m.drift = drift;

  FieldSpec diff;
  diff.layers.push_back(GCNLayerSpec{1, 1, ActivationKind::sigmoid(), {params.add_view("diff.w0", 1, 1)}});
  m.diffusion = diff;

  m.encoder = TemporalConvSpec::create(params, "enc", 4, 1);
  m.sigma_obs = 0.5;
  m.sde.method = SolverMethod::euler_heun;
  m.sde.h = 0.05;
  return m;
}

}  // namespace

TEST_CASE("collapsed posterior samples the mean; fixed seed replays") {
  PosteriorParams post{Matrix(2, 1, {0.7, -0.3}), Matrix::constant(2, 1, -40.0)};
  RngStream rng(5);
  const Matrix z = sample_posterior(post, rng);
  CHECK(z(0, 0) == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(z(1, 0) == doctest::Approx(-0.3).epsilon(1e-8));

  RngStream a(9, 1), b(9, 1);
  PosteriorParams wide{Matrix(2, 1, {0.0, 0.0}), Matrix(2, 1, {0.0, 0.0})};
  const Matrix s1 = sample_posterior(wide, a);
  const Matrix s2 = sample_posterior(wide, b);
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1.values()[i] == s2.values()[i]);
}

TEST_CASE("standard-normal sampling statistics") {
  PosteriorParams post{Matrix(1, 1, {0.0}), Matrix(1, 1, {0.0})};
  RngStream rng(31);
  double sum = 0, sq = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double v = sample_posterior(post, rng)(0, 0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.03);
  CHECK(sq / n - mean * mean == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("encoder output shape and determinism") {
  ParamStore params;
  LatentGDEModel m = tiny_model(params);
  RngStream rng(3);
  params.init_all_uniform_scaled(rng);
  Matrix history(3, 7);
  for (auto& v : history.values()) v = rng.uniform(-1, 1);
  const PosteriorParams a = latent_encode(m, history, params);
  const PosteriorParams b = latent_encode(m, history, params);
  CHECK(a.mean.rows() == 3);
  CHECK(a.mean.cols() == 1);
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    CHECK(a.mean.values()[i] == b.mean.values()[i]);
    CHECK(a.logvar.values()[i] == b.logvar.values()[i]);
  }
}

TEST_CASE("near-zero diffusion reproduces the deterministic decode") {
  ParamStore params;
  LatentGDEModel m = tiny_model(params);
  RngStream rng(11);
  params.init_all_uniform_scaled(rng);
  // drive the diffusion net's pre-sigmoid strongly negative via an affine
  // bias layer appended to the stack
  FieldSpec diff;
  diff.layers.push_back(GCNLayerSpec{1, 1, ActivationKind::identity(), {"diff.w0"}});
  AffineLayerSpec squash{1, 1, ActivationKind::sigmoid(),
                         {params.add_view("diff.squash.w", 1, 1)},
                         {params.add_view("diff.squash.b", 1, 1)}};
  params.set_view("diff.squash.w", Matrix(1, 1, {0.0}));
  params.set_view("diff.squash.b", Matrix(1, 1, {-60.0}));
  diff.layers.push_back(squash);
  m.diffusion = diff;
  m.sde.h = 0.01;

  const Matrix z0(3, 1, {0.4, -0.2, 0.9});
  BrownianPath path(RngStream(21, 0), 3, 1, 0.0, 1.0);
  const auto stochastic = gsde_decode(m, z0, {0.5, 1.0}, path, params);
  const auto deterministic = gde_decode_deterministic(m, z0, {0.5, 1.0}, params);
  for (std::size_t k = 0; k < stochastic.size(); ++k) {
    for (std::size_t i = 0; i < stochastic[k].size(); ++i) {
      CHECK(stochastic[k].values()[i] ==
            doctest::Approx(deterministic[k].values()[i]).epsilon(1e-3));
    }
  }
}

TEST_CASE("same Brownian path gives identical decodes") {
  ParamStore params;
  LatentGDEModel m = tiny_model(params);
  RngStream rng(13);
  params.init_all_uniform_scaled(rng);
  const Matrix z0(3, 1, {0.1, 0.2, 0.3});
  BrownianPath path(RngStream(77, 3), 3, 1, 0.0, 1.0);
  const auto a = gsde_decode(m, z0, {0.3, 0.7, 1.0}, path, params);
  const auto b = gsde_decode(m, z0, {0.3, 0.7, 1.0}, path, params);
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k].size(); ++i) {
      CHECK(a[k].values()[i] == b[k].values()[i]);
    }
  }
}

TEST_CASE("ensemble spread grows monotonically with the diffusion scale") {
  ParamStore params;
  LatentGDEModel m = tiny_model(params);
  RngStream rng(17);
  params.init_all_uniform_scaled(rng);
  const Matrix z0(3, 1, {0.5, 0.5, 0.5});
  double prev = -1.0;
  for (double scale : {0.1, 0.5, 1.0}) {
    m.diffusion_scale = scale;
    double sum = 0, sq = 0;
    const int paths = 100;
    for (int p = 0; p < paths; ++p) {
      BrownianPath path(RngStream(900, static_cast<std::uint64_t>(p)), 3, 1, 0.0, 1.0);
      const double v = gsde_decode(m, z0, {1.0}, path, params)[0](0, 0);
      sum += v;
      sq += v * v;
    }
    const double var = sq / paths - (sum / paths) * (sum / paths);
    CHECK(var > prev);
    prev = var;
  }
}

TEST_CASE("elbo closed forms") {
  // KL = 0 at the prior
  PosteriorParams prior{Matrix(4, 1), Matrix(4, 1)};
  CHECK(kl_to_standard_normal(prior) == doctest::Approx(0.0).epsilon(1e-15));

  // mu=1, logvar=0 (sigma=1): KL = 1/2
  PosteriorParams shifted{Matrix(1, 1, {1.0}), Matrix(1, 1, {0.0})};
  CHECK(kl_to_standard_normal(shifted) == doctest::Approx(0.5).epsilon(1e-12));

  // perfect predictions, sigma = 1: loss = (d/2) ln(2 pi) and the
  // log-likelihood term is its negation
  const std::vector<Matrix> preds = {Matrix(2, 1, {0.3, -0.4}), Matrix(2, 1, {0.1, 0.2})};
  const double loss = elbo_loss(preds, preds, prior, 1.0);
  const double d = 4.0;
  CHECK(loss == doctest::Approx(0.5 * d * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("KL is nonnegative and vanishes only at the prior") {
  RngStream rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    PosteriorParams post{Matrix(3, 2), Matrix(3, 2)};
    for (auto& v : post.mean.values()) v = rng.uniform(-2, 2);
    for (auto& v : post.logvar.values()) v = rng.uniform(-2, 2);
    const double kl = kl_to_standard_normal(post);
    CHECK(kl >= 0.0);
    double dev = 0;
    for (double v : post.mean.values()) dev += std::abs(v);
    for (double v : post.logvar.values()) dev += std::abs(v);
    if (dev > 1e-3) CHECK(kl > 0.0);
  }
}

TEST_CASE("full latent gradient matches finite differences") {
  ParamStore params;
  LatentGDEModel m = tiny_model(params);
  RngStream rng(29);
  params.init_all_uniform_scaled(rng);
  m.sigma_obs = 0.8;

  Matrix history(3, 7);
  for (auto& v : history.values()) v = rng.uniform(0, 1);
  for (int t = 0; t < 7; ++t) history(2, t) = 0.0;  // latent node carries no series

  const std::vector<double> t_eval = {0.5, 1.0};
  const std::vector<Matrix> targets = {Matrix(2, 1, {0.4, 0.6}), Matrix(2, 1, {0.2, 0.8})};
  BrownianPath path(RngStream(41, 2), 3, 1, 0.0, 1.0);

  std::vector<double> dtheta(params.size(), 0.0);
  RngStream sampler(55, 1);
  const double loss0 =
      latent_elbo_grad(m, history, t_eval, targets, 3, path, sampler, params, dtheta);
  CHECK(std::isfinite(loss0));

  const auto loss_fn = [&](const std::vector<double>& th) {
    ParamStore probe = params;
    probe.theta() = th;
    std::vector<double> scratch(probe.size(), 0.0);
    RngStream replay(55, 1);  // identical sampling noise every probe
    return latent_elbo_grad(m, history, t_eval, targets, 3, path, replay, probe, scratch);
  };
  const auto fd = finite_difference_grad(loss_fn, params.theta(), 1e-5);
  CHECK(max_rel_error(dtheta, fd) < 1e-4);
}
