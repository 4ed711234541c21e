#include "gde/latent.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

TemporalConvSpec TemporalConvSpec::create(ParamStore& params, const std::string& prefix,
                                          int hidden, int nz) {
  TemporalConvSpec s;
  s.hidden = hidden;
  s.nz = nz;
  s.w1 = params.add_view(prefix + ".conv1.w", s.kernel, hidden);
  s.b1 = params.add_view(prefix + ".conv1.b", 1, hidden);
  s.w2 = params.add_view(prefix + ".conv2.w", s.kernel * hidden, hidden);
  s.b2 = params.add_view(prefix + ".conv2.b", 1, hidden);
  s.head_mu_w = params.add_view(prefix + ".mu.w", hidden, nz);
  s.head_mu_b = params.add_view(prefix + ".mu.b", 1, nz);
  s.head_lv_w = params.add_view(prefix + ".lv.w", hidden, nz);
  s.head_lv_b = params.add_view(prefix + ".lv.b", 1, nz);
  return s;
}

namespace {

/// Forward state of the encoder kept for the reverse pass. Hidden layers are
/// stored as (n, T*hidden) with channel-major inner index.
struct EncoderTape {
  Matrix h1;  // post-ReLU
  Matrix h2;  // post-ReLU
  Matrix e;   // last-step features, n x hidden
};

Matrix causal_conv_forward(const Matrix& in, int in_ch, const Matrix& w, const Matrix& b,
                           int kernel, int hidden) {
  const int n = in.rows();
  const int t_len = in.cols() / in_ch;
  Matrix out(n, t_len * hidden);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < t_len; ++t) {
      for (int c = 0; c < hidden; ++c) {
        double acc = b(0, c);
        for (int k = 0; k < kernel; ++k) {
          const int src = t - (kernel - 1) + k;
          if (src < 0) continue;  // causal zero padding
          for (int cc = 0; cc < in_ch; ++cc) {
            acc += in(i, src * in_ch + cc) * w(k * in_ch + cc, c);
          }
        }
        out(i, t * hidden + c) = acc > 0.0 ? acc : 0.0;  // ReLU
      }
    }
  }
  return out;
}

/// Accumulates dW, dB and returns the input cotangent. `dout` pairs with the
/// post-ReLU output `out`.
Matrix causal_conv_backward(const Matrix& in, int in_ch, const Matrix& w, const Matrix& out,
                            const Matrix& dout, int kernel, int hidden, Matrix& dw, Matrix& db) {
  const int n = in.rows();
  const int t_len = in.cols() / in_ch;
  Matrix din(n, in.cols());
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < t_len; ++t) {
      for (int c = 0; c < hidden; ++c) {
        const double g = dout(i, t * hidden + c);
        if (g == 0.0) continue;
        if (out(i, t * hidden + c) <= 0.0) continue;  // ReLU gate
        db(0, c) += g;
        for (int k = 0; k < kernel; ++k) {
          const int src = t - (kernel - 1) + k;
          if (src < 0) continue;
          for (int cc = 0; cc < in_ch; ++cc) {
            dw(k * in_ch + cc, c) += in(i, src * in_ch + cc) * g;
            din(i, src * in_ch + cc) += w(k * in_ch + cc, c) * g;
          }
        }
      }
    }
  }
  return din;
}

EncoderTape encoder_forward(const TemporalConvSpec& s, const Matrix& history,
                            const ParamStore& params) {
  EncoderTape tape;
  tape.h1 = causal_conv_forward(history, 1, params.view(s.w1), params.view(s.b1), s.kernel,
                                s.hidden);
  tape.h2 = causal_conv_forward(tape.h1, s.hidden, params.view(s.w2), params.view(s.b2), s.kernel,
                                s.hidden);
  const int n = history.rows();
  const int t_len = history.cols();
  tape.e = Matrix(n, s.hidden);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < s.hidden; ++c) tape.e(i, c) = tape.h2(i, (t_len - 1) * s.hidden + c);
  return tape;
}

}  // namespace

PosteriorParams latent_encode(const LatentGDEModel& m, const Matrix& history,
                              const ParamStore& params) {
  if (history.rows() != m.augmented.graph.n) {
    throw std::invalid_argument("latent_encode: history rows " + history.shape_str() +
                                " != augmented node count");
  }
  if (history.cols() < 1) throw std::invalid_argument("latent_encode: empty history");
  const EncoderTape tape = encoder_forward(m.encoder, history, params);
  PosteriorParams post;
  Matrix mu = matmul(tape.e, params.view(m.encoder.head_mu_w));
  Matrix lv = matmul(tape.e, params.view(m.encoder.head_lv_w));
  const Matrix bmu = params.view(m.encoder.head_mu_b);
  const Matrix blv = params.view(m.encoder.head_lv_b);
  for (int i = 0; i < mu.rows(); ++i) {
    for (int j = 0; j < mu.cols(); ++j) {
      mu(i, j) += bmu(0, j);
      lv(i, j) += blv(0, j);
    }
  }
  post.mean = std::move(mu);
  post.logvar = std::move(lv);
  return post;
}

Matrix sample_posterior(const PosteriorParams& post, RngStream& rng) {
  Matrix z = post.mean;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z.values()[i] += std::exp(0.5 * post.logvar.values()[i]) * rng.normal();
  }
  return z;
}

std::vector<Matrix> gsde_decode(const LatentGDEModel& m, const Matrix& z0,
                                const std::vector<double>& t_eval, const BrownianPath& path,
                                const ParamStore& params) {
  auto drift = [&](double t, const Matrix& z) {
    return field_eval(m.drift, t, z, params, m.augmented);
  };
  auto diffusion = [&](double t, const Matrix& z) {
    return m.diffusion_scale * field_eval(m.diffusion, t, z, params, m.augmented);
  };
  std::vector<Matrix> out;
  Matrix z = z0;
  double t = path.t0();
  for (double te : t_eval) {
    if (te > t + 1e-14) {
      Trajectory seg = integrate_euler_heun(drift, diffusion, z, t, te, path, m.sde);
      z = seg.final_state();
      t = te;
    }
    Matrix rows(static_cast<int>(m.output_nodes.size()), z.cols());
    for (std::size_t r = 0; r < m.output_nodes.size(); ++r)
      for (int c = 0; c < z.cols(); ++c) rows(static_cast<int>(r), c) = z(m.output_nodes[r], c);
    out.push_back(std::move(rows));
  }
  return out;
}

std::vector<Matrix> gde_decode_deterministic(const LatentGDEModel& m, const Matrix& z0,
                                             const std::vector<double>& t_eval,
                                             const ParamStore& params) {
  auto drift = [&](double t, const Matrix& z) {
    return field_eval(m.drift, t, z, params, m.augmented);
  };
  SolverConfig cfg = m.sde;
  cfg.method = SolverMethod::rk4;
  std::vector<Matrix> out;
  Matrix z = z0;
  double t = 0.0;
  for (double te : t_eval) {
    if (te > t + 1e-14) {
      z = integrate(drift, z, t, te, cfg).final_state();
      t = te;
    }
    Matrix rows(static_cast<int>(m.output_nodes.size()), z.cols());
    for (std::size_t r = 0; r < m.output_nodes.size(); ++r)
      for (int c = 0; c < z.cols(); ++c) rows(static_cast<int>(r), c) = z(m.output_nodes[r], c);
    out.push_back(std::move(rows));
  }
  return out;
}

AugmentedGraph repressilatorAugmentedGraphImpl() {
  // species: P1 P2 P3 M1 M2 M3 at 0..5
  // latent: transcription 6..8, translation 9..11,
  //         mRNA degradation 12..14, protein degradation 15..17
  Graph g(18);
  for (int i = 0; i < 3; ++i) {
    const int t = 6 + i, l = 9 + i, dm = 12 + i, dp = 15 + i;
    g.add_edge(t, 3 + i);            // transcription produces mRNA i
    g.add_edge(t, (i + 2) % 3);      // ... and is silenced by protein i-1
    g.add_edge(l, 3 + i);            // translation reads mRNA i
    g.add_edge(l, i);                // ... and produces protein i
    g.add_edge(dm, 3 + i);           // degradations consume one species each
    g.add_edge(dp, i);
  }
  AugmentedGraph out;
  out.graph = std::move(g);
  out.output_nodes = {0, 1, 2, 3, 4, 5};
  return out;
}

AugmentedGraph repressilator_augmented_graph() { return repressilatorAugmentedGraphImpl(); }

LatentGDEModel make_repressilator_model(ParamStore& params, const std::string& prefix) {
  AugmentedGraph aug = repressilator_augmented_graph();
  LatentGDEModel m;
  m.augmented = GraphContext(aug.graph);
  m.output_nodes = aug.output_nodes;

  auto build_field = [&](const std::string& tag, const ActivationKind& last_act) {
    FieldSpec spec;
    spec.layers.push_back(
        GCNLayerSpec{1, 3, ActivationKind::tanh(), {params.add_view(prefix + tag + ".gcn1.w", 1, 3)}});
    spec.layers.push_back(GATLayerSpec{3, 3, ActivationKind::tanh(), 0.2,
                                       {params.add_view(prefix + tag + ".gat.w", 3, 3)},
                                       {params.add_view(prefix + tag + ".gat.a", 1, 6)}});
    spec.layers.push_back(
        GCNLayerSpec{3, 1, last_act, {params.add_view(prefix + tag + ".gcn2.w", 3, 1)}});
    spec.validate();
    return spec;
  };
  m.drift = build_field(".drift", ActivationKind::identity());
  m.diffusion = build_field(".diffusion", ActivationKind::sigmoid());
  m.encoder = TemporalConvSpec::create(params, prefix + ".encoder", 16, 1);

  m.sigma_obs = 0.1;
  m.sde.method = SolverMethod::euler_heun;
  m.sde.h = 1.0 / 64.0;
  m.sde.rtol = 1e-3;
  m.sde.atol = 1e-3;
  return m;
}

void latent_encoder_backward(const TemporalConvSpec& s, const Matrix& history,
                             const Matrix& dmean, const Matrix& dlogvar, const ParamStore& params,
                             std::vector<double>& dtheta) {
  const EncoderTape tape = encoder_forward(s, history, params);
  const int n = history.rows();
  const int t_len = history.cols();

  // heads
  accumulate_view(dtheta, params.info(s.head_mu_w), matmul(transpose(tape.e), dmean));
  accumulate_view(dtheta, params.info(s.head_lv_w), matmul(transpose(tape.e), dlogvar));
  Matrix dbmu(1, s.nz), dblv(1, s.nz);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < s.nz; ++j) {
      dbmu(0, j) += dmean(i, j);
      dblv(0, j) += dlogvar(i, j);
    }
  }
  accumulate_view(dtheta, params.info(s.head_mu_b), dbmu);
  accumulate_view(dtheta, params.info(s.head_lv_b), dblv);
  Matrix de = matmul(dmean, transpose(params.view(s.head_mu_w)));
  de += matmul(dlogvar, transpose(params.view(s.head_lv_w)));

  // last time step carries the cotangent into the conv stack
  Matrix dh2(n, t_len * s.hidden);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < s.hidden; ++c) dh2(i, (t_len - 1) * s.hidden + c) = de(i, c);

  Matrix dw2(s.kernel * s.hidden, s.hidden), db2(1, s.hidden);
  const Matrix dh1 = causal_conv_backward(tape.h1, s.hidden, params.view(s.w2), tape.h2, dh2,
                                          s.kernel, s.hidden, dw2, db2);
  accumulate_view(dtheta, params.info(s.w2), dw2);
  accumulate_view(dtheta, params.info(s.b2), db2);

  Matrix dw1(s.kernel, s.hidden), db1(1, s.hidden);
  causal_conv_backward(history, 1, params.view(s.w1), tape.h1, dh1, s.kernel, s.hidden, dw1, db1);
  accumulate_view(dtheta, params.info(s.w1), dw1);
  accumulate_view(dtheta, params.info(s.b1), db1);
}

double kl_to_standard_normal(const PosteriorParams& post) {
  double kl = 0.0;
  for (std::size_t i = 0; i < post.mean.size(); ++i) {
    const double mu = post.mean.values()[i];
    const double lv = post.logvar.values()[i];
    kl += 0.5 * (mu * mu + std::exp(lv) - lv - 1.0);
  }
  return kl;
}

double elbo_loss(const std::vector<Matrix>& predictions, const std::vector<Matrix>& targets,
                 const PosteriorParams& post, double sigma_obs) {
  if (!(sigma_obs > 0.0)) throw std::invalid_argument("elbo_loss: sigma_obs must be positive");
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("elbo_loss: prediction/target count mismatch");
  }
  double nll = 0.0;
  const double var = sigma_obs * sigma_obs;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    if (!predictions[k].same_shape(targets[k])) {
      throw std::invalid_argument("elbo_loss: shape mismatch at step " + std::to_string(k));
    }
    const double d = static_cast<double>(predictions[k].size());
    nll += 0.5 * d * std::log(2.0 * M_PI * var);
    for (std::size_t i = 0; i < predictions[k].size(); ++i) {
      const double e = predictions[k].values()[i] - targets[k].values()[i];
      nll += 0.5 * e * e / var;
    }
  }
  return nll + kl_to_standard_normal(post);
}

// ---------------------------------------------------------------------------
// Unrolled decode + reverse pass
// ---------------------------------------------------------------------------

GsdeUnrolledRun gsde_decode_unrolled(const LatentGDEModel& m, const Matrix& z0,
                                     const std::vector<double>& t_eval, int substeps,
                                     const BrownianPath& path, const ParamStore& params) {
  if (substeps < 1) throw std::invalid_argument("gsde_decode_unrolled: substeps must be >= 1");
  auto drift = [&](double t, const Matrix& z) {
    return field_eval(m.drift, t, z, params, m.augmented);
  };
  auto diffusion = [&](double t, const Matrix& z) {
    return m.diffusion_scale * field_eval(m.diffusion, t, z, params, m.augmented);
  };
  GsdeUnrolledRun run;
  run.times.push_back(path.t0());
  run.states.push_back(z0);
  double t = path.t0();
  Matrix z = z0;
  for (double te : t_eval) {
    if (te > t + 1e-14) {
      const double h = (te - t) / substeps;
      for (int s = 0; s < substeps; ++s) {
        const double ta = run.times.back();
        const double tb = (s + 1 == substeps) ? te : t + (s + 1) * h;
        const Matrix db = path.increment(ta, tb);
        const Matrix f0 = drift(ta, z);
        const Matrix g0 = diffusion(ta, z);
        Matrix pred = z;
        axpy(tb - ta, f0, pred);
        pred += hadamard(g0, db);
        const Matrix f1 = drift(tb, pred);
        const Matrix g1 = diffusion(tb, pred);
        Matrix next = z;
        axpy(0.5 * (tb - ta), f0 + f1, next);
        next += hadamard(0.5 * (g0 + g1), db);
        require_finite(next, "gsde_decode_unrolled");
        run.db.push_back(db);
        run.times.push_back(tb);
        run.states.push_back(next);
        z = std::move(next);
      }
      t = te;
    }
    run.eval_index.push_back(run.states.size() - 1);
  }
  return run;
}

Matrix gsde_unrolled_backward(const LatentGDEModel& m, const GsdeUnrolledRun& run,
                              const std::vector<Matrix>& dl_dy, const ParamStore& params,
                              std::vector<double>& dtheta) {
  if (dl_dy.size() != run.eval_index.size()) {
    throw std::invalid_argument("gsde_unrolled_backward: cotangent count mismatch");
  }
  const int n = run.states[0].rows();
  const int nz = run.states[0].cols();
  Matrix lambda(n, nz);

  auto inject = [&](std::size_t state_idx, Matrix& lam) {
    for (std::size_t k = 0; k < run.eval_index.size(); ++k) {
      if (run.eval_index[k] == state_idx) {
        for (std::size_t r = 0; r < m.output_nodes.size(); ++r)
          for (int c = 0; c < nz; ++c) lam(m.output_nodes[r], c) += dl_dy[k](static_cast<int>(r), c);
      }
    }
  };

  inject(run.states.size() - 1, lambda);
  for (std::size_t i = run.db.size(); i-- > 0;) {
    const double ta = run.times[i];
    const double tb = run.times[i + 1];
    const double h = tb - ta;
    const Matrix& z = run.states[i];
    const Matrix& db = run.db[i];

    // recompute the predictor state
    const Matrix f0 = field_eval(m.drift, ta, z, params, m.augmented);
    const Matrix g0 = m.diffusion_scale * field_eval(m.diffusion, ta, z, params, m.augmented);
    Matrix pred = z;
    axpy(h, f0, pred);
    pred += hadamard(g0, db);

    // Z+ = Z + (f0 + f1(pred)) h/2 + (g0 + g1(pred))/2 (.) dB
    const Matrix half_db_lambda = hadamard(0.5 * lambda, db);
    FieldGrad f1g = field_vjp(m.drift, tb, pred, (0.5 * h) * lambda, params, m.augmented);
    FieldGrad g1g = field_vjp(m.diffusion, tb, pred, m.diffusion_scale * half_db_lambda, params,
                              m.augmented);
    const Matrix lam_pred = f1g.dz + g1g.dz;

    Matrix drift_cot = (0.5 * h) * lambda;
    axpy(h, lam_pred, drift_cot);
    FieldGrad fg = field_vjp(m.drift, ta, z, drift_cot, params, m.augmented);

    Matrix diff_cot = half_db_lambda + hadamard(lam_pred, db);
    for (auto& v : diff_cot.values()) v *= m.diffusion_scale;
    FieldGrad gg = field_vjp(m.diffusion, ta, z, diff_cot, params, m.augmented);

    for (std::size_t j = 0; j < dtheta.size(); ++j) {
      dtheta[j] += f1g.dtheta[j] + g1g.dtheta[j] + fg.dtheta[j] + gg.dtheta[j];
    }
    Matrix next_lambda = lambda;
    next_lambda += lam_pred;
    next_lambda += fg.dz;
    next_lambda += gg.dz;
    lambda = std::move(next_lambda);
    inject(i, lambda);
  }
  return lambda;
}

double latent_elbo_grad(const LatentGDEModel& m, const Matrix& history,
                        const std::vector<double>& t_eval, const std::vector<Matrix>& targets,
                        int substeps, const BrownianPath& path, RngStream& sample_rng,
                        const ParamStore& params, std::vector<double>& dtheta) {
  const PosteriorParams post = latent_encode(m, history, params);

  // reparametrized sample with stored noise
  Matrix eps(post.mean.rows(), post.mean.cols());
  for (auto& v : eps.values()) v = sample_rng.normal();
  Matrix z0 = post.mean;
  for (std::size_t i = 0; i < z0.size(); ++i) {
    z0.values()[i] += std::exp(0.5 * post.logvar.values()[i]) * eps.values()[i];
  }

  const GsdeUnrolledRun run = gsde_decode_unrolled(m, z0, t_eval, substeps, path, params);

  std::vector<Matrix> preds;
  for (std::size_t idx : run.eval_index) {
    Matrix rows(static_cast<int>(m.output_nodes.size()), z0.cols());
    for (std::size_t r = 0; r < m.output_nodes.size(); ++r)
      for (int c = 0; c < z0.cols(); ++c) rows(static_cast<int>(r), c) =
          run.states[idx](m.output_nodes[r], c);
    preds.push_back(std::move(rows));
  }
  const double loss = elbo_loss(preds, targets, post, m.sigma_obs);

  const double inv_var = 1.0 / (m.sigma_obs * m.sigma_obs);
  std::vector<Matrix> dl_dy;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    dl_dy.push_back(inv_var * (preds[k] - targets[k]));
  }
  const Matrix dz0 = gsde_unrolled_backward(m, run, dl_dy, params, dtheta);

  // reparametrization + KL cotangents on the posterior parameters
  Matrix dmean = dz0;
  Matrix dlogvar(dz0.rows(), dz0.cols());
  for (std::size_t i = 0; i < dz0.size(); ++i) {
    dlogvar.values()[i] =
        dz0.values()[i] * eps.values()[i] * 0.5 * std::exp(0.5 * post.logvar.values()[i]);
    dmean.values()[i] += post.mean.values()[i];  // dKL/dmu
    dlogvar.values()[i] += 0.5 * (std::exp(post.logvar.values()[i]) - 1.0);  // dKL/dlogvar
  }

  latent_encoder_backward(m.encoder, history, dmean, dlogvar, params, dtheta);
  return loss;
}

}  // namespace gde
