#include "gde/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

GraphContext::GraphContext(Graph g) : graph(std::move(g)) {
  laplacian = normalized_laplacian(graph);
  nbrs.resize(graph.n);
  for (int v = 0; v < graph.n; ++v) nbrs[v] = graph.neighbors(v);
}

const std::string& pick_view(const std::vector<std::string>& names, int slab) {
  if (names.size() == 1) return names[0];
  return names.at(static_cast<std::size_t>(slab));
}

int layer_in_dim(const LayerSpec& spec) {
  return std::visit([](const auto& s) -> int {
    using T = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<T, GMDELayerSpec>) return s.dim;
    else return s.in_dim;
  }, spec);
}

int layer_out_dim(const LayerSpec& spec) {
  return std::visit([](const auto& s) -> int {
    using T = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<T, GMDELayerSpec>) return s.dim;
    else return s.out_dim;
  }, spec);
}

namespace {

Matrix colsum(const Matrix& m) {
  Matrix out(1, m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(0, j) += m(i, j);
  return out;
}

void add_row_broadcast(Matrix& m, const Matrix& row) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) += row(0, j);
}

}  // namespace

// ---------------------------------------------------------------------------
// GCN
// ---------------------------------------------------------------------------

Matrix gcn_forward(const GCNLayerSpec& spec, int slab, const Matrix& z, const ParamStore& params,
                   const GraphContext& ctx, GCNCache* cache) {
  if (z.cols() != spec.in_dim) {
    throw std::invalid_argument("gcn_forward: input width " + z.shape_str() + " != in_dim " +
                                std::to_string(spec.in_dim));
  }
  const Matrix w = params.view(pick_view(spec.weight, slab));
  Matrix lz = matmul(ctx.laplacian, z);
  ActivationResult act = activation(spec.act, matmul(lz, w));
  Matrix out = act.value;
  if (cache) {
    cache->lz = std::move(lz);
    cache->act = std::move(act);
  }
  return out;
}

Matrix gcn_vjp(const GCNLayerSpec& spec, int slab, const GCNCache& cache, const Matrix& lambda,
               const ParamStore& params, const GraphContext& ctx, std::vector<double>& dtheta) {
  const std::string& wname = pick_view(spec.weight, slab);
  const Matrix w = params.view(wname);
  const Matrix du = activation_vjp(spec.act, cache.act, lambda);
  accumulate_view(dtheta, params.info(wname), matmul(transpose(cache.lz), du));
  const Matrix dlz = matmul(du, transpose(w));
  return matmul(transpose(ctx.laplacian), dlz);
}

// ---------------------------------------------------------------------------
// Affine
// ---------------------------------------------------------------------------

Matrix affine_forward(const AffineLayerSpec& spec, int slab, const Matrix& z,
                      const ParamStore& params, AffineCache* cache) {
  if (z.cols() != spec.in_dim) {
    throw std::invalid_argument("affine_forward: input width " + z.shape_str() + " != in_dim " +
                                std::to_string(spec.in_dim));
  }
  const Matrix w = params.view(pick_view(spec.weight, slab));
  Matrix u = matmul(z, w);
  if (spec.has_bias()) add_row_broadcast(u, params.view(pick_view(spec.bias, slab)));
  ActivationResult act = activation(spec.act, u);
  Matrix out = act.value;
  if (cache) {
    cache->in = z;
    cache->act = std::move(act);
  }
  return out;
}

Matrix affine_vjp(const AffineLayerSpec& spec, int slab, const AffineCache& cache,
                  const Matrix& lambda, const ParamStore& params, std::vector<double>& dtheta) {
  const std::string& wname = pick_view(spec.weight, slab);
  const Matrix w = params.view(wname);
  const Matrix du = activation_vjp(spec.act, cache.act, lambda);
  accumulate_view(dtheta, params.info(wname), matmul(transpose(cache.in), du));
  if (spec.has_bias()) {
    accumulate_view(dtheta, params.info(pick_view(spec.bias, slab)), colsum(du));
  }
  return matmul(du, transpose(w));
}

// ---------------------------------------------------------------------------
// GAT (single head, concatenated scoring, leaky relu on logits)
// ---------------------------------------------------------------------------

Matrix gat_forward(const GATLayerSpec& spec, int slab, const Matrix& z, const ParamStore& params,
                   const GraphContext& ctx, GATCache* cache) {
  if (z.cols() != spec.in_dim) {
    throw std::invalid_argument("gat_forward: input width " + z.shape_str() + " != in_dim " +
                                std::to_string(spec.in_dim));
  }
  const int n = z.rows();
  const int out_dim = spec.out_dim;
  const Matrix w = params.view(pick_view(spec.weight, slab));
  const Matrix a = params.view(pick_view(spec.attn, slab));  // 1 x 2*out_dim
  const Matrix h = matmul(z, w);

  // score(v,u) = leaky(a1 . h_v + a2 . h_u)
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (int v = 0; v < n; ++v) {
    for (int j = 0; j < out_dim; ++j) {
      c[v] += a(0, j) * h(v, j);
      d[v] += a(0, out_dim + j) * h(v, j);
    }
  }
  Matrix alpha(n, n);
  Matrix p(n, out_dim);
  for (int v = 0; v < n; ++v) {
    std::vector<int> set = ctx.nbrs[v];
    set.push_back(v);
    double mx = -1e300;
    std::vector<double> logits(set.size());
    for (std::size_t s = 0; s < set.size(); ++s) {
      const double raw = c[v] + d[set[s]];
      logits[s] = raw > 0.0 ? raw : spec.leaky_slope * raw;
      mx = std::max(mx, logits[s]);
    }
    double denom = 0.0;
    for (double& l : logits) {
      l = std::exp(l - mx);
      denom += l;
    }
    for (std::size_t s = 0; s < set.size(); ++s) {
      const double av = logits[s] / denom;
      alpha(v, set[s]) = av;
      for (int j = 0; j < out_dim; ++j) p(v, j) += av * h(set[s], j);
    }
  }
  ActivationResult act = activation(spec.act, p);
  Matrix out = act.value;
  if (cache) {
    cache->h = h;
    cache->in = z;
    cache->c = std::move(c);
    cache->d = std::move(d);
    cache->alpha = alpha;
    cache->act = std::move(act);
  }
  return out;
}

Matrix gat_vjp(const GATLayerSpec& spec, int slab, const GATCache& cache, const Matrix& lambda,
               const ParamStore& params, const GraphContext& ctx, std::vector<double>& dtheta) {
  const int n = cache.in.rows();
  const int out_dim = spec.out_dim;
  const std::string& wname = pick_view(spec.weight, slab);
  const std::string& aname = pick_view(spec.attn, slab);
  const Matrix w = params.view(wname);
  const Matrix a = params.view(aname);

  const Matrix dp = activation_vjp(spec.act, cache.act, lambda);

  Matrix dh(n, out_dim);
  std::vector<double> dc(n, 0.0), dd(n, 0.0);
  for (int v = 0; v < n; ++v) {
    std::vector<int> set = ctx.nbrs[v];
    set.push_back(v);
    // d alpha_vu = dp_v . h_u, then softmax VJP to the logits
    std::vector<double> dalpha(set.size(), 0.0);
    double inner = 0.0;
    for (std::size_t s = 0; s < set.size(); ++s) {
      const int u = set[s];
      double g = 0.0;
      for (int j = 0; j < out_dim; ++j) g += dp(v, j) * cache.h(u, j);
      dalpha[s] = g;
      inner += g * cache.alpha(v, u);
      for (int j = 0; j < out_dim; ++j) dh(u, j) += cache.alpha(v, u) * dp(v, j);
    }
    for (std::size_t s = 0; s < set.size(); ++s) {
      const int u = set[s];
      const double de = cache.alpha(v, u) * (dalpha[s] - inner);
      const double raw = cache.c[v] + cache.d[u];
      const double dpre = de * (raw > 0.0 ? 1.0 : spec.leaky_slope);
      dc[v] += dpre;
      dd[u] += dpre;
    }
  }
  // c_v = a1 . h_v and d_u = a2 . h_u
  Matrix da(1, 2 * out_dim);
  for (int v = 0; v < n; ++v) {
    for (int j = 0; j < out_dim; ++j) {
      da(0, j) += dc[v] * cache.h(v, j);
      da(0, out_dim + j) += dd[v] * cache.h(v, j);
      dh(v, j) += dc[v] * a(0, j) + dd[v] * a(0, out_dim + j);
    }
  }
  accumulate_view(dtheta, params.info(aname), da);
  accumulate_view(dtheta, params.info(wname), matmul(transpose(cache.in), dh));
  return matmul(dh, transpose(w));
}

// ---------------------------------------------------------------------------
// GMDE message passing field
// ---------------------------------------------------------------------------

Matrix gmde_forward(const GMDELayerSpec& spec, int slab, const Matrix& z, const ParamStore& params,
                    const GraphContext& ctx, GMDECache* cache) {
  if (z.cols() != spec.dim) {
    throw std::invalid_argument("gmde_forward: input width " + z.shape_str() + " != dim " +
                                std::to_string(spec.dim));
  }
  const int n = z.rows();
  const Matrix mw = params.view(pick_view(spec.msg_w, slab));
  const Matrix mb = params.view(pick_view(spec.msg_b, slab));
  const Matrix uw = params.view(pick_view(spec.upd_w, slab));
  const Matrix ub = params.view(pick_view(spec.upd_b, slab));

  Matrix s(n, spec.msg_dim);
  std::vector<GMDEEdgeCache> edges;
  for (int v = 0; v < n; ++v) {
    for (int u : ctx.nbrs[v]) {
      Matrix pair(1, 2 * spec.dim);
      for (int j = 0; j < spec.dim; ++j) {
        pair(0, j) = z(v, j);
        pair(0, spec.dim + j) = z(u, j);
      }
      Matrix um = matmul(pair, mw);
      add_row_broadcast(um, mb);
      ActivationResult msg = activation(spec.msg_act, um);
      for (int j = 0; j < spec.msg_dim; ++j) s(v, j) += msg.value(0, j);
      if (cache) edges.push_back({v, u, std::move(msg)});
    }
  }
  Matrix ug = matmul(s, uw);
  add_row_broadcast(ug, ub);
  ActivationResult act = activation(spec.upd_act, ug);
  Matrix out = act.value;
  if (cache) {
    cache->in = z;
    cache->edges = std::move(edges);
    cache->s = std::move(s);
    cache->act = std::move(act);
  }
  return out;
}

Matrix gmde_vjp(const GMDELayerSpec& spec, int slab, const GMDECache& cache, const Matrix& lambda,
                const ParamStore& params, const GraphContext& ctx, std::vector<double>& dtheta) {
  (void)ctx;
  const int n = cache.in.rows();
  const Matrix mw = params.view(pick_view(spec.msg_w, slab));
  const Matrix uw = params.view(pick_view(spec.upd_w, slab));

  const Matrix dug = activation_vjp(spec.upd_act, cache.act, lambda);
  accumulate_view(dtheta, params.info(pick_view(spec.upd_w, slab)),
                  matmul(transpose(cache.s), dug));
  accumulate_view(dtheta, params.info(pick_view(spec.upd_b, slab)), colsum(dug));
  const Matrix ds = matmul(dug, transpose(uw));

  Matrix dz(n, spec.dim);
  Matrix dmw(2 * spec.dim, spec.msg_dim);
  Matrix dmb(1, spec.msg_dim);
  for (const auto& e : cache.edges) {
    Matrix dm(1, spec.msg_dim);
    for (int j = 0; j < spec.msg_dim; ++j) dm(0, j) = ds(e.v, j);
    const Matrix dum = activation_vjp(spec.msg_act, e.msg, dm);
    for (int j = 0; j < spec.msg_dim; ++j) dmb(0, j) += dum(0, j);
    // pair = [z_v | z_u]
    for (int i = 0; i < spec.dim; ++i) {
      double accv = 0.0, accu = 0.0;
      for (int j = 0; j < spec.msg_dim; ++j) {
        dmw(i, j) += cache.in(e.v, i) * dum(0, j);
        dmw(spec.dim + i, j) += cache.in(e.u, i) * dum(0, j);
        accv += dum(0, j) * mw(i, j);
        accu += dum(0, j) * mw(spec.dim + i, j);
      }
      dz(e.v, i) += accv;
      dz(e.u, i) += accu;
    }
  }
  accumulate_view(dtheta, params.info(pick_view(spec.msg_w, slab)), dmw);
  accumulate_view(dtheta, params.info(pick_view(spec.msg_b, slab)), dmb);
  return dz;
}

// ---------------------------------------------------------------------------
// GCGRU
// ---------------------------------------------------------------------------

GCGRUSpec GCGRUSpec::create(ParamStore& params, const std::string& prefix, int nx, int nz) {
  GCGRUSpec s;
  s.nx = nx;
  s.nz = nz;
  s.w_xz = params.add_view(prefix + ".w_xz", nx, nz);
  s.w_hz = params.add_view(prefix + ".w_hz", nz, nz);
  s.w_xr = params.add_view(prefix + ".w_xr", nx, nz);
  s.w_hr = params.add_view(prefix + ".w_hr", nz, nz);
  s.w_xh = params.add_view(prefix + ".w_xh", nx, nz);
  s.w_hh = params.add_view(prefix + ".w_hh", nz, nz);
  return s;
}

Matrix gcgru_jump(const Matrix& laplacian, const Matrix& z, const Matrix& x, const GCGRUSpec& spec,
                  const ParamStore& params, GCGRUCache* cache) {
  if (x.cols() != spec.nx || z.cols() != spec.nz || x.rows() != z.rows()) {
    throw std::invalid_argument("gcgru_jump: shapes X " + x.shape_str() + ", Z " + z.shape_str() +
                                " incompatible with (nx=" + std::to_string(spec.nx) +
                                ", nz=" + std::to_string(spec.nz) + ")");
  }
  const Matrix lx = matmul(laplacian, x);
  const Matrix lz = matmul(laplacian, z);
  const ActivationKind sig = ActivationKind::sigmoid();
  const Matrix h = activation(sig, matmul(lx, params.view(spec.w_xz)) +
                                       matmul(lz, params.view(spec.w_hz))).value;
  const Matrix r = activation(sig, matmul(lx, params.view(spec.w_xr)) +
                                       matmul(lz, params.view(spec.w_hr))).value;
  const Matrix q = hadamard(r, z);
  const Matrix lq = matmul(laplacian, q);
  const Matrix z_tilde = activation(ActivationKind::tanh(), matmul(lx, params.view(spec.w_xh)) +
                                                                matmul(lq, params.view(spec.w_hh)))
                             .value;
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] = h.values()[i] * z.values()[i] + (1.0 - h.values()[i]) * z_tilde.values()[i];
  }
  if (cache) {
    cache->lx = lx;
    cache->lz = lz;
    cache->z = z;
    cache->h = h;
    cache->r = r;
    cache->q = q;
    cache->lq = lq;
    cache->z_tilde = z_tilde;
  }
  return out;
}

GCGRUGrad gcgru_vjp(const GCGRUSpec& spec, const GCGRUCache& cache, const Matrix& lambda,
                    const Matrix& laplacian, const ParamStore& params,
                    std::vector<double>& dtheta) {
  const Matrix& h = cache.h;
  const Matrix& zt = cache.z_tilde;

  // Z+ = H (.) Z + (1 - H) (.) Zt
  Matrix dh(h.rows(), h.cols()), dzt(h.rows(), h.cols()), dz(h.rows(), h.cols());
  for (std::size_t i = 0; i < h.size(); ++i) {
    dh.values()[i] = lambda.values()[i] * (cache.z.values()[i] - zt.values()[i]);
    dzt.values()[i] = lambda.values()[i] * (1.0 - h.values()[i]);
    dz.values()[i] = lambda.values()[i] * h.values()[i];
  }

  // candidate: Zt = tanh(LX Wxh + LQ Whh)
  Matrix du3(h.rows(), h.cols());
  for (std::size_t i = 0; i < h.size(); ++i) {
    du3.values()[i] = dzt.values()[i] * (1.0 - zt.values()[i] * zt.values()[i]);
  }
  accumulate_view(dtheta, params.info(spec.w_xh), matmul(transpose(cache.lx), du3));
  accumulate_view(dtheta, params.info(spec.w_hh), matmul(transpose(cache.lq), du3));
  Matrix dlx = matmul(du3, transpose(params.view(spec.w_xh)));
  const Matrix dlq = matmul(du3, transpose(params.view(spec.w_hh)));
  const Matrix dq = matmul(transpose(laplacian), dlq);
  Matrix dr(h.rows(), h.cols());
  for (std::size_t i = 0; i < h.size(); ++i) {
    dr.values()[i] = dq.values()[i] * cache.z.values()[i];
    dz.values()[i] += dq.values()[i] * cache.r.values()[i];
  }

  // gates: sigmoid'(u) = g (1 - g)
  Matrix duh(h.rows(), h.cols()), dur(h.rows(), h.cols());
  for (std::size_t i = 0; i < h.size(); ++i) {
    duh.values()[i] = dh.values()[i] * h.values()[i] * (1.0 - h.values()[i]);
    dur.values()[i] = dr.values()[i] * cache.r.values()[i] * (1.0 - cache.r.values()[i]);
  }
  accumulate_view(dtheta, params.info(spec.w_xz), matmul(transpose(cache.lx), duh));
  accumulate_view(dtheta, params.info(spec.w_hz), matmul(transpose(cache.lz), duh));
  accumulate_view(dtheta, params.info(spec.w_xr), matmul(transpose(cache.lx), dur));
  accumulate_view(dtheta, params.info(spec.w_hr), matmul(transpose(cache.lz), dur));
  dlx += matmul(duh, transpose(params.view(spec.w_xz)));
  dlx += matmul(dur, transpose(params.view(spec.w_xr)));
  Matrix dlz = matmul(duh, transpose(params.view(spec.w_hz)));
  dlz += matmul(dur, transpose(params.view(spec.w_hr)));

  GCGRUGrad grad;
  grad.dz = dz + matmul(transpose(laplacian), dlz);
  grad.dx = matmul(transpose(laplacian), dlx);
  return grad;
}

}  // namespace gde
