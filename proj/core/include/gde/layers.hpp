#pragma once

#include <string>
#include <variant>
#include <vector>

#include "gde/activation.hpp"
#include "gde/graph.hpp"
#include "gde/matrix.hpp"
#include "gde/param_store.hpp"

namespace gde {

/// Graph bound to the derived quantities every layer needs: the normalized
/// Laplacian and neighbor lists.
struct GraphContext {
  Graph graph;
  Matrix laplacian;
  std::vector<std::vector<int>> nbrs;

  GraphContext() = default;
  explicit GraphContext(Graph g);
};

/// Multi-slab view naming: a layer keeps one view name per parameter slab
/// when the field has piecewise-constant time-varying parameters, otherwise
/// a single name.
const std::string& pick_view(const std::vector<std::string>& names, int slab);

// ---------------------------------------------------------------------------
// Layer specs
// ---------------------------------------------------------------------------

struct GCNLayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  ActivationKind act;
  std::vector<std::string> weight;  // in_dim x out_dim per slab
};

struct AffineLayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  ActivationKind act;
  std::vector<std::string> weight;
  std::vector<std::string> bias;  // empty: no bias
  bool has_bias() const { return !bias.empty(); }
};

struct GATLayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  ActivationKind act;
  double leaky_slope = 0.2;
  std::vector<std::string> weight;  // in_dim x out_dim
  std::vector<std::string> attn;    // 1 x (2*out_dim)
};

struct GMDELayerSpec {
  int dim = 0;      // node feature width, preserved by the layer
  int msg_dim = 0;  // message width
  ActivationKind msg_act;
  ActivationKind upd_act;
  std::vector<std::string> msg_w;  // (2*dim) x msg_dim
  std::vector<std::string> msg_b;  // 1 x msg_dim
  std::vector<std::string> upd_w;  // msg_dim x dim
  std::vector<std::string> upd_b;  // 1 x dim
};

using LayerSpec = std::variant<GCNLayerSpec, AffineLayerSpec, GATLayerSpec, GMDELayerSpec>;

int layer_in_dim(const LayerSpec& spec);
int layer_out_dim(const LayerSpec& spec);

// ---------------------------------------------------------------------------
// Forward caches (inputs and activation states needed by the reverse pass)
// ---------------------------------------------------------------------------

struct GCNCache {
  Matrix lz;  // L Z
  ActivationResult act;
};

struct AffineCache {
  Matrix in;
  ActivationResult act;
};

struct GATCache {
  Matrix h;                 // Z W
  Matrix in;                // Z
  std::vector<double> c;    // a1 . h_v per node
  std::vector<double> d;    // a2 . h_u per node
  Matrix alpha;             // dense n x n, zero outside N(v) u {v}
  ActivationResult act;     // over P_v = sum alpha h_u
};

struct GMDEEdgeCache {
  int v, u;
  ActivationResult msg;  // 1 x msg_dim
};

struct GMDECache {
  Matrix in;
  std::vector<GMDEEdgeCache> edges;
  Matrix s;  // summed messages, n x msg_dim
  ActivationResult act;
};

using LayerCache = std::variant<GCNCache, AffineCache, GATCache, GMDECache>;

// ---------------------------------------------------------------------------
// Forward / VJP primitives. Every vjp accumulates parameter cotangents into
// a flat gradient vector aligned with the ParamStore.
// ---------------------------------------------------------------------------

Matrix gcn_forward(const GCNLayerSpec& spec, int slab, const Matrix& z, const ParamStore& params,
                   const GraphContext& ctx, GCNCache* cache);
Matrix gcn_vjp(const GCNLayerSpec& spec, int slab, const GCNCache& cache, const Matrix& lambda,
               const ParamStore& params, const GraphContext& ctx, std::vector<double>& dtheta);

Matrix affine_forward(const AffineLayerSpec& spec, int slab, const Matrix& z,
                      const ParamStore& params, AffineCache* cache);
Matrix affine_vjp(const AffineLayerSpec& spec, int slab, const AffineCache& cache,
                  const Matrix& lambda, const ParamStore& params, std::vector<double>& dtheta);

/// Returns sigma(sum_u alpha_vu W z_u); the attention matrix lands in the cache.
Matrix gat_forward(const GATLayerSpec& spec, int slab, const Matrix& z, const ParamStore& params,
                   const GraphContext& ctx, GATCache* cache);
Matrix gat_vjp(const GATLayerSpec& spec, int slab, const GATCache& cache, const Matrix& lambda,
               const ParamStore& params, const GraphContext& ctx, std::vector<double>& dtheta);

Matrix gmde_forward(const GMDELayerSpec& spec, int slab, const Matrix& z, const ParamStore& params,
                    const GraphContext& ctx, GMDECache* cache);
Matrix gmde_vjp(const GMDELayerSpec& spec, int slab, const GMDECache& cache, const Matrix& lambda,
                const ParamStore& params, const GraphContext& ctx, std::vector<double>& dtheta);

// ---------------------------------------------------------------------------
// GCGRU jump cell
// ---------------------------------------------------------------------------

struct GCGRUSpec {
  int nx = 0;
  int nz = 0;
  std::string w_xz, w_hz, w_xr, w_hr, w_xh, w_hh;

  /// Registers the six weight views (nx x nz or nz x nz) under `prefix.`.
  static GCGRUSpec create(ParamStore& params, const std::string& prefix, int nx, int nz);
};

struct GCGRUCache {
  Matrix lx, lz;   // L X, L Z
  Matrix z;        // pre-jump state
  Matrix h, r;     // gates (sigmoid values)
  Matrix q, lq;    // R (.) Z and L (R (.) Z)
  Matrix z_tilde;  // candidate (tanh value)
};

/// Gated jump: H = sig(LX Wxz + LZ Whz), R = sig(LX Wxr + LZ Whr),
/// Zt = tanh(LX Wxh + L(R(.)Z) Whh), Z+ = H(.)Z + (1-H)(.)Zt.
Matrix gcgru_jump(const Matrix& laplacian, const Matrix& z, const Matrix& x, const GCGRUSpec& spec,
                  const ParamStore& params, GCGRUCache* cache);

struct GCGRUGrad {
  Matrix dz;
  Matrix dx;
};

GCGRUGrad gcgru_vjp(const GCGRUSpec& spec, const GCGRUCache& cache, const Matrix& lambda,
                    const Matrix& laplacian, const ParamStore& params, std::vector<double>& dtheta);

}  // namespace gde
