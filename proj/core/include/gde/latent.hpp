#pragma once

#include <vector>

#include "gde/brownian.hpp"
#include "gde/field.hpp"
#include "gde/graph.hpp"
#include "gde/rng.hpp"
#include "gde/solvers.hpp"

namespace gde {

/// Two causal temporal-convolution layers (kernel 3, ReLU) over each node's
/// scalar series, then per-node affine heads for the posterior mean/logvar.
/// Latent nodes carry zero-filled series through the same shared weights.
struct TemporalConvSpec {
  int hidden = 16;
  int kernel = 3;
  int nz = 1;
  std::string w1, b1;  // (kernel*1) x hidden, 1 x hidden
  std::string w2, b2;  // (kernel*hidden) x hidden, 1 x hidden
  std::string head_mu_w, head_mu_b;
  std::string head_lv_w, head_lv_b;

  static TemporalConvSpec create(ParamStore& params, const std::string& prefix, int hidden,
                                 int nz);
};

struct PosteriorParams {
  Matrix mean;    // n x nz
  Matrix logvar;  // n x nz
};

/// Latent continuous-depth model on an augmented graph: observable output
/// nodes plus latent nodes, a Stratonovich drift/diffusion pair for the
/// decoder, and a diagonal Gaussian posterior over the initial state.
struct LatentGDEModel {
  GraphContext augmented;
  std::vector<int> output_nodes;  // rows of the augmented state that are observed
  FieldSpec drift;
  FieldSpec diffusion;      // non-negative output (terminal sigmoid)
  double diffusion_scale = 1.0;
  TemporalConvSpec encoder;
  double sigma_obs = 0.1;
  SolverConfig sde;  // decoder solver settings (euler_heun)
};

/// history: n_aug x T, one scalar sample per node per history step (zero rows
/// for latent nodes).
PosteriorParams latent_encode(const LatentGDEModel& m, const Matrix& history,
                              const ParamStore& params);

Matrix sample_posterior(const PosteriorParams& post, RngStream& rng);

/// Decodes with the Stratonovich Euler-Heun integrator over the augmented
/// graph and returns the output-node rows at each requested time (a direct
/// state slice, no readout layer).
std::vector<Matrix> gsde_decode(const LatentGDEModel& m, const Matrix& z0,
                                const std::vector<double>& t_eval, const BrownianPath& path,
                                const ParamStore& params);

/// Drift-only decode (diffusion forced to zero); the deterministic limit.
std::vector<Matrix> gde_decode_deterministic(const LatentGDEModel& m, const Matrix& z0,
                                             const std::vector<double>& t_eval,
                                             const ParamStore& params);

/// -ELBO: Gaussian negative log-likelihood of the predictions plus
/// KL(q || N(0, I)). Predictions/targets pair up per evaluation time.
double elbo_loss(const std::vector<Matrix>& predictions, const std::vector<Matrix>& targets,
                 const PosteriorParams& post, double sigma_obs);

double kl_to_standard_normal(const PosteriorParams& post);

// ---------------------------------------------------------------------------
// Training path: fixed-step unrolled decode with exact reverse-mode
// ---------------------------------------------------------------------------

struct GsdeUnrolledRun {
  std::vector<double> times;     // step boundaries, size steps+1
  std::vector<Matrix> states;    // full augmented states
  std::vector<Matrix> db;        // Brownian increment per step
  std::vector<std::size_t> eval_index;  // state index per t_eval entry
};

GsdeUnrolledRun gsde_decode_unrolled(const LatentGDEModel& m, const Matrix& z0,
                                     const std::vector<double>& t_eval, int substeps,
                                     const BrownianPath& path, const ParamStore& params);

/// Reverse pass through the stored Euler-Heun steps. dl_dy holds one
/// cotangent per t_eval entry over the output-node rows. Returns dL/dZ0 and
/// accumulates drift/diffusion parameter gradients.
Matrix gsde_unrolled_backward(const LatentGDEModel& m, const GsdeUnrolledRun& run,
                              const std::vector<Matrix>& dl_dy, const ParamStore& params,
                              std::vector<double>& dtheta);

// ---------------------------------------------------------------------------
// Repressilator decoder graph and default model
// ---------------------------------------------------------------------------

struct AugmentedGraph {
  Graph graph;
  std::vector<int> output_nodes;
};

/// Bipartite decoder graph: 6 species nodes (P1..P3, M1..M3, matching the
/// generator's ordering) and 12 latent reaction/degradation nodes. Species
/// interact only through latent nodes; every species node touches exactly 3
/// latent nodes.
AugmentedGraph repressilator_augmented_graph();

/// Drift [GCN 1->3 tanh, GAT 3->3 tanh, GCN 3->1 none]; diffusion shares the
/// shape with a terminal sigmoid. Registers all views under `prefix`.
LatentGDEModel make_repressilator_model(ParamStore& params, const std::string& prefix);

/// Reverse pass through heads and temporal convolutions given cotangents on
/// the posterior mean/logvar.
void latent_encoder_backward(const TemporalConvSpec& s, const Matrix& history,
                             const Matrix& dmean, const Matrix& dlogvar, const ParamStore& params,
                             std::vector<double>& dtheta);

/// Full training-objective gradient for one trajectory: encode, sample with
/// the given rng, decode, -ELBO, and reverse through decoder, sampling and
/// encoder. Returns the loss value.
double latent_elbo_grad(const LatentGDEModel& m, const Matrix& history,
                        const std::vector<double>& t_eval, const std::vector<Matrix>& targets,
                        int substeps, const BrownianPath& path, RngStream& sample_rng,
                        const ParamStore& params, std::vector<double>& dtheta);

}  // namespace gde
