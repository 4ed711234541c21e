#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gde/datagen.hpp"
#include "gde/latent.hpp"
#include "gde/models.hpp"

#include "config.hpp"
#include "manifest.hpp"

namespace gde::cli {

// ---------------------------------------------------------------------------
// particles: multi-particle trajectory extrapolation
// ---------------------------------------------------------------------------

namespace particles {

struct Dataset {
  std::vector<double> times;
  std::vector<Matrix> states;  // n x 4, subsampled at the model step
  std::vector<Graph> graphs;
  std::size_t split = 0;  // first index of the test half
  double radius = 1.0;
};

Dataset generate(const Config& cfg, const std::string& run_dir);
Dataset load(const std::string& run_dir);

/// Model families: "gcde", "gcde2", "node", "static".
struct Family {
  std::string name;
  ParamStore params;
  NeuralGDEModel model;   // unused for "static"
  FieldSpec static_stack;  // used only by "static"
  int n_nodes = 0;
};

Family build_family(const std::string& name, const Config& cfg, int n_nodes,
                    std::uint64_t init_seed);
/// One-step prediction X -> X_next (adjacency recomputed from input positions).
Matrix predict_step(const Family& fam, const Matrix& x, double radius);
/// Accumulates the MSE gradient of one training pair; returns the pair loss.
double pair_mse_grad(Family& fam, const Matrix& x, const Matrix& target, double radius,
                     std::vector<double>& grad);

void train(const Config& cfg, const std::string& run_dir, Manifest& manifest);
void evaluate(const Config& cfg, const std::string& run_dir, Manifest& manifest);

}  // namespace particles

// ---------------------------------------------------------------------------
// hybrid_forecast: irregular traffic-like forecasting
// ---------------------------------------------------------------------------

namespace hybrid {

struct Dataset {
  DynamicGraphStream train;  // kept samples, features [speed_norm, dt, sin t]
  DynamicGraphStream test;
  Graph graph;
  double speed_mean = 0.0;
  double speed_std = 1.0;
};

Dataset generate(const Config& cfg, const std::string& run_dir);
Dataset load(const std::string& run_dir);

/// Families: "gcde_gru", "gcgru", "gru" (single-node flattened features).
struct Family {
  std::string name;
  ParamStore params;
  HybridGDEModel model;
  bool flatten = false;  // gru: one node carrying all stations
};

Family build_family(const std::string& name, const Config& cfg, int n_stations,
                    std::uint64_t init_seed);

void train(const Config& cfg, const std::string& run_dir, Manifest& manifest);
void evaluate(const Config& cfg, const std::string& run_dir, Manifest& manifest);

}  // namespace hybrid

// ---------------------------------------------------------------------------
// repressilator: latent stochastic reconstruction
// ---------------------------------------------------------------------------

namespace repressilator {

struct Dataset {
  std::vector<CountTrajectory> train;
  std::vector<CountTrajectory> test;
  std::vector<double> feature_min;  // per species, from the train split
  std::vector<double> feature_max;
};

Dataset generate(const Config& cfg, const std::string& run_dir);
Dataset load(const std::string& run_dir);

void train(const Config& cfg, const std::string& run_dir, Manifest& manifest);
void evaluate(const Config& cfg, const std::string& run_dir, Manifest& manifest);

}  // namespace repressilator

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

/// Built-in desk-scale presets for `reproduce <experiment>`.
Config preset_config(const std::string& experiment, std::uint64_t seed,
                     const std::string& out_dir);

void run_generate(const Config& cfg);
void run_train(const Config& cfg);
void run_eval(const Config& cfg);
/// generate + train + eval + plots, with manifest status tracking.
int run_experiment(const Config& cfg);
void emit_plots(const std::string& run_dir);

/// Adjoint-vs-finite-difference suite over the four model families; prints
/// one line per check, returns the number of failures.
int run_gradcheck(bool verbose);

std::vector<std::string> allowed_keys();
std::string require_out_dir(const Config& cfg);

}  // namespace gde::cli
