#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "gde/graph.hpp"
#include "gde/matrix.hpp"
#include "gde/rng.hpp"

namespace gde {

// ---------------------------------------------------------------------------
// Planar viscoelastic multi-particle system
// ---------------------------------------------------------------------------

struct ParticleParams {
  int n = 10;
  double alpha = 1.0;  // spring stiffness
  double beta = 0.5;   // drag coefficient
  double r = 1.0;      // rest length / interaction radius
};

struct ParticleRollout {
  std::vector<double> times;
  std::vector<Matrix> states;  // n x 4: [px, py, vx, vy]
  std::vector<Graph> graphs;   // radius-rule adjacency per stored step
};

/// Positions i.i.d. uniform in [-2,2]^2 (rejection-sampled so no pair starts
/// within 1e-3), velocities zero.
Matrix particle_initial_state(const ParticleParams& p, RngStream& rng);

/// Spring-with-drag pair force on particle i from particle j. Computed once
/// per pair and negated for the partner, so antisymmetry is exact.
std::array<double, 2> particle_pair_force(const ParticleParams& p, double dx, double dy,
                                          double dvx, double dvy);

/// RK4 rollout at fixed dt storing floor(T/dt)+1 states; the neighbor set and
/// adjacency are recomputed from positions at every force evaluation.
/// Throws if a pair comes within 1e-9 (singular unit vector).
ParticleRollout simulate_multi_particle(const ParticleParams& p, double T, double dt,
                                        const Matrix& z_init);

/// Total energy: kinetic + axis potential + active-pair spring potentials.
double particle_energy(const ParticleParams& p, const Matrix& state);

// ---------------------------------------------------------------------------
// Stochastic repressilator via tau-leaping
// ---------------------------------------------------------------------------

struct Reaction {
  std::vector<int> stoich;
  std::function<double(const std::vector<double>&)> propensity;
};

struct ReactionNetwork {
  int n_species = 0;
  std::vector<Reaction> reactions;
};

struct RepressilatorRates {
  double alpha = 30.0;   // max transcription rate
  double alpha0 = 0.03;  // leaky transcription
  double K = 40.0;       // repression threshold
  double hill = 2.0;
  double k_t = 0.5;      // translation per mRNA
  double d_m = 0.35;     // mRNA degradation
  double d_p = 0.035;    // protein degradation
};

/// Species order [P1, P2, P3, M1, M2, M3]; mRNA i is repressed by protein
/// i-1 (cyclically). 12 reactions: transcription, translation, two
/// degradations per gene.
ReactionNetwork repressilator_network(const RepressilatorRates& rates = {});
std::vector<double> repressilator_initial();  // [0, 0, 0, 0, 20, 0]
/// Deterministic rate-equation right-hand side with the same constants.
std::vector<double> repressilator_mean_field_rhs(const RepressilatorRates& rates,
                                                 const std::vector<double>& state);

struct CountTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> counts;  // integer-valued
};

/// Fires Poisson(propensity * tau) counts per reaction per leap; negative
/// excursions are clamped to zero.
CountTrajectory tau_leap(const ReactionNetwork& net, const std::vector<double>& init, double T,
                         double tau, RngStream& rng);

// ---------------------------------------------------------------------------
// Bernoulli undersampling of regular streams
// ---------------------------------------------------------------------------

struct IrregularSeries {
  double base_dt = 1.0;
  std::vector<double> timestamps;
  std::vector<Matrix> values;
};

/// Keeps each grid point independently with probability keep_prob; the first
/// point is always kept.
IrregularSeries bernoulli_undersample(const std::vector<double>& grid, const std::vector<Matrix>& values,
                                      double keep_prob, RngStream& rng);

/// Stream variant: appends a time-gap column and a sin(2 pi t / period)
/// encoding to every kept entry.
DynamicGraphStream undersample_stream(const DynamicGraphStream& regular, double keep_prob,
                                      double period, RngStream& rng);

// ---------------------------------------------------------------------------
// Synthetic traffic-like surrogate network
// ---------------------------------------------------------------------------

struct TrafficConfig {
  int n_stations = 20;
  int days = 3;
  int steps_per_day = 288;  // 5-minute sampling
  double mean_lo = 55.0, mean_hi = 70.0;
  double amp_lo = 6.0, amp_hi = 10.0;
  double ar = 0.7;           // residual AR(1) coefficient
  double coupling = 0.25;    // neighbor-mean diffusion strength
  double noise_std = 2.0;
  double percentile = 40.0;  // adjacency distance percentile
};

struct TrafficData {
  DynamicGraphStream stream;                   // one speed column per station
  std::vector<std::vector<double>> positions;  // unit square
  Graph graph;
};

/// Stations uniform in the unit square; per-station speed = daily sinusoid +
/// graph-diffusion-coupled AR(1) residual. Zero noise and zero coupling give
/// exact sinusoids.
TrafficData synth_traffic(const TrafficConfig& cfg, RngStream& rng);

// ---------------------------------------------------------------------------
// Dataset files: CSV (t,node,features...) + indexed edge lists
// ---------------------------------------------------------------------------

void save_stream_csv(const DynamicGraphStream& stream, const std::string& path);
DynamicGraphStream load_stream_csv(const std::string& path, const std::vector<Graph>& graphs);

}  // namespace gde
