#include "gde/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gde {

// ---------------------------------------------------------------------------
// Multi-particle system
// ---------------------------------------------------------------------------

Matrix particle_initial_state(const ParticleParams& p, RngStream& rng) {
  Matrix state(p.n, 4);
  const int max_tries = 10000;
  for (int i = 0; i < p.n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < max_tries && !placed; ++attempt) {
      const double x = rng.uniform(-2.0, 2.0);
      const double y = rng.uniform(-2.0, 2.0);
      placed = true;
      for (int j = 0; j < i; ++j) {
        const double dx = x - state(j, 0), dy = y - state(j, 1);
        if (std::sqrt(dx * dx + dy * dy) < 1e-3) {
          placed = false;
          break;
        }
      }
      if (placed) {
        state(i, 0) = x;
        state(i, 1) = y;
      }
    }
    if (!placed) throw std::runtime_error("particle_initial_state: rejection sampling failed");
  }
  return state;
}

std::array<double, 2> particle_pair_force(const ParticleParams& p, double dx, double dy,
                                          double dvx, double dvy) {
  const double dist = std::sqrt(dx * dx + dy * dy);
  if (dist < 1e-9) {
    throw std::runtime_error("particle_pair_force: particles within 1e-9, unit vector singular");
  }
  const double nx = dx / dist, ny = dy / dist;
  const double radial_speed = dvx * nx + dvy * ny;
  const double magnitude = p.alpha * (dist - p.r) + p.beta * radial_speed;
  return {-magnitude * nx, -magnitude * ny};
}

namespace {

Matrix particle_accel(const ParticleParams& p, const Matrix& state) {
  const int n = state.rows();
  Matrix acc(n, 2);
  for (int i = 0; i < n; ++i) {
    acc(i, 0) = -state(i, 0);
    acc(i, 1) = -state(i, 1);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = state(i, 0) - state(j, 0);
      const double dy = state(i, 1) - state(j, 1);
      const double dist = std::sqrt(dx * dx + dy * dy);
      if (2.0 * dist > p.r) continue;  // outside the interaction set
      const auto f = particle_pair_force(p, dx, dy, state(i, 2) - state(j, 2),
                                         state(i, 3) - state(j, 3));
      acc(i, 0) += f[0];
      acc(i, 1) += f[1];
      acc(j, 0) -= f[0];  // f_ji = -f_ij, exact
      acc(j, 1) -= f[1];
    }
  }
  return acc;
}

Matrix particle_rhs(const ParticleParams& p, const Matrix& state) {
  const Matrix acc = particle_accel(p, state);
  Matrix d(state.rows(), 4);
  for (int i = 0; i < state.rows(); ++i) {
    d(i, 0) = state(i, 2);
    d(i, 1) = state(i, 3);
    d(i, 2) = acc(i, 0);
    d(i, 3) = acc(i, 1);
  }
  return d;
}

Graph particle_graph(const ParticleParams& p, const Matrix& state) {
  if (state.rows() < 2) return Graph(state.rows());
  std::vector<std::vector<double>> pts(state.rows());
  for (int i = 0; i < state.rows(); ++i) pts[i] = {state(i, 0), state(i, 1)};
  return distance_threshold_adjacency(pts, RadiusMode{p.r});
}

}  // namespace

ParticleRollout simulate_multi_particle(const ParticleParams& p, double T, double dt,
                                        const Matrix& z_init) {
  if (z_init.rows() != p.n || z_init.cols() != 4) {
    throw std::invalid_argument("simulate_multi_particle: state must be n x 4");
  }
  const long steps = static_cast<long>(std::floor(T / dt + 1e-9));
  ParticleRollout roll;
  roll.times.reserve(steps + 1);
  roll.states.reserve(steps + 1);
  Matrix z = z_init;
  roll.times.push_back(0.0);
  roll.states.push_back(z);
  roll.graphs.push_back(particle_graph(p, z));
  for (long k = 0; k < steps; ++k) {
    const Matrix k1 = particle_rhs(p, z);
    Matrix z2 = z;
    axpy(dt / 2.0, k1, z2);
    const Matrix k2 = particle_rhs(p, z2);
    Matrix z3 = z;
    axpy(dt / 2.0, k2, z3);
    const Matrix k3 = particle_rhs(p, z3);
    Matrix z4 = z;
    axpy(dt, k3, z4);
    const Matrix k4 = particle_rhs(p, z4);
    axpy(dt / 6.0, k1, z);
    axpy(dt / 3.0, k2, z);
    axpy(dt / 3.0, k3, z);
    axpy(dt / 6.0, k4, z);
    require_finite(z, "simulate_multi_particle");
    roll.times.push_back(static_cast<double>(k + 1) * dt);
    roll.states.push_back(z);
    roll.graphs.push_back(particle_graph(p, z));
  }
  return roll;
}

double particle_energy(const ParticleParams& p, const Matrix& state) {
  double e = 0.0;
  for (int i = 0; i < state.rows(); ++i) {
    e += 0.5 * (state(i, 2) * state(i, 2) + state(i, 3) * state(i, 3));
    e += 0.5 * (state(i, 0) * state(i, 0) + state(i, 1) * state(i, 1));
  }
  for (int i = 0; i < state.rows(); ++i) {
    for (int j = i + 1; j < state.rows(); ++j) {
      const double dx = state(i, 0) - state(j, 0);
      const double dy = state(i, 1) - state(j, 1);
      const double dist = std::sqrt(dx * dx + dy * dy);
      if (2.0 * dist <= p.r) e += 0.5 * p.alpha * (dist - p.r) * (dist - p.r);
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Repressilator
// ---------------------------------------------------------------------------

ReactionNetwork repressilator_network(const RepressilatorRates& rates) {
  ReactionNetwork net;
  net.n_species = 6;  // [P1, P2, P3, M1, M2, M3]
  auto stoich = [](int species, int delta) {
    std::vector<int> s(6, 0);
    s[species] = delta;
    return s;
  };
  for (int i = 0; i < 3; ++i) {
    const int repressor = (i + 2) % 3;  // protein i-1 silences gene i
    net.reactions.push_back(
        {stoich(3 + i, +1), [rates, repressor](const std::vector<double>& s) {
           const double frac = std::pow(s[repressor] / rates.K, rates.hill);
           return rates.alpha0 + rates.alpha / (1.0 + frac);
         }});
    net.reactions.push_back(
        {stoich(i, +1), [rates, i](const std::vector<double>& s) { return rates.k_t * s[3 + i]; }});
    net.reactions.push_back(
        {stoich(3 + i, -1),
         [rates, i](const std::vector<double>& s) { return rates.d_m * s[3 + i]; }});
    net.reactions.push_back(
        {stoich(i, -1), [rates, i](const std::vector<double>& s) { return rates.d_p * s[i]; }});
  }
  return net;
}

std::vector<double> repressilator_initial() { return {0.0, 0.0, 0.0, 0.0, 20.0, 0.0}; }

std::vector<double> repressilator_mean_field_rhs(const RepressilatorRates& rates,
                                                 const std::vector<double>& s) {
  std::vector<double> d(6, 0.0);
  for (int i = 0; i < 3; ++i) {
    const int repressor = (i + 2) % 3;
    const double frac = std::pow(std::max(s[repressor], 0.0) / rates.K, rates.hill);
    d[3 + i] = rates.alpha0 + rates.alpha / (1.0 + frac) - rates.d_m * s[3 + i];
    d[i] = rates.k_t * s[3 + i] - rates.d_p * s[i];
  }
  return d;
}

CountTrajectory tau_leap(const ReactionNetwork& net, const std::vector<double>& init, double T,
                         double tau, RngStream& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau_leap: tau must be positive");
  if (static_cast<int>(init.size()) != net.n_species) {
    throw std::invalid_argument("tau_leap: initial state size mismatch");
  }
  for (double v : init) {
    if (v < 0.0 || v != std::floor(v)) {
      throw std::invalid_argument("tau_leap: initial counts must be nonnegative integers");
    }
  }
  CountTrajectory traj;
  std::vector<double> state = init;
  traj.times.push_back(0.0);
  traj.counts.push_back(state);
  const long leaps = static_cast<long>(std::ceil(T / tau - 1e-9));
  for (long k = 0; k < leaps; ++k) {
    std::vector<double> next = state;
    for (const auto& rxn : net.reactions) {
      const double prop = rxn.propensity(state);
      if (prop < 0.0) throw std::runtime_error("tau_leap: negative propensity");
      if (prop == 0.0) continue;
      const long firings = rng.poisson(prop * tau);
      if (firings == 0) continue;
      for (int s = 0; s < net.n_species; ++s) {
        next[s] += static_cast<double>(firings) * rxn.stoich[s];
      }
    }
    for (auto& v : next) v = std::max(v, 0.0);  // clamp negative excursions
    state = std::move(next);
    traj.times.push_back(static_cast<double>(k + 1) * tau);
    traj.counts.push_back(state);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Undersampling
// ---------------------------------------------------------------------------

IrregularSeries bernoulli_undersample(const std::vector<double>& grid,
                                      const std::vector<Matrix>& values, double keep_prob,
                                      RngStream& rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw std::invalid_argument("bernoulli_undersample: keep_prob must lie in (0,1]");
  }
  if (grid.size() != values.size()) {
    throw std::invalid_argument("bernoulli_undersample: grid/value length mismatch");
  }
  IrregularSeries out;
  if (grid.size() >= 2) out.base_dt = grid[1] - grid[0];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool keep = (i == 0) ? true : rng.bernoulli(keep_prob);
    if (keep) {
      out.timestamps.push_back(grid[i]);
      out.values.push_back(values[i]);
    }
  }
  return out;
}

DynamicGraphStream undersample_stream(const DynamicGraphStream& regular, double keep_prob,
                                      double period, RngStream& rng) {
  regular.validate();
  DynamicGraphStream out;
  double prev_t = regular.timestamps.empty() ? 0.0 : regular.timestamps[0];
  for (std::size_t i = 0; i < regular.size(); ++i) {
    const bool keep = (i == 0) ? true : rng.bernoulli(keep_prob);
    if (!keep) continue;
    const double t = regular.timestamps[i];
    const Matrix& x = regular.features[i];
    Matrix with_time(x.rows(), x.cols() + 2);
    for (int r = 0; r < x.rows(); ++r) {
      for (int c = 0; c < x.cols(); ++c) with_time(r, c) = x(r, c);
      with_time(r, x.cols()) = t - prev_t;                          // gap to previous kept sample
      with_time(r, x.cols() + 1) = std::sin(2.0 * M_PI * t / period);  // absolute-time encoding
    }
    out.timestamps.push_back(t);
    out.features.push_back(std::move(with_time));
    out.graphs.push_back(regular.graphs[i]);
    prev_t = t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Traffic surrogate
// ---------------------------------------------------------------------------

TrafficData synth_traffic(const TrafficConfig& cfg, RngStream& rng) {
  if (cfg.n_stations < 2) throw std::invalid_argument("synth_traffic: need >= 2 stations");
  TrafficData data;
  data.positions.resize(cfg.n_stations);
  for (auto& pos : data.positions) pos = {rng.uniform(), rng.uniform()};
  data.graph = distance_threshold_adjacency(data.positions, PercentileMode{cfg.percentile});

  const int n = cfg.n_stations;
  std::vector<double> mean(n), amp(n), phase(n);
  for (int i = 0; i < n; ++i) {
    mean[i] = rng.uniform(cfg.mean_lo, cfg.mean_hi);
    amp[i] = rng.uniform(cfg.amp_lo, cfg.amp_hi);
    phase[i] = rng.uniform(0.0, 2.0 * M_PI);
  }
  // row-normalized adjacency for the diffusion coupling
  std::vector<double> inv_deg(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += data.graph.adjacency(i, j);
    inv_deg[i] = deg > 0.0 ? 1.0 / deg : 0.0;
  }

  const int steps = cfg.days * cfg.steps_per_day;
  std::vector<double> resid(n, 0.0), next(n, 0.0);
  for (int t = 0; t < steps; ++t) {
    Matrix x(n, 1);
    for (int i = 0; i < n; ++i) {
      const double sinusoid =
          mean[i] + amp[i] * std::sin(2.0 * M_PI * t / cfg.steps_per_day + phase[i]);
      x(i, 0) = sinusoid + resid[i];
    }
    data.stream.timestamps.push_back(static_cast<double>(t));
    data.stream.features.push_back(std::move(x));
    data.stream.graphs.push_back(data.graph);
    // residual update
    for (int i = 0; i < n; ++i) {
      double nbr = 0.0;
      for (int j = 0; j < n; ++j) nbr += data.graph.adjacency(i, j) * resid[j];
      next[i] = cfg.ar * resid[i] + cfg.coupling * inv_deg[i] * nbr + cfg.noise_std * rng.normal();
    }
    std::swap(resid, next);
  }
  return data;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void save_stream_csv(const DynamicGraphStream& stream, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_stream_csv: cannot open " + path);
  const int nx = stream.features.empty() ? 0 : stream.features[0].cols();
  out << "t,node";
  for (int c = 0; c < nx; ++c) out << ",f" << c;
  out << "\n";
  char buf[64];
  for (std::size_t k = 0; k < stream.size(); ++k) {
    for (int i = 0; i < stream.features[k].rows(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", stream.timestamps[k]);
      out << buf << "," << i;
      for (int c = 0; c < nx; ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", stream.features[k](i, c));
        out << "," << buf;
      }
      out << "\n";
    }
  }
}

DynamicGraphStream load_stream_csv(const std::string& path, const std::vector<Graph>& graphs) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_stream_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_stream_csv: empty file " + path);
  // header: t,node,f0,...
  std::map<double, std::vector<std::pair<int, std::vector<double>>>> by_time;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> fields;
    while (std::getline(ss, cell, ',')) fields.push_back(std::stod(cell));
    if (fields.size() < 2) {
      throw std::runtime_error("load_stream_csv: " + path + ":" + std::to_string(lineno) +
                               ": short row");
    }
    const double t = fields[0];
    const int node = static_cast<int>(fields[1]);
    by_time[t].push_back({node, std::vector<double>(fields.begin() + 2, fields.end())});
  }
  DynamicGraphStream stream;
  std::size_t k = 0;
  for (auto& [t, rows] : by_time) {
    std::sort(rows.begin(), rows.end());
    const int n = static_cast<int>(rows.size());
    const int nx = static_cast<int>(rows[0].second.size());
    Matrix x(n, nx);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < nx; ++c) x(i, c) = rows[i].second[c];
    stream.timestamps.push_back(t);
    stream.features.push_back(std::move(x));
    if (graphs.size() == 1) {
      stream.graphs.push_back(graphs[0]);
    } else if (k < graphs.size()) {
      stream.graphs.push_back(graphs[k]);
    } else {
      throw std::runtime_error("load_stream_csv: not enough graphs for stream entries");
    }
    ++k;
  }
  stream.validate();
  return stream;
}

}  // namespace gde
