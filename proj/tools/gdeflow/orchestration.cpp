#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gde/adjoint.hpp"
#include "gde/brownian.hpp"

#include "experiments.hpp"
#include "svg.hpp"

namespace gde::cli {

namespace fs = std::filesystem;

std::vector<std::string> allowed_keys() {
  return {
      "experiment.name", "experiment.out_dir",
      // dataset
      "dataset.seed", "dataset.n", "dataset.T", "dataset.dt", "dataset.stride", "dataset.alpha",
      "dataset.beta", "dataset.r", "dataset.n_stations", "dataset.days", "dataset.keep_prob",
      "dataset.ar", "dataset.coupling", "dataset.noise_std", "dataset.n_train", "dataset.n_test",
      "dataset.tau",
      // model
      "model.hidden", "model.hidden2", "model.mlp_hidden_mult", "model.solver", "model.h",
      "model.rtol", "model.atol", "model.nz", "model.gru_hidden", "model.head_hidden",
      "model.sigma_obs", "model.diffusion_scale",
      // training
      "training.epochs", "training.lr", "training.lr_min", "training.peak_epoch",
      "training.cosine_t0", "training.seeds", "training.families", "training.seq_len",
      "training.batch", "training.n_trajectories", "training.stride", "training.substeps",
      // eval
      "eval.k_list", "eval.n_samples", "eval.extrapolate_factor", "eval.n_plot_trajectories",
  };
}

std::string require_out_dir(const Config& cfg) {
  const std::string dir = cfg.get("experiment", "out_dir");
  fs::create_directories(dir);
  return dir;
}

Config preset_config(const std::string& experiment, std::uint64_t seed,
                     const std::string& out_dir) {
  std::ostringstream text;
  text << "[experiment]\nname = " << experiment << "\nout_dir = " << out_dir << "\n";
  if (experiment == "particles") {
    text << "[dataset]\nseed = " << seed << "\nn = 10\nT = 5.0\ndt = 0.00195\nstride = 16\n";
    text << "[training]\nepochs = 200\nlr = 0.01\nseeds = " << seed << "," << seed + 1 << ","
         << seed + 2 << "\nfamilies = gcde,node,static\n";
    text << "[eval]\nk_list = 1,3,5,10,20\n";
  } else if (experiment == "hybrid_forecast") {
    text << "[dataset]\nseed = " << seed << "\nn_stations = 20\ndays = 3\nkeep_prob = 0.3\n";
    text << "[training]\nepochs = 40\nlr = 0.01\ncosine_t0 = 10\nseq_len = 5\nbatch = 16\nseeds = ";
    for (int i = 0; i < 5; ++i) text << (i ? "," : "") << seed + i;
    text << "\nfamilies = gcde_gru,gcgru,gru\n";
  } else if (experiment == "repressilator") {
    text << "[dataset]\nseed = " << seed << "\nn_train = 10\nn_test = 10\nT = 300\ntau = 0.5\n";
    text << "[training]\nepochs = 300\nlr = 0.01\nlr_min = 0.0004\npeak_epoch = 90\nstride = 5\n"
         << "substeps = 1\nseeds = " << seed << "\n";
    text << "[eval]\nn_samples = 30\nn_plot_trajectories = 2\n";
  } else {
    throw std::runtime_error("unknown experiment preset '" + experiment + "'");
  }
  return Config::parse_text(text.str(), "<preset:" + experiment + ">");
}

namespace {

std::string experiment_name(const Config& cfg) {
  const std::string name = cfg.get("experiment", "name");
  if (name != "particles" && name != "hybrid_forecast" && name != "repressilator") {
    throw std::runtime_error("config: unknown experiment '" + name + "'");
  }
  return name;
}

Manifest make_manifest(const Config& cfg, const std::string& out) {
  return Manifest(out, cfg, cfg.get_seed_list("training", "seeds", {1}));
}

}  // namespace

void run_generate(const Config& cfg) {
  cfg.validate_keys(allowed_keys());
  const std::string name = experiment_name(cfg);
  const std::string out = require_out_dir(cfg);
  if (name == "particles") {
    particles::generate(cfg, out);
  } else if (name == "hybrid_forecast") {
    hybrid::generate(cfg, out);
  } else {
    repressilator::generate(cfg, out);
  }
}

void run_train(const Config& cfg) {
  cfg.validate_keys(allowed_keys());
  const std::string name = experiment_name(cfg);
  const std::string out = require_out_dir(cfg);
  Manifest manifest = make_manifest(cfg, out);
  if (name == "particles") {
    particles::train(cfg, out, manifest);
  } else if (name == "hybrid_forecast") {
    hybrid::train(cfg, out, manifest);
  } else {
    repressilator::train(cfg, out, manifest);
  }
}

void run_eval(const Config& cfg) {
  cfg.validate_keys(allowed_keys());
  const std::string name = experiment_name(cfg);
  const std::string out = require_out_dir(cfg);
  Manifest manifest = make_manifest(cfg, out);
  if (name == "particles") {
    particles::evaluate(cfg, out, manifest);
  } else if (name == "hybrid_forecast") {
    hybrid::evaluate(cfg, out, manifest);
  } else {
    repressilator::evaluate(cfg, out, manifest);
  }
}

int run_experiment(const Config& cfg) {
  cfg.validate_keys(allowed_keys());
  const std::string name = experiment_name(cfg);
  const std::string out = require_out_dir(cfg);
  Manifest manifest = make_manifest(cfg, out);
  manifest.mark_running();
  try {
    if (name == "particles") {
      particles::generate(cfg, out);
      particles::train(cfg, out, manifest);
      particles::evaluate(cfg, out, manifest);
    } else if (name == "hybrid_forecast") {
      hybrid::generate(cfg, out);
      hybrid::train(cfg, out, manifest);
      hybrid::evaluate(cfg, out, manifest);
    } else {
      repressilator::generate(cfg, out);
      repressilator::train(cfg, out, manifest);
      repressilator::evaluate(cfg, out, manifest);
    }
    emit_plots(out);
    manifest.mark_completed();
    return 0;
  } catch (const std::exception& e) {
    manifest.mark_failed(e.what());
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// plots
// ---------------------------------------------------------------------------

namespace {

std::vector<std::map<std::string, std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("emit_plots: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) return {};
  std::vector<std::string> headers;
  {
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) headers.push_back(cell);
  }
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::map<std::string, std::string> row;
    for (std::size_t c = 0; c < headers.size() && std::getline(ss, cell, ','); ++c) {
      row[headers[c]] = cell;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void plot_mape_table(const std::string& run_dir) {
  const auto rows = read_csv(run_dir + "/results/mape_table.csv");
  // model -> k -> mape values across seeds
  std::map<std::string, std::map<int, std::vector<double>>> by_model;
  for (const auto& r : rows) {
    by_model[r.at("model")][std::stoi(r.at("k"))].push_back(std::stod(r.at("mape")));
  }
  LinePlot plot;
  plot.title = "Extrapolation MAPE vs steps (mean, 1-std band)";
  plot.x_label = "extrapolation steps";
  plot.y_label = "MAPE [%]";
  for (const auto& [model, per_k] : by_model) {
    Series s;
    s.label = model;
    for (const auto& [k, vals] : per_k) {
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      const double sd = vals.size() > 1 ? std::sqrt(var / (vals.size() - 1)) : 0.0;
      s.x.push_back(k);
      s.y.push_back(mean);
      s.band_lo.push_back(mean - sd);
      s.band_hi.push_back(mean + sd);
    }
    plot.series.push_back(std::move(s));
  }
  write_svg(plot, run_dir + "/plots/mape_vs_steps.svg");
}

void plot_prediction_overlay(const std::string& run_dir) {
  const auto rows = read_csv(run_dir + "/results/predictions.csv");
  if (rows.empty()) return;
  LinePlot plot;
  plot.x_label = "t";
  const bool particles_fmt = rows[0].count("node") > 0;
  if (particles_fmt) {
    plot.title = "5-step extrapolation, node 0 (first position coordinate)";
    plot.y_label = "position";
    Series nominal;
    nominal.label = "nominal";
    nominal.color = "black";
    std::map<std::string, Series> per_model;
    for (const auto& r : rows) {
      if (r.at("node") != "0" || r.at("feature") != "0") continue;
      const double t = std::stod(r.at("t"));
      if (nominal.x.empty() || t > nominal.x.back()) {
        nominal.x.push_back(t);
        nominal.y.push_back(std::stod(r.at("nominal")));
      }
      Series& s = per_model[r.at("model")];
      s.label = r.at("model");
      s.dashed = true;
      s.x.push_back(t);
      s.y.push_back(std::stod(r.at("predicted")));
    }
    plot.series.push_back(std::move(nominal));
    for (auto& [_, s] : per_model) plot.series.push_back(std::move(s));
  } else {
    plot.title = "Forecasts, station 0";
    plot.y_label = "speed";
    Series target;
    target.label = "target";
    target.color = "black";
    std::map<std::string, Series> per_model;
    for (const auto& r : rows) {
      if (r.at("station") != "0") continue;
      const double t = std::stod(r.at("t"));
      if (target.x.empty() || t > target.x.back()) {
        target.x.push_back(t);
        target.y.push_back(std::stod(r.at("target")));
      }
      Series& s = per_model[r.at("model")];
      s.label = r.at("model");
      s.dashed = true;
      s.x.push_back(t);
      s.y.push_back(std::stod(r.at("predicted")));
    }
    plot.series.push_back(std::move(target));
    for (auto& [_, s] : per_model) plot.series.push_back(std::move(s));
  }
  write_svg(plot, run_dir + "/plots/prediction_overlay.svg");
}

void plot_reconstruction(const std::string& run_dir) {
  const auto rows = read_csv(run_dir + "/results/samples.csv");
  std::map<std::string, bool> trajectories;
  for (const auto& r : rows) trajectories[r.at("trajectory")] = true;
  static const char* species_names[6] = {"P1", "P2", "P3", "M1", "M2", "M3"};
  for (const auto& [traj, _] : trajectories) {
    LinePlot plot;
    plot.title = "Reconstruction with min-max sample bands, trajectory " + traj;
    plot.x_label = "normalized decode time";
    plot.y_label = "normalized count";
    std::map<int, Series> mean_series;
    std::map<int, Series> actual_series;
    for (const auto& r : rows) {
      if (r.at("trajectory") != traj) continue;
      const int s = std::stoi(r.at("species"));
      const double t = std::stod(r.at("t"));
      Series& m = mean_series[s];
      m.label = std::string(species_names[s]) + " mean";
      m.x.push_back(t);
      m.y.push_back(std::stod(r.at("mean")));
      m.band_lo.push_back(std::stod(r.at("lo")));
      m.band_hi.push_back(std::stod(r.at("hi")));
      const double actual = std::stod(r.at("actual"));
      if (std::isfinite(actual)) {
        Series& a = actual_series[s];
        a.label = "";
        a.color = "black";
        a.dashed = true;
        a.x.push_back(t);
        a.y.push_back(actual);
      }
    }
    for (auto& [s, m] : mean_series) {
      plot.series.push_back(std::move(m));
      if (actual_series.count(s)) plot.series.push_back(std::move(actual_series[s]));
    }
    write_svg(plot, run_dir + "/plots/reconstruction_traj" + traj + ".svg");
  }
}

void plot_attention(const std::string& run_dir) {
  const auto rows = read_csv(run_dir + "/results/attention.csv");
  if (rows.empty()) return;
  static const char* species_names[6] = {"P1", "P2", "P3", "M1", "M2", "M3"};
  for (int species = 0; species < 6; ++species) {
    LinePlot plot;
    plot.title = std::string("Attention weights around ") + species_names[species] +
                 " (drift GAT)";
    plot.x_label = "normalized decode time";
    plot.y_label = "alpha";
    std::map<std::string, Series> per_edge;
    const std::string in_prefix = "in_" + std::to_string(species) + "_";
    const std::string out_prefix = "out_" + std::to_string(species) + "_";
    for (const auto& r : rows) {
      if (r.at("trajectory") != "0") continue;
      const std::string& edge = r.at("edge");
      const bool incoming = edge.rfind(in_prefix, 0) == 0;
      const bool outgoing = edge.rfind(out_prefix, 0) == 0;
      if (!incoming && !outgoing) continue;
      Series& s = per_edge[edge];
      s.label = edge;
      s.dashed = outgoing;
      s.x.push_back(std::stod(r.at("t")));
      s.y.push_back(std::stod(r.at("alpha")));
    }
    if (per_edge.empty()) continue;
    for (auto& [_, s] : per_edge) plot.series.push_back(std::move(s));
    write_svg(plot, run_dir + "/plots/attention_" + species_names[species] + ".svg");
  }
}

}  // namespace

void emit_plots(const std::string& run_dir) {
  fs::create_directories(fs::path(run_dir) / "plots");
  const bool has_mape = fs::exists(run_dir + "/results/mape_table.csv");
  const bool has_preds = fs::exists(run_dir + "/results/predictions.csv");
  const bool has_samples = fs::exists(run_dir + "/results/samples.csv");
  const bool has_attention = fs::exists(run_dir + "/results/attention.csv");
  if (!has_mape && !has_preds && !has_samples && !has_attention) {
    throw std::runtime_error(
        "emit_plots: no prediction CSVs in " + run_dir +
        "/results (expected one of mape_table.csv, predictions.csv, samples.csv, attention.csv)");
  }
  if (has_mape) plot_mape_table(run_dir);
  if (has_preds) plot_prediction_overlay(run_dir);
  if (has_samples) plot_reconstruction(run_dir);
  if (has_attention) plot_attention(run_dir);
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

namespace {

struct CheckResult {
  std::string name;
  double rel_err;
  bool ok;
};

CheckResult check_gcde(bool second_order) {
  RngStream rng(second_order ? 402 : 401);
  ParamStore params;
  NeuralGDEModel m;
  if (second_order) {
    m.field = make_gcn_field(params, "f", {4, 3, 2}, ActivationKind::tanh());
    m.field.second_order = true;
    m.second_order = true;
  } else {
    m.input_map = make_affine_field(params, "in", {2, 3}, ActivationKind::identity(),
                                    ActivationKind::identity(), true);
    m.field = make_gcn_field(params, "f", {3, 3}, ActivationKind::tanh(), ActivationKind::tanh());
    m.output_map = make_affine_field(params, "out", {3, 2}, ActivationKind::identity(),
                                     ActivationKind::identity(), true);
  }
  for (auto& v : params.theta()) v = rng.uniform(-0.7, 0.7);
  m.solver.method = SolverMethod::dopri5;
  m.solver.rtol = 1e-9;
  m.solver.atol = 1e-11;

  Graph g(4);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  g.add_edge(0, 3);
  GraphContext ctx(g);
  Matrix x(4, 2), dl(4, 2);
  for (auto& v : x.values()) v = rng.uniform(-1, 1);
  for (auto& v : dl.values()) v = rng.uniform(-1, 1);

  const GdeGrad grad = gde_terminal_grad(m, x, ctx, params, dl);
  const auto loss = [&](const std::vector<double>& th) {
    ParamStore probe = params;
    probe.theta() = th;
    return dot(dl, gde_predict(m, x, ctx, probe));
  };
  const auto fd = finite_difference_grad(loss, params.theta(), 1e-5);
  const double err = max_rel_error(grad.dtheta, fd);
  return {second_order ? "gcde2 (second order)" : "gcde (static)", err, err < 1e-4};
}

CheckResult check_gcde_gru() {
  RngStream rng(403);
  const int n = 3, nx = 2, nz = 3;
  ParamStore params;
  HybridGDEModel m;
  m.nz = nz;
  m.jump = GCGRUSpec::create(params, "jump", nx, nz);
  m.flow = make_gcn_field(params, "flow", {nz, 3, nz}, ActivationKind::tanh());
  FieldSpec head = make_affine_field(params, "head", {nz, 2}, ActivationKind::identity(),
                                     ActivationKind::identity(), true);
  m.output_map = head;
  for (auto& v : params.theta()) v = rng.uniform(-0.7, 0.7);
  m.solver.method = SolverMethod::rk4;
  m.solver.h = 0.02;

  DynamicGraphStream stream;
  for (double t : {0.0, 0.6, 1.3}) {  // two flow intervals => two jumps after the first
    Graph g(n);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    if (t > 0.5) g.add_edge(0, 2);
    Matrix x(n, nx);
    for (auto& v : x.values()) v = rng.uniform(-1, 1);
    stream.timestamps.push_back(t);
    stream.features.push_back(std::move(x));
    stream.graphs.push_back(std::move(g));
  }
  Matrix z0(n, nz);
  for (auto& v : z0.values()) v = rng.uniform(-1, 1);

  std::vector<Matrix> dls;
  for (int k = 0; k < 3; ++k) {
    Matrix dl(n, 2);
    for (auto& v : dl.values()) v = rng.uniform(-1, 1);
    dls.push_back(dl);
  }

  const auto loss_value_and_grad = [&](const ParamStore& p, std::vector<double>* grad_out) {
    const HybridForward fwd = gcde_gru_forward(m, stream, z0, p);
    double value = 0.0;
    TimestampedLoss loss;
    loss.dc_dz.resize(3);
    std::vector<double> head_grad(p.size(), 0.0);
    for (int k = 0; k < 3; ++k) {
      value += dot(dls[k], fwd.predictions[k]);
      if (grad_out) {
        loss.dc_dz[k] =
            apply_map_vjp(m.output_map, fwd.arc.post_jump[k], dls[k], p, head_grad);
      }
    }
    if (grad_out) {
      const AdjointResult res = hybrid_adjoint_grad(m, stream, fwd, loss, p);
      *grad_out = res.dtheta;
      for (std::size_t i = 0; i < grad_out->size(); ++i) (*grad_out)[i] += head_grad[i];
    }
    return value;
  };

  std::vector<double> grad;
  loss_value_and_grad(params, &grad);
  const auto loss_fn = [&](const std::vector<double>& th) {
    ParamStore probe = params;
    probe.theta() = th;
    return loss_value_and_grad(probe, nullptr);
  };
  const auto fd = finite_difference_grad(loss_fn, params.theta(), 1e-5);
  const double err = max_rel_error(grad, fd);
  return {"gcde_gru (hybrid, 2 jumps)", err, err < 1e-4};
}

CheckResult check_gsde_unrolled() {
  RngStream rng(404);
  ParamStore params;
  LatentGDEModel m;
  Graph g(4);
  g.add_edge(0, 2);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  m.augmented = GraphContext(g);
  m.output_nodes = {0, 1};
  FieldSpec drift;
  drift.layers.push_back(GCNLayerSpec{1, 2, ActivationKind::tanh(), {params.add_view("d.w0", 1, 2)}});
  drift.layers.push_back(
      GCNLayerSpec{2, 1, ActivationKind::identity(), {params.add_view("d.w1", 2, 1)}});
  m.drift = drift;
  FieldSpec diff;
  diff.layers.push_back(GCNLayerSpec{1, 1, ActivationKind::sigmoid(), {params.add_view("g.w0", 1, 1)}});
  m.diffusion = diff;
  m.encoder = TemporalConvSpec::create(params, "enc", 4, 1);
  m.sigma_obs = 0.7;
  for (auto& v : params.theta()) v = rng.uniform(-0.7, 0.7);

  Matrix history(4, 6);
  for (int i = 0; i < 2; ++i) {
    for (int t = 0; t < 6; ++t) history(i, t) = rng.uniform(0, 1);
  }
  const std::vector<double> t_eval = {0.5, 1.0};
  const std::vector<Matrix> targets = {Matrix(2, 1, {0.3, 0.5}), Matrix(2, 1, {0.6, 0.1})};
  BrownianPath path(RngStream(811, 4), 4, 1, 0.0, 1.0);

  std::vector<double> grad(params.size(), 0.0);
  RngStream sampler(813, 2);
  latent_elbo_grad(m, history, t_eval, targets, 4, path, sampler, params, grad);

  const auto loss_fn = [&](const std::vector<double>& th) {
    ParamStore probe = params;
    probe.theta() = th;
    std::vector<double> scratch(probe.size(), 0.0);
    RngStream replay(813, 2);
    return latent_elbo_grad(m, history, t_eval, targets, 4, path, replay, probe, scratch);
  };
  const auto fd = finite_difference_grad(loss_fn, params.theta(), 1e-5);
  const double err = max_rel_error(grad, fd);
  return {"gsde (unrolled stochastic)", err, err < 1e-4};
}

}  // namespace

int run_gradcheck(bool verbose) {
  int failures = 0;
  for (const CheckResult& r :
       {check_gcde(false), check_gcde(true), check_gcde_gru(), check_gsde_unrolled()}) {
    if (!r.ok) ++failures;
    if (verbose || !r.ok) {
      std::printf("[%s] %-28s max rel err vs finite differences: %.3ated\n", r.ok ? "ok" : "FAIL",
                  r.name.c_str(), r.rel_err);
    }
  }
  return failures;
}

}  // namespace gde::cli
