#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "gde/adjoint.hpp"
#include "gde/checkpoint.hpp"
#include "gde/metrics.hpp"
#include "gde/training.hpp"

#include "experiments.hpp"

#include <json.hpp>

namespace gde::cli::particles {

namespace fs = std::filesystem;

namespace {

GraphContext context_from_positions(const Matrix& x, double radius) {
  if (x.rows() < 2) return GraphContext(Graph(x.rows()));
  std::vector<std::vector<double>> pts(x.rows());
  for (int i = 0; i < x.rows(); ++i) pts[i] = {x(i, 0), x(i, 1)};
  return GraphContext(distance_threshold_adjacency(pts, RadiusMode{radius}));
}

Matrix flatten(const Matrix& x) {
  Matrix row(1, static_cast<int>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) row.values()[i] = x.values()[i];
  return row;
}

Matrix unflatten(const Matrix& row, int n, int cols) {
  Matrix x(n, cols);
  for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] = row.values()[i];
  return x;
}

}  // namespace

Dataset generate(const Config& cfg, const std::string& run_dir) {
  ParticleParams p;
  p.n = static_cast<int>(cfg.get_long("dataset", "n", 10));
  p.alpha = cfg.get_double("dataset", "alpha", 1.0);
  p.beta = cfg.get_double("dataset", "beta", 0.5);
  p.r = cfg.get_double("dataset", "r", 1.0);
  const double horizon = cfg.get_double("dataset", "T", 5.0);
  const double dt = cfg.get_double("dataset", "dt", 1.95e-3);
  const long stride = cfg.get_long("dataset", "stride", 16);
  const auto seed = static_cast<std::uint64_t>(cfg.get_long("dataset", "seed", 1));

  RngStream rng(seed, 100);
  const Matrix z0 = particle_initial_state(p, rng);
  const ParticleRollout roll = simulate_multi_particle(p, horizon, dt, z0);

  Dataset data;
  data.radius = p.r;
  for (std::size_t k = 0; k < roll.states.size(); k += stride) {
    data.times.push_back(roll.times[k]);
    data.states.push_back(roll.states[k]);
    data.graphs.push_back(roll.graphs[k]);
  }
  data.split = data.states.size() / 2;

  const fs::path dir = fs::path(run_dir) / "data";
  fs::create_directories(dir / "adjacency");
  DynamicGraphStream stream;
  stream.timestamps = data.times;
  stream.features = data.states;
  stream.graphs = data.graphs;
  save_stream_csv(stream, (dir / "states.csv").string());
  for (std::size_t k = 0; k < data.graphs.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof(name), "step_%06zu.edges", k);
    save_edge_list(data.graphs[k], (dir / "adjacency" / name).string());
  }
  nlohmann::json meta;
  meta["n"] = p.n;
  meta["radius"] = p.r;
  meta["alpha"] = p.alpha;
  meta["beta"] = p.beta;
  meta["dt"] = dt;
  meta["stride"] = stride;
  meta["split"] = data.split;
  meta["seed"] = seed;
  std::ofstream(dir / "dataset.json") << meta.dump(2) << "\n";
  return data;
}

Dataset load(const std::string& run_dir) {
  const fs::path dir = fs::path(run_dir) / "data";
  nlohmann::json meta;
  std::ifstream meta_in(dir / "dataset.json");
  if (!meta_in) throw std::runtime_error("particles: no dataset at " + dir.string());
  meta_in >> meta;
  const int n = meta.at("n").get<int>();

  // graphs first, then the stream rides on them
  std::vector<Graph> graphs;
  for (std::size_t k = 0;; ++k) {
    char name[64];
    std::snprintf(name, sizeof(name), "step_%06zu.edges", k);
    const fs::path p = dir / "adjacency" / name;
    if (!fs::exists(p)) break;
    graphs.push_back(load_edge_list(p.string(), n));
  }
  const DynamicGraphStream stream = load_stream_csv((dir / "states.csv").string(), graphs);
  Dataset data;
  data.times = stream.timestamps;
  data.states = stream.features;
  data.graphs = stream.graphs;
  data.split = meta.at("split").get<std::size_t>();
  data.radius = meta.at("radius").get<double>();
  return data;
}

Family build_family(const std::string& name, const Config& cfg, int n_nodes,
                    std::uint64_t init_seed) {
  Family fam;
  fam.name = name;
  fam.n_nodes = n_nodes;
  const int hidden = static_cast<int>(cfg.get_long("model", "hidden", 16));
  const int hidden2 = static_cast<int>(cfg.get_long("model", "hidden2", 32));
  const int mlp_mult = static_cast<int>(cfg.get_long("model", "mlp_hidden_mult", 8));
  const double h = cfg.get_double("model", "h", 0.25);

  SolverConfig solver;
  solver.method = SolverMethod::rk4;
  solver.h = h;
  if (cfg.get_or("model", "solver", "rk4") == "dopri5") {
    solver.method = SolverMethod::dopri5;
    solver.rtol = cfg.get_double("model", "rtol", 1e-6);
    solver.atol = cfg.get_double("model", "atol", 1e-8);
  }

  if (name == "gcde") {
    fam.model.field = make_gcn_field(fam.params, "field", {4, hidden, hidden, 4},
                                     ActivationKind::tanh());
    fam.model.solver = solver;
  } else if (name == "gcde2") {
    fam.model.field = make_gcn_field(fam.params, "field", {8, hidden2, hidden2, 4},
                                     ActivationKind::tanh());
    fam.model.field.second_order = true;
    fam.model.second_order = true;
    fam.model.solver = solver;
  } else if (name == "node") {
    const int d = 4 * n_nodes;
    fam.model.field = make_affine_field(fam.params, "field", {d, mlp_mult * n_nodes,
                                        mlp_mult * n_nodes, d},
                                        ActivationKind::tanh());
    fam.model.solver = solver;
  } else if (name == "static") {
    const int d = 4 * n_nodes;
    fam.static_stack = make_affine_field(fam.params, "net", {d, mlp_mult * n_nodes,
                                         mlp_mult * n_nodes, d},
                                         ActivationKind::tanh());
  } else {
    throw std::runtime_error("particles: unknown model family '" + name + "'");
  }
  RngStream init(init_seed, 7);
  fam.params.init_all_uniform_scaled(init);
  return fam;
}

Matrix predict_step(const Family& fam, const Matrix& x, double radius) {
  static const GraphContext no_graph{Graph(1)};
  if (fam.name == "static") {
    const Matrix out = field_eval(fam.static_stack, 0.0, flatten(x), fam.params, no_graph);
    return unflatten(out, x.rows(), x.cols());
  }
  if (fam.name == "node") {
    const Matrix out = gde_predict(fam.model, flatten(x), no_graph, fam.params);
    return unflatten(out, x.rows(), x.cols());
  }
  return gde_predict(fam.model, x, context_from_positions(x, radius), fam.params);
}

double pair_mse_grad(Family& fam, const Matrix& x, const Matrix& target, double radius,
                     std::vector<double>& grad) {
  static const GraphContext no_graph{Graph(1)};
  if (fam.name == "static") {
    FieldTape tape;
    const Matrix fx = flatten(x);
    const Matrix pred = field_eval(fam.static_stack, 0.0, fx, fam.params, no_graph, &tape);
    const Matrix ft = flatten(target);
    double loss = 0.0;
    Matrix dl(pred.rows(), pred.cols());
    const double inv = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double e = pred.values()[i] - ft.values()[i];
      loss += e * e * inv;
      dl.values()[i] = 2.0 * e * inv;
    }
    field_vjp_tape(fam.static_stack, tape, dl, fam.params, no_graph, grad);
    return loss;
  }
  if (fam.name == "node") {
    return gde_mse_grad(fam.model, flatten(x), flatten(target), no_graph, fam.params, grad);
  }
  return gde_mse_grad(fam.model, x, target, context_from_positions(x, radius), fam.params, grad);
}

namespace {

std::vector<std::string> family_list(const Config& cfg) {
  std::vector<std::string> out;
  std::string families = cfg.get_or("training", "families", "gcde,node,static");
  std::string item;
  std::istringstream ss(families);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void train(const Config& cfg, const std::string& run_dir, Manifest& manifest) {
  const Dataset data = load(run_dir);
  const int epochs = static_cast<int>(cfg.get_long("training", "epochs", 200));
  const double lr = cfg.get_double("training", "lr", 0.01);
  const auto seeds = cfg.get_seed_list("training", "seeds", {1});
  const ScheduleSpec schedule = ScheduleSpec::constant(lr);

  fs::create_directories(fs::path(run_dir) / "checkpoints");
  fs::create_directories(fs::path(run_dir) / "logs");

  for (const auto& name : family_list(cfg)) {
    for (const auto seed : seeds) {
      Family fam = build_family(name, cfg, data.states[0].rows(), seed);
      AdamState adam(fam.params.size());
      const std::string tag = name + "_seed" + std::to_string(seed);
      EpochLogger log(run_dir + "/logs/train_" + tag + ".csv");
      const auto t_begin = std::chrono::steady_clock::now();

      for (int epoch = 0; epoch < epochs; ++epoch) {
        std::vector<double> grad(fam.params.size(), 0.0);
        double loss = 0.0;
        long pairs = 0;
        for (std::size_t i = 0; i + 1 < data.split; ++i) {
          loss += pair_mse_grad(fam, data.states[i], data.states[i + 1], data.radius, grad);
          ++pairs;
        }
        for (auto& g : grad) g /= static_cast<double>(pairs);
        loss /= static_cast<double>(pairs);
        const double rate = lr_schedule(schedule, epoch);
        adam_step(adam, fam.params.theta(), grad, rate);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
        log.log(epoch, "train", loss, 0.0, std::sqrt(loss), rate, seconds);
      }
      nlohmann::json desc;
      desc["experiment"] = "particles";
      desc["family"] = name;
      desc["n"] = data.states[0].rows();
      save_checkpoint(run_dir + "/checkpoints/" + tag + ".ckpt", desc.dump(), fam.params, {seed});
      manifest.add_artifact("checkpoints/" + tag + ".ckpt");
      manifest.add_artifact("logs/train_" + tag + ".csv");
    }
  }
}

void evaluate(const Config& cfg, const std::string& run_dir, Manifest& manifest) {
  const Dataset data = load(run_dir);
  const auto seeds = cfg.get_seed_list("training", "seeds", {1});
  std::vector<int> k_list;
  {
    std::istringstream ss(cfg.get_or("eval", "k_list", "1,3,5,10,20"));
    std::string item;
    while (std::getline(ss, item, ',')) k_list.push_back(std::stoi(item));
  }
  const std::vector<Matrix> test(data.states.begin() + data.split, data.states.end());

  fs::create_directories(fs::path(run_dir) / "results");
  std::ofstream table(run_dir + "/results/mape_table.csv");
  table << "model,seed,k,mape\n";
  std::ofstream preds(run_dir + "/results/predictions.csv");
  preds << "model,t,node,feature,nominal,predicted\n";
  char buf[64];

  for (const auto& name : family_list(cfg)) {
    for (const auto seed : seeds) {
      const std::string tag = name + "_seed" + std::to_string(seed);
      Family fam = build_family(name, cfg, data.states[0].rows(), seed);
      restore_params(load_checkpoint(run_dir + "/checkpoints/" + tag + ".ckpt"), fam.params);
      const StepModel step = [&](const Matrix& x) { return predict_step(fam, x, data.radius); };
      for (int k : k_list) {
        const double mape = extrapolation_eval(step, test, k);
        std::snprintf(buf, sizeof(buf), "%.10g", mape);
        table << name << "," << seed << "," << k << "," << buf << "\n";
      }

      // 5-step rollout trace for the overlay plot (first seed only)
      if (seed == seeds[0]) {
        Matrix input = test[0];
        int since_sync = 0;
        const int k_trace = 5;
        for (std::size_t i = 0; i + 1 < test.size(); ++i) {
          const Matrix pred = predict_step(fam, input, data.radius);
          for (int node = 0; node < pred.rows(); ++node) {
            for (int f = 0; f < pred.cols(); ++f) {
              std::snprintf(buf, sizeof(buf), "%.10g", test[i + 1](node, f));
              preds << name << "," << data.times[data.split + i + 1] << "," << node << "," << f
                    << "," << buf;
              std::snprintf(buf, sizeof(buf), "%.10g", pred(node, f));
              preds << "," << buf << "\n";
            }
          }
          if (++since_sync == k_trace) {
            input = test[i + 1];
            since_sync = 0;
          } else {
            input = pred;
          }
        }
      }
    }
  }
  manifest.add_artifact("results/mape_table.csv");
  manifest.add_artifact("results/predictions.csv");
}

}  // namespace gde::cli::particles
