#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "gde/checkpoint.hpp"
#include "gde/metrics.hpp"
#include "gde/training.hpp"

#include "experiments.hpp"

#include <json.hpp>

namespace gde::cli::hybrid {

namespace fs = std::filesystem;

namespace {

/// One-node stream carrying all stations plus the shared time features.
DynamicGraphStream flatten_stream(const DynamicGraphStream& stream) {
  DynamicGraphStream flat;
  const Graph lone(1);
  for (std::size_t k = 0; k < stream.size(); ++k) {
    const Matrix& x = stream.features[k];
    const int n = x.rows();
    Matrix row(1, n + 2);
    for (int i = 0; i < n; ++i) row(0, i) = x(i, 0);
    row(0, n) = x(0, 1);      // gap feature (shared across stations)
    row(0, n + 1) = x(0, 2);  // sine time encoding
    flat.timestamps.push_back(stream.timestamps[k]);
    flat.features.push_back(std::move(row));
    flat.graphs.push_back(lone);
  }
  return flat;
}

}  // namespace

Dataset generate(const Config& cfg, const std::string& run_dir) {
  TrafficConfig tc;
  tc.n_stations = static_cast<int>(cfg.get_long("dataset", "n_stations", 20));
  tc.days = static_cast<int>(cfg.get_long("dataset", "days", 3));
  tc.ar = cfg.get_double("dataset", "ar", 0.7);
  tc.coupling = cfg.get_double("dataset", "coupling", 0.25);
  tc.noise_std = cfg.get_double("dataset", "noise_std", 2.0);
  const double keep = cfg.get_double("dataset", "keep_prob", 0.3);
  const auto seed = static_cast<std::uint64_t>(cfg.get_long("dataset", "seed", 1));

  RngStream rng(seed, 200);
  const TrafficData traffic = synth_traffic(tc, rng);

  // train: all but the last day; test: the last day
  const int split = (tc.days - 1) * tc.steps_per_day;
  DynamicGraphStream train_reg, test_reg;
  for (std::size_t k = 0; k < traffic.stream.size(); ++k) {
    auto& dst = (static_cast<int>(k) < split) ? train_reg : test_reg;
    dst.timestamps.push_back(traffic.stream.timestamps[k]);
    dst.features.push_back(traffic.stream.features[k]);
    dst.graphs.push_back(traffic.stream.graphs[k]);
  }

  // normalize speeds with train statistics, then undersample
  double mean = 0.0, var = 0.0;
  long count = 0;
  for (const auto& x : train_reg.features) {
    for (double v : x.values()) {
      mean += v;
      ++count;
    }
  }
  mean /= static_cast<double>(count);
  for (const auto& x : train_reg.features) {
    for (double v : x.values()) var += (v - mean) * (v - mean);
  }
  const double std_dev = std::sqrt(var / static_cast<double>(count));
  auto normalize = [&](DynamicGraphStream& s) {
    for (auto& x : s.features) {
      for (auto& v : x.values()) v = (v - mean) / std_dev;
    }
  };
  normalize(train_reg);
  normalize(test_reg);

  Dataset data;
  RngStream under_train = rng.split(1);
  RngStream under_test = rng.split(2);
  data.train = undersample_stream(train_reg, keep, tc.steps_per_day, under_train);
  data.test = undersample_stream(test_reg, keep, tc.steps_per_day, under_test);
  data.graph = traffic.graph;
  data.speed_mean = mean;
  data.speed_std = std_dev;

  const fs::path dir = fs::path(run_dir) / "data";
  fs::create_directories(dir);
  save_stream_csv(data.train, (dir / "train.csv").string());
  save_stream_csv(data.test, (dir / "test.csv").string());
  save_edge_list(data.graph, (dir / "graph.edges").string());
  nlohmann::json meta;
  meta["n_stations"] = tc.n_stations;
  meta["keep_prob"] = keep;
  meta["speed_mean"] = mean;
  meta["speed_std"] = std_dev;
  meta["seed"] = seed;
  std::ofstream(dir / "dataset.json") << meta.dump(2) << "\n";
  return data;
}

Dataset load(const std::string& run_dir) {
  const fs::path dir = fs::path(run_dir) / "data";
  nlohmann::json meta;
  std::ifstream meta_in(dir / "dataset.json");
  if (!meta_in) throw std::runtime_error("hybrid: no dataset at " + dir.string());
  meta_in >> meta;
  Dataset data;
  data.graph = load_edge_list((dir / "graph.edges").string(), meta.at("n_stations").get<int>());
  data.train = load_stream_csv((dir / "train.csv").string(), {data.graph});
  data.test = load_stream_csv((dir / "test.csv").string(), {data.graph});
  data.speed_mean = meta.at("speed_mean").get<double>();
  data.speed_std = meta.at("speed_std").get<double>();
  return data;
}

Family build_family(const std::string& name, const Config& cfg, int n_stations,
                    std::uint64_t init_seed) {
  Family fam;
  fam.name = name;
  const int nz = static_cast<int>(cfg.get_long("model", "nz", 8));
  const int gru_hidden = static_cast<int>(cfg.get_long("model", "gru_hidden", 50));
  const int head_hidden = static_cast<int>(cfg.get_long("model", "head_hidden", 16));

  SolverConfig solver;
  solver.method = SolverMethod::dopri5;
  solver.rtol = cfg.get_double("model", "rtol", 1e-3);
  solver.atol = cfg.get_double("model", "atol", 1e-3);
  solver.h = cfg.get_double("model", "h", 0.25);
  if (cfg.get_or("model", "solver", "dopri5") == "rk4") {
    solver.method = SolverMethod::rk4;
  }

  if (name == "gcde_gru" || name == "gcgru") {
    fam.model.nz = nz;
    fam.model.jump = GCGRUSpec::create(fam.params, "jump", 3, nz);
    if (name == "gcde_gru") {
      // two GCN layers, one tanh and one linear
      fam.model.flow = make_gcn_field(fam.params, "flow", {nz, nz, nz}, ActivationKind::tanh());
    }
    fam.model.output_map = make_affine_field(fam.params, "head", {nz, head_hidden, 1},
                                             ActivationKind::relu());
    fam.model.solver = solver;
  } else if (name == "gru") {
    fam.flatten = true;
    fam.model.nz = gru_hidden;
    fam.model.jump = GCGRUSpec::create(fam.params, "jump", n_stations + 2, gru_hidden);
    fam.model.output_map = make_affine_field(
        fam.params, "head", {gru_hidden, 2 * head_hidden, n_stations}, ActivationKind::relu());
    fam.model.solver = solver;
  } else {
    throw std::runtime_error("hybrid: unknown model family '" + name + "'");
  }
  RngStream init(init_seed, 11);
  fam.params.init_all_uniform_scaled(init);
  return fam;
}

namespace {

DynamicGraphStream window(const DynamicGraphStream& s, std::size_t start, std::size_t len) {
  DynamicGraphStream w;
  for (std::size_t k = start; k < start + len; ++k) {
    w.timestamps.push_back(s.timestamps[k]);
    w.features.push_back(s.features[k]);
    w.graphs.push_back(s.graphs[k]);
  }
  return w;
}

struct WindowLoss {
  double mse = 0.0;
  Matrix prediction;  // stations x 1, normalized
};

/// Forward + gradient for one window: inputs [j..j+len-1], target = speeds at
/// j+len. The loss sits on the last prediction only.
WindowLoss window_grad(Family& fam, const DynamicGraphStream& stream, std::size_t start,
                       std::size_t len, std::vector<double>* grad) {
  const DynamicGraphStream w = window(stream, start, len);
  const Matrix& target_full = stream.features[start + len];
  const Matrix z0(w.features[0].rows(), fam.model.nz);

  const HybridForward fwd = gcde_gru_forward(fam.model, w, z0, fam.params);
  const Matrix& pred = fwd.predictions.back();  // n x 1 (or 1 x stations flattened)

  // target: speed columns only (time features excluded from the loss)
  Matrix target(pred.rows(), pred.cols());
  if (fam.flatten) {
    for (int j = 0; j < pred.cols(); ++j) target(0, j) = target_full(0, j);
  } else {
    for (int i = 0; i < pred.rows(); ++i) target(i, 0) = target_full(i, 0);
  }

  WindowLoss out;
  Matrix dl(pred.rows(), pred.cols());
  const double inv = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred.values()[i] - target.values()[i];
    out.mse += e * e * inv;
    dl.values()[i] = 2.0 * e * inv;
  }
  out.prediction = pred;

  if (grad) {
    TimestampedLoss loss;
    loss.dc_dz.resize(w.size());
    // chain the head VJP at the final jump state
    Matrix dz = apply_map_vjp(fam.model.output_map, fwd.arc.post_jump.back(), dl, fam.params,
                              *grad);
    loss.dc_dz.back() = std::move(dz);
    const AdjointResult res = hybrid_adjoint_grad(fam.model, w, fwd, loss, fam.params);
    for (std::size_t i = 0; i < grad->size(); ++i) (*grad)[i] += res.dtheta[i];
  }
  return out;
}

std::vector<std::string> family_list(const Config& cfg) {
  std::vector<std::string> out;
  std::istringstream ss(cfg.get_or("training", "families", "gcde_gru,gcgru,gru"));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void train(const Config& cfg, const std::string& run_dir, Manifest& manifest) {
  const Dataset data = load(run_dir);
  const int epochs = static_cast<int>(cfg.get_long("training", "epochs", 40));
  const double lr = cfg.get_double("training", "lr", 0.01);
  const int t0 = static_cast<int>(cfg.get_long("training", "cosine_t0", 10));
  const std::size_t seq_len = static_cast<std::size_t>(cfg.get_long("training", "seq_len", 5));
  const std::size_t batch = static_cast<std::size_t>(cfg.get_long("training", "batch", 16));
  const auto seeds = cfg.get_seed_list("training", "seeds", {1});
  const ScheduleSpec schedule = ScheduleSpec::cosine(lr, 0.0, t0);

  fs::create_directories(fs::path(run_dir) / "checkpoints");
  fs::create_directories(fs::path(run_dir) / "logs");
  const int n_stations = data.train.features[0].rows();

  for (const auto& name : family_list(cfg)) {
    const bool flatten = (name == "gru");
    const DynamicGraphStream& stream = flatten ? flatten_stream(data.train) : data.train;
    const std::size_t n_windows = stream.size() - seq_len;

    for (const auto seed : seeds) {
      Family fam = build_family(name, cfg, n_stations, seed);
      AdamState adam(fam.params.size());
      RngStream shuffle_rng(seed, 31);
      const std::string tag = name + "_seed" + std::to_string(seed);
      EpochLogger log(run_dir + "/logs/train_" + tag + ".csv");
      const auto t_begin = std::chrono::steady_clock::now();

      std::vector<std::size_t> order(n_windows);
      std::iota(order.begin(), order.end(), 0);
      for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = n_windows; i-- > 1;) {
          std::swap(order[i], order[shuffle_rng.uniform_index(i + 1)]);
        }
        const double rate = lr_schedule(schedule, epoch);
        double loss_sum = 0.0;
        std::size_t done = 0;
        while (done < n_windows) {
          const std::size_t take = std::min(batch, n_windows - done);
          std::vector<double> grad(fam.params.size(), 0.0);
          for (std::size_t b = 0; b < take; ++b) {
            loss_sum += window_grad(fam, stream, order[done + b], seq_len, &grad).mse;
          }
          for (auto& g : grad) g /= static_cast<double>(take);
          adam_step(adam, fam.params.theta(), grad, rate);
          done += take;
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
        log.log(epoch, "train", loss_sum / static_cast<double>(n_windows), 0.0,
                std::sqrt(loss_sum / static_cast<double>(n_windows)), rate, seconds);
      }
      nlohmann::json desc;
      desc["experiment"] = "hybrid_forecast";
      desc["family"] = name;
      desc["n_stations"] = n_stations;
      save_checkpoint(run_dir + "/checkpoints/" + tag + ".ckpt", desc.dump(), fam.params, {seed});
      manifest.add_artifact("checkpoints/" + tag + ".ckpt");
      manifest.add_artifact("logs/train_" + tag + ".csv");
    }
  }
}

void evaluate(const Config& cfg, const std::string& run_dir, Manifest& manifest) {
  const Dataset data = load(run_dir);
  const std::size_t seq_len = static_cast<std::size_t>(cfg.get_long("training", "seq_len", 5));
  const auto seeds = cfg.get_seed_list("training", "seeds", {1});
  const int n_stations = data.train.features[0].rows();

  fs::create_directories(fs::path(run_dir) / "results");
  std::ofstream table(run_dir + "/results/metrics.csv");
  table << "model,seed,mape,rmse,mse,mape_printed\n";
  std::ofstream preds_csv(run_dir + "/results/predictions.csv");
  preds_csv << "model,t,station,target,predicted\n";
  char buf[64];

  for (const auto& name : family_list(cfg)) {
    const bool flatten = (name == "gru");
    const DynamicGraphStream& stream = flatten ? flatten_stream(data.test) : data.test;
    const std::size_t n_windows = stream.size() - seq_len;

    for (const auto seed : seeds) {
      const std::string tag = name + "_seed" + std::to_string(seed);
      Family fam = build_family(name, cfg, n_stations, seed);
      restore_params(load_checkpoint(run_dir + "/checkpoints/" + tag + ".ckpt"), fam.params);

      Matrix targets(static_cast<int>(n_windows), n_stations);
      Matrix predictions(static_cast<int>(n_windows), n_stations);
      for (std::size_t w = 0; w < n_windows; ++w) {
        const WindowLoss res = window_grad(fam, stream, w, seq_len, nullptr);
        for (int s = 0; s < n_stations; ++s) {
          const double raw_target =
              (flatten ? stream.features[w + seq_len](0, s) : stream.features[w + seq_len](s, 0));
          const double pred_norm = flatten ? res.prediction(0, s) : res.prediction(s, 0);
          targets(static_cast<int>(w), s) = raw_target * data.speed_std + data.speed_mean;
          predictions(static_cast<int>(w), s) = pred_norm * data.speed_std + data.speed_mean;
        }
      }
      const MetricsReport rep = forecast_metrics(targets, predictions);
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g", rep.mape, rep.rmse, rep.mse,
                    rep.mape_printed);
      table << name << "," << seed << "," << buf << "\n";

      if (seed == seeds[0]) {
        for (std::size_t w = 0; w < n_windows; ++w) {
          for (int s = 0; s < std::min(n_stations, 4); ++s) {
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g", targets(static_cast<int>(w), s),
                          predictions(static_cast<int>(w), s));
            preds_csv << name << "," << stream.timestamps[w + seq_len] << "," << s << "," << buf
                      << "\n";
          }
        }
      }
    }
  }
  manifest.add_artifact("results/metrics.csv");
  manifest.add_artifact("results/predictions.csv");
}

}  // namespace gde::cli::hybrid
