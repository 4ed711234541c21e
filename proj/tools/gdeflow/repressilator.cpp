#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gde/checkpoint.hpp"
#include "gde/training.hpp"

#include "experiments.hpp"

#include <json.hpp>

namespace gde::cli::repressilator {

namespace fs = std::filesystem;

namespace {

void save_trajectory_csv(const CountTrajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("repressilator: cannot open " + path);
  out << "t,node,f0\n";
  char buf[64];
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    for (std::size_t s = 0; s < traj.counts[k].size(); ++s) {
      std::snprintf(buf, sizeof(buf), "%.17g,%zu,%.17g", traj.times[k], s, traj.counts[k][s]);
      out << buf << "\n";
    }
  }
}

CountTrajectory load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("repressilator: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  CountTrajectory traj;
  double cur_t = -1.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t, v;
    long node;
    if (std::sscanf(line.c_str(), "%lg,%ld,%lg", &t, &node, &v) != 3) {
      throw std::runtime_error("repressilator: bad row in " + path + ": " + line);
    }
    if (traj.times.empty() || t != cur_t) {
      traj.times.push_back(t);
      traj.counts.emplace_back();
      cur_t = t;
    }
    traj.counts.back().push_back(v);
  }
  return traj;
}

}  // namespace

Dataset generate(const Config& cfg, const std::string& run_dir) {
  const auto seed = static_cast<std::uint64_t>(cfg.get_long("dataset", "seed", 1));
  const long n_train = cfg.get_long("dataset", "n_train", 10);
  const long n_test = cfg.get_long("dataset", "n_test", 10);
  const double horizon = cfg.get_double("dataset", "T", 300.0);
  const double tau = cfg.get_double("dataset", "tau", 0.5);

  const ReactionNetwork net = repressilator_network();
  const std::vector<double> init = repressilator_initial();
  RngStream rng(seed, 300);

  Dataset data;
  const fs::path dir = fs::path(run_dir) / "data";
  fs::create_directories(dir);
  for (long i = 0; i < n_train + n_test; ++i) {
    RngStream traj_rng = rng.split(static_cast<std::uint64_t>(i));
    CountTrajectory traj = tau_leap(net, init, horizon, tau, traj_rng);
    char name[64];
    std::snprintf(name, sizeof(name), "traj_%03ld.csv", i);
    save_trajectory_csv(traj, (dir / name).string());
    if (i < n_train) {
      data.train.push_back(std::move(traj));
    } else {
      data.test.push_back(std::move(traj));
    }
  }

  // per-species min-max over the train split
  data.feature_min.assign(6, 1e300);
  data.feature_max.assign(6, -1e300);
  for (const auto& traj : data.train) {
    for (const auto& state : traj.counts) {
      for (int s = 0; s < 6; ++s) {
        data.feature_min[s] = std::min(data.feature_min[s], state[s]);
        data.feature_max[s] = std::max(data.feature_max[s], state[s]);
      }
    }
  }
  for (int s = 0; s < 6; ++s) {
    if (data.feature_max[s] <= data.feature_min[s]) data.feature_max[s] = data.feature_min[s] + 1;
  }
  nlohmann::json meta;
  meta["seed"] = seed;
  meta["n_train"] = n_train;
  meta["n_test"] = n_test;
  meta["T"] = horizon;
  meta["tau"] = tau;
  meta["feature_min"] = data.feature_min;
  meta["feature_max"] = data.feature_max;
  std::ofstream(dir / "dataset.json") << meta.dump(2) << "\n";
  return data;
}

Dataset load(const std::string& run_dir) {
  const fs::path dir = fs::path(run_dir) / "data";
  nlohmann::json meta;
  std::ifstream meta_in(dir / "dataset.json");
  if (!meta_in) throw std::runtime_error("repressilator: no dataset at " + dir.string());
  meta_in >> meta;
  Dataset data;
  const long n_train = meta.at("n_train").get<long>();
  const long n_test = meta.at("n_test").get<long>();
  for (long i = 0; i < n_train + n_test; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "traj_%03ld.csv", i);
    CountTrajectory traj = load_trajectory_csv((dir / name).string());
    if (i < n_train) {
      data.train.push_back(std::move(traj));
    } else {
      data.test.push_back(std::move(traj));
    }
  }
  data.feature_min = meta.at("feature_min").get<std::vector<double>>();
  data.feature_max = meta.at("feature_max").get<std::vector<double>>();
  return data;
}

namespace {

struct Prepared {
  Matrix history;               // 18 x T_hist, latent rows zero
  std::vector<double> t_eval;   // normalized decode grid in (0, 1]
  std::vector<Matrix> targets;  // 6 x 1 per eval time, normalized
};

/// Conditions on the first half, reconstructs the second half: history and
/// targets subsampled by `stride` leaps, decode time normalized to [0, 1].
Prepared prepare(const CountTrajectory& traj, const Dataset& data, long stride) {
  const std::size_t n_points = traj.times.size();
  const std::size_t half = n_points / 2;
  Prepared prep;

  std::vector<std::size_t> hist_idx;
  for (std::size_t k = 0; k <= half; k += stride) hist_idx.push_back(k);
  prep.history = Matrix(18, static_cast<int>(hist_idx.size()));
  for (std::size_t c = 0; c < hist_idx.size(); ++c) {
    for (int s = 0; s < 6; ++s) {
      const double v = traj.counts[hist_idx[c]][s];
      prep.history(s, static_cast<int>(c)) =
          (v - data.feature_min[s]) / (data.feature_max[s] - data.feature_min[s]);
    }
  }
  const double t_half = traj.times[half];
  const double t_end = traj.times.back();
  for (std::size_t k = half + stride; k < n_points; k += stride) {
    prep.t_eval.push_back((traj.times[k] - t_half) / (t_end - t_half));
    Matrix y(6, 1);
    for (int s = 0; s < 6; ++s) {
      y(s, 0) = (traj.counts[k][s] - data.feature_min[s]) /
                (data.feature_max[s] - data.feature_min[s]);
    }
    prep.targets.push_back(std::move(y));
  }
  return prep;
}

LatentGDEModel build_model(const Config& cfg, ParamStore& params) {
  LatentGDEModel m = make_repressilator_model(params, "rep");
  m.sigma_obs = cfg.get_double("model", "sigma_obs", 0.1);
  m.diffusion_scale = cfg.get_double("model", "diffusion_scale", 0.3);
  return m;
}

}  // namespace

void train(const Config& cfg, const std::string& run_dir, Manifest& manifest) {
  const Dataset data = load(run_dir);
  const int epochs = static_cast<int>(cfg.get_long("training", "epochs", 300));
  const long n_use = cfg.get_long("training", "n_trajectories",
                                  static_cast<long>(data.train.size()));
  const long stride = cfg.get_long("training", "stride", 5);
  const int substeps = static_cast<int>(cfg.get_long("training", "substeps", 1));
  const auto seeds = cfg.get_seed_list("training", "seeds", {1});
  const ScheduleSpec schedule = ScheduleSpec::one_cycle(
      cfg.get_double("training", "lr", 1e-2),
      static_cast<int>(cfg.get_long("training", "peak_epoch", epochs * 3 / 10)),
      cfg.get_double("training", "lr_min", 4e-4), epochs);

  fs::create_directories(fs::path(run_dir) / "checkpoints");
  fs::create_directories(fs::path(run_dir) / "logs");

  std::vector<Prepared> prepared;
  for (long i = 0; i < n_use && i < static_cast<long>(data.train.size()); ++i) {
    prepared.push_back(prepare(data.train[i], data, stride));
  }

  for (const auto seed : seeds) {
    ParamStore params;
    LatentGDEModel model = build_model(cfg, params);
    RngStream init(seed, 17);
    params.init_all_uniform_scaled(init);
    AdamState adam(params.size());
    RngStream noise(seed, 23);
    const std::string tag = "latent_seed" + std::to_string(seed);
    EpochLogger log(run_dir + "/logs/train_" + tag + ".csv");
    const auto t_begin = std::chrono::steady_clock::now();

    for (int epoch = 0; epoch < epochs; ++epoch) {
      std::vector<double> grad(params.size(), 0.0);
      double loss = 0.0;
      for (std::size_t i = 0; i < prepared.size(); ++i) {
        const Prepared& prep = prepared[i];
        BrownianPath path(noise.split(epoch * 1000 + static_cast<int>(i)), 18, 1, 0.0,
                          prep.t_eval.back());
        RngStream sampler = noise.split(500000 + epoch * 1000 + static_cast<int>(i));
        loss += latent_elbo_grad(model, prep.history, prep.t_eval, prep.targets, substeps, path,
                                 sampler, params, grad);
      }
      const double inv = 1.0 / static_cast<double>(prepared.size());
      for (auto& g : grad) g *= inv;
      loss *= inv;
      const double rate = lr_schedule(schedule, epoch);
      adam_step(adam, params.theta(), grad, rate);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
      log.log(epoch, "train", loss, 0.0, 0.0, rate, seconds);
    }
    nlohmann::json desc;
    desc["experiment"] = "repressilator";
    desc["family"] = "latent_gsde";
    save_checkpoint(run_dir + "/checkpoints/" + tag + ".ckpt", desc.dump(), params, {seed});
    manifest.add_artifact("checkpoints/" + tag + ".ckpt");
    manifest.add_artifact("logs/train_" + tag + ".csv");
  }
}

void evaluate(const Config& cfg, const std::string& run_dir, Manifest& manifest) {
  const Dataset data = load(run_dir);
  const long stride = cfg.get_long("training", "stride", 5);
  const auto seeds = cfg.get_seed_list("training", "seeds", {1});
  const int n_samples = static_cast<int>(cfg.get_long("eval", "n_samples", 30));
  const double extrapolate = cfg.get_double("eval", "extrapolate_factor", 1.25);
  const long n_plot = cfg.get_long("eval", "n_plot_trajectories", 2);

  ParamStore params;
  LatentGDEModel model = build_model(cfg, params);
  const std::string tag = "latent_seed" + std::to_string(seeds[0]);
  restore_params(load_checkpoint(run_dir + "/checkpoints/" + tag + ".ckpt"), params);

  fs::create_directories(fs::path(run_dir) / "results");
  std::ofstream samples_csv(run_dir + "/results/samples.csv");
  samples_csv << "trajectory,t,species,actual,mean,lo,hi\n";
  std::ofstream attention_csv(run_dir + "/results/attention.csv");
  attention_csv << "trajectory,t,edge,alpha\n";
  std::ofstream metrics_csv(run_dir + "/results/metrics.csv");
  metrics_csv << "trajectory,mse_norm\n";
  char buf[128];

  // find the GAT layer for attention traces
  const GATLayerSpec* gat = nullptr;
  for (const auto& layer : model.drift.layers) {
    if (const auto* g = std::get_if<GATLayerSpec>(&layer)) gat = g;
  }

  for (long ti = 0; ti < static_cast<long>(data.test.size()); ++ti) {
    const Prepared prep = prepare(data.test[ti], data, stride);
    const PosteriorParams post = latent_encode(model, prep.history, params);
    // extended decode grid for extrapolation
    std::vector<double> t_ext = prep.t_eval;
    const double step = prep.t_eval.size() > 1 ? prep.t_eval[1] - prep.t_eval[0] : 0.1;
    while (t_ext.back() < extrapolate - 1e-9) t_ext.push_back(t_ext.back() + step);

    std::vector<std::vector<Matrix>> draws;
    for (int s = 0; s < n_samples; ++s) {
      BrownianPath path(RngStream(9000 + static_cast<std::uint64_t>(ti), s), 18, 1, 0.0,
                        t_ext.back());
      RngStream sampler(7000 + static_cast<std::uint64_t>(ti), s);
      const Matrix z0 = sample_posterior(post, sampler);
      draws.push_back(gsde_decode(model, z0, t_ext, path, params));
    }

    double mse = 0.0;
    long mse_count = 0;
    if (ti < n_plot) {
      for (std::size_t k = 0; k < t_ext.size(); ++k) {
        for (int s = 0; s < 6; ++s) {
          double mean = 0.0, lo = 1e300, hi = -1e300;
          for (const auto& d : draws) {
            const double v = d[k](s, 0);
            mean += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
          mean /= n_samples;
          const bool in_range = k < prep.targets.size();
          const double actual = in_range ? prep.targets[k](s, 0) : std::nan("");
          const double t_abs = t_ext[k];
          if (in_range) {
            mse += (mean - actual) * (mean - actual);
            ++mse_count;
          }
          std::snprintf(buf, sizeof(buf), "%ld,%.10g,%d,%.10g,%.10g,%.10g,%.10g",
                        ti, t_abs, s, actual, mean, lo, hi);
          samples_csv << buf << "\n";
        }
      }
    } else {
      for (std::size_t k = 0; k < prep.targets.size(); ++k) {
        for (int s = 0; s < 6; ++s) {
          double mean = 0.0;
          for (const auto& d : draws) mean += d[k](s, 0);
          mean /= n_samples;
          mse += (mean - prep.targets[k](s, 0)) * (mean - prep.targets[k](s, 0));
          ++mse_count;
        }
      }
    }
    std::snprintf(buf, sizeof(buf), "%ld,%.10g", ti, mse / static_cast<double>(mse_count));
    metrics_csv << buf << "\n";

    // attention traces along the mean path (first plotted trajectories only)
    if (gat && ti < n_plot) {
      BrownianPath path(RngStream(9000 + static_cast<std::uint64_t>(ti), 0), 18, 1, 0.0,
                        t_ext.back());
      RngStream sampler(7000 + static_cast<std::uint64_t>(ti), 0);
      Matrix z = sample_posterior(post, sampler);
      auto drift = [&](double t, const Matrix& zz) {
        return field_eval(model.drift, t, zz, params, model.augmented);
      };
      auto diffusion = [&](double t, const Matrix& zz) {
        return model.diffusion_scale * field_eval(model.diffusion, t, zz, params, model.augmented);
      };
      double t_cur = 0.0;
      for (double te : t_ext) {
        if (te > t_cur + 1e-14) {
          z = integrate_euler_heun(drift, diffusion, z, t_cur, te, path, model.sde).final_state();
          t_cur = te;
        }
        // evaluate the GAT attention at this state: recompute through the
        // first GCN layer, then the GAT cache
        const auto* gcn1 = std::get_if<GCNLayerSpec>(&model.drift.layers[0]);
        const Matrix h1 = gcn_forward(*gcn1, 0, z, params, model.augmented, nullptr);
        GATCache cache;
        gat_forward(*gat, 0, h1, params, model.augmented, &cache);
        for (int species = 0; species < 6; ++species) {
          for (int u : model.augmented.nbrs[species]) {
            std::snprintf(buf, sizeof(buf), "%ld,%.10g,in_%d_%d,%.10g", ti, te, species, u,
                          cache.alpha(species, u));
            attention_csv << buf << "\n";
            std::snprintf(buf, sizeof(buf), "%ld,%.10g,out_%d_%d,%.10g", ti, te, species, u,
                          cache.alpha(u, species));
            attention_csv << buf << "\n";
          }
        }
      }
    }
  }
  manifest.add_artifact("results/samples.csv");
  manifest.add_artifact("results/attention.csv");
  manifest.add_artifact("results/metrics.csv");
}

}  // namespace gde::cli::repressilator
