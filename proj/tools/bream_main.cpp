// Command-line driver: train / sweep / eval / curve subcommands.
//
// Exit codes: 0 success, 1 usage or config error, 2 data error,
// 3 numerical divergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bream/evaluation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// All CLI outputs go through temp + rename so an interrupted run never
// leaves a truncated file behind.
template <typename WriteFn>
void atomic_write(const std::string& path, WriteFn&& write) {
  std::string tmp = path + ".tmp";
  write(tmp);
  fs::rename(tmp, path);
}

json dataset_fingerprint(const bream::Dataset& d) {
  json j;
  j["rows"] = d.rows();
  j["features"] = d.n_features();
  j["classes"] = d.n_classes;
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(d.fingerprint()));
  j["content_hash"] = buf;
  return j;
}

void write_manifest(const std::string& out_dir, const json& manifest) {
  atomic_write(out_dir + "/manifest.json", [&](const std::string& p) {
    std::ofstream f(p);
    f << manifest.dump(2) << "\n";
  });
}

void write_split_manifest(const bream::SplitResult& split,
                          const std::string& path) {
  atomic_write(path, [&](const std::string& p) {
    std::ofstream f(p);
    f << "split,row_index\n";
    for (int i : split.train_idx) f << "train," << i << "\n";
    for (int i : split.valid_idx) f << "valid," << i << "\n";
    for (int i : split.test_idx) f << "test," << i << "\n";
  });
}

struct DataFlags {
  std::string data_path;
  std::string label_column = "label";
  std::string cost_spec = "uniform";
  std::uint64_t seed = 0;
  int threads = 1;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.data_path, "dataset CSV (header row)")
      ->required();
  cmd->add_option("--label", f.label_column,
                  "label column name or zero-based index");
  cmd->add_option("--costs", f.cost_spec,
                  "cost spec: uniform | linear | file:PATH");
  cmd->add_option("--seed", f.seed, "master seed (splits and evaluation)");
  cmd->add_option("--threads", f.threads, "worker thread cap");
}

bream::TrainConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return bream::TrainConfig{};
  std::ifstream in(config_path);
  if (!in) throw bream::DataError("cannot open config file: " + config_path);
  json j;
  in >> j;
  return bream::TrainConfig::from_json(j);
}

int cmd_train(const DataFlags& flags, const std::string& config_path,
              const std::string& out_dir, const json& overrides) {
  bream::Dataset full = bream::load_csv(flags.data_path, flags.label_column);
  bream::CostVector costs =
      bream::CostVector::from_spec(flags.cost_spec, full.n_features());

  json cfg_json = config_path.empty()
                      ? bream::TrainConfig{}.to_json()
                      : load_config(config_path).to_json();
  for (auto& [k, v] : overrides.items()) cfg_json[k] = v;
  bream::TrainConfig cfg = bream::TrainConfig::from_json(cfg_json);

  bream::SplitSpec spec;
  spec.seed = flags.seed;
  bream::SplitResult split = bream::split_thirds(full, spec);
  bream::Standardizer scaler =
      bream::standardize(split.train, {&split.valid, &split.test});

  bream::TrainResult result =
      bream::train(split.train, split.valid, costs, cfg, flags.threads);

  fs::create_directories(out_dir);
  atomic_write(out_dir + "/model.params", [&](const std::string& p) {
    bream::save_params(result.params, p);
  });
  atomic_write(out_dir + "/history.csv", [&](const std::string& p) {
    bream::save_history_csv(result.history, p);
  });
  atomic_write(out_dir + "/scaler.txt",
               [&](const std::string& p) { scaler.save(p); });
  write_split_manifest(split, out_dir + "/splits.csv");

  json manifest;
  manifest["command"] = "train";
  manifest["version"] = kVersion;
  manifest["timestamp"] = timestamp_utc();
  manifest["data"] = flags.data_path;
  manifest["label_column"] = flags.label_column;
  manifest["costs"] = flags.cost_spec;
  manifest["seed"] = flags.seed;
  manifest["config"] = cfg.to_json();
  manifest["dataset"] = dataset_fingerprint(full);
  manifest["outputs"] = {"model.params", "history.csv", "scaler.txt",
                         "splits.csv"};
  manifest["diverged"] = result.diverged;
  write_manifest(out_dir, manifest);

  if (result.diverged) {
    std::cerr << "training diverged: " << result.divergence_message
              << " (last finite checkpoint saved)\n";
    return 3;
  }
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << "final epoch " << last.epoch << ": objective "
              << last.train_objective << ", valid accuracy "
              << last.valid_accuracy << ", valid mean cost "
              << last.valid_mean_cost << "\n";
  }
  return 0;
}

int cmd_sweep(const DataFlags& flags, const std::string& grid_path,
              const std::string& out_dir) {
  bream::Dataset full = bream::load_csv(flags.data_path, flags.label_column);
  bream::CostVector costs =
      bream::CostVector::from_spec(flags.cost_spec, full.n_features());

  std::ifstream in(grid_path);
  if (!in) throw bream::DataError("cannot open grid file: " + grid_path);
  json grid_json;
  try {
    in >> grid_json;
  } catch (const json::exception& e) {
    throw bream::DataError("malformed grid file " + grid_path + ": " +
                           e.what());
  }
  if (!grid_json.is_array() || grid_json.empty())
    throw bream::DataError("grid file must hold a non-empty JSON array");
  std::vector<bream::TrainConfig> grid;
  for (const auto& j : grid_json)
    grid.push_back(bream::TrainConfig::from_json(j));

  bream::SplitSpec spec;
  spec.seed = flags.seed;
  bream::SplitResult split = bream::split_thirds(full, spec);
  bream::Standardizer scaler =
      bream::standardize(split.train, {&split.valid, &split.test});

  fs::create_directories(out_dir);
  bream::SweepResult result =
      bream::sweep(split.train, split.valid, split.test, costs, grid,
                   flags.threads, out_dir + "/models", flags.seed);

  atomic_write(out_dir + "/valid_front.csv", [&](const std::string& p) {
    bream::save_curve_csv(result.valid_front, costs.total, p);
  });
  atomic_write(out_dir + "/test_curve.csv", [&](const std::string& p) {
    bream::save_curve_csv(result.test_curve, costs.total, p);
  });
  atomic_write(out_dir + "/scaler.txt",
               [&](const std::string& p) { scaler.save(p); });
  write_split_manifest(split, out_dir + "/splits.csv");
  atomic_write(out_dir + "/sweep_manifest.csv", [&](const std::string& p) {
    std::ofstream f(p);
    f << "model_id,status,valid_accuracy,valid_mean_cost,params_path\n";
    for (const auto& e : result.entries) {
      f << e.model_id << "," << (e.diverged ? "diverged" : "ok") << ","
        << e.valid_accuracy << "," << e.valid_mean_cost << ","
        << e.params_path << "\n";
    }
  });

  json manifest;
  manifest["command"] = "sweep";
  manifest["version"] = kVersion;
  manifest["timestamp"] = timestamp_utc();
  manifest["data"] = flags.data_path;
  manifest["label_column"] = flags.label_column;
  manifest["costs"] = flags.cost_spec;
  manifest["seed"] = flags.seed;
  manifest["grid"] = grid_json;
  manifest["dataset"] = dataset_fingerprint(full);
  manifest["outputs"] = {"valid_front.csv", "test_curve.csv", "scaler.txt",
                         "splits.csv", "sweep_manifest.csv", "models/"};
  write_manifest(out_dir, manifest);

  std::cout << "validation front: " << result.valid_front.size()
            << " of " << grid.size() << " models\n";
  for (const auto& p : result.test_curve)
    std::cout << "model " << p.model_id << ": test accuracy " << p.accuracy
              << " at mean cost " << p.mean_cost << "\n";
  return 0;
}

int cmd_eval(const DataFlags& flags, const std::string& params_path,
             const std::string& scaler_path, const std::string& split_name,
             int eval_samples, const std::string& out_dir, int dump_traces) {
  bream::ModelParams params = bream::load_params(params_path);
  bream::Dataset full = bream::load_csv(flags.data_path, flags.label_column);
  if (full.n_features() != params.n)
    throw bream::DataError("dataset has " + std::to_string(full.n_features()) +
                           " features but model expects " +
                           std::to_string(params.n));
  bream::CostVector costs =
      bream::CostVector::from_spec(flags.cost_spec, full.n_features());

  bream::Dataset target;
  if (split_name == "none") {
    target = std::move(full);
  } else {
    bream::SplitSpec spec;
    spec.seed = flags.seed;
    bream::SplitResult split = bream::split_thirds(full, spec);
    if (split_name == "train")
      target = std::move(split.train);
    else if (split_name == "valid")
      target = std::move(split.valid);
    else if (split_name == "test")
      target = std::move(split.test);
    else
      throw bream::ConfigError("unknown split: " + split_name);
  }
  if (!scaler_path.empty())
    bream::Standardizer::load(scaler_path).apply(target);

  // mirror of the defaults used by training-time validation passes
  double eps = 1e-6;
  bream::ParetoPoint pt = bream::evaluate(params, target, costs, eps,
                                          flags.seed, eval_samples,
                                          flags.threads);
  char line[160];
  std::snprintf(line, sizeof(line),
                "accuracy %.6f mean_cost %.6f normalized_cost %.6f\n",
                pt.accuracy, pt.mean_cost, pt.mean_cost / costs.total);
  std::cout << line;

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    atomic_write(out_dir + "/metrics.csv", [&](const std::string& p) {
      std::ofstream f(p);
      f << "accuracy,mean_cost,normalized_cost\n";
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", pt.accuracy,
                    pt.mean_cost, pt.mean_cost / costs.total);
      f << buf;
    });
    if (dump_traces > 0) {
      atomic_write(out_dir + "/traces.txt", [&](const std::string& p) {
        std::ofstream f(p);
        int count = std::min(dump_traces, target.rows());
        for (int i = 0; i < count; ++i) {
          bream::Vec x = target.features.row(i).transpose();
          std::uint64_t h = bream::fnv1a(x.data(), sizeof(double) * x.size());
          h = bream::fnv1a(&target.labels[i], sizeof(int), h);
          bream::Rng rng = bream::Rng::derive(flags.seed, bream::Rng::mix(h));
          auto trace = bream::run_episode(params, x, costs, eps, rng);
          f << "example " << i << " (label " << target.labels[i] << ")\n"
            << trace.debug_dump();
        }
      });
    }
    json manifest;
    manifest["command"] = "eval";
    manifest["version"] = kVersion;
    manifest["timestamp"] = timestamp_utc();
    manifest["data"] = flags.data_path;
    manifest["params"] = params_path;
    manifest["split"] = split_name;
    manifest["seed"] = flags.seed;
    manifest["eval_samples"] = eval_samples;
    manifest["costs"] = flags.cost_spec;
    manifest["dataset"] = dataset_fingerprint(target);
    manifest["outputs"] = {"metrics.csv"};
    write_manifest(out_dir, manifest);
  }
  return 0;
}

int cmd_curve(const std::string& curve_path, const std::string& levels_str,
              bool raw_axis, const std::string& svg_path) {
  auto curve = bream::load_curve_csv(curve_path, !raw_axis);
  std::vector<double> levels;
  std::stringstream ss(levels_str);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) levels.push_back(std::stod(tok));
  if (levels.empty())
    throw bream::ConfigError("no cost levels given");
  for (double lv : levels) {
    double acc = bream::interpolate_accuracy(curve, lv);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "cost %.4g -> accuracy %.6f\n", lv, acc);
    std::cout << buf;
  }
  if (!svg_path.empty())
    atomic_write(svg_path, [&](const std::string& p) {
      bream::write_curve_svg(curve, p);
    });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"budgeted sequential feature acquisition (train / sweep / "
               "eval / curve)"};
  app.require_subcommand(1);

  DataFlags train_flags, sweep_flags, eval_flags;
  std::string config_path, out_dir, grid_path;
  json overrides;

  auto* train_cmd = app.add_subcommand("train", "train a single model");
  add_data_flags(train_cmd, train_flags);
  train_cmd->add_option("--config", config_path, "TrainConfig JSON file");
  train_cmd->add_option("--out", out_dir, "output directory")->required();
  double ov_lambda, ov_lr;
  int ov_epochs, ov_T, ov_p, ov_M, ov_batch;
  std::string ov_cell;
  train_cmd->add_option("--lambda", ov_lambda, "override lambda")
      ->each([&](const std::string& v) { overrides["lambda"] = std::stod(v); });
  train_cmd->add_option("--lr", ov_lr, "override learning rate")
      ->each([&](const std::string& v) {
        overrides["learning_rate"] = std::stod(v);
      });
  train_cmd->add_option("--epochs", ov_epochs, "override epochs")
      ->each([&](const std::string& v) { overrides["epochs"] = std::stoi(v); });
  train_cmd->add_option("--steps", ov_T, "override acquisition steps T")
      ->each([&](const std::string& v) { overrides["T"] = std::stoi(v); });
  train_cmd->add_option("--rep-dim", ov_p, "override representation dim p")
      ->each([&](const std::string& v) { overrides["p"] = std::stoi(v); });
  train_cmd->add_option("--rollouts", ov_M, "override rollouts M")
      ->each([&](const std::string& v) { overrides["M"] = std::stoi(v); });
  train_cmd->add_option("--batch-size", ov_batch, "override batch size")
      ->each([&](const std::string& v) {
        overrides["batch_size"] = std::stoi(v);
      });
  train_cmd->add_option("--cell", ov_cell, "override cell type (rnn|gru)")
      ->each([&](const std::string& v) { overrides["cell_type"] = v; });
  std::uint64_t ov_seed;
  train_cmd->add_option("--train-seed", ov_seed, "override training seed")
      ->each([&](const std::string& v) {
        overrides["seed"] = std::stoull(v);
      });

  auto* sweep_cmd =
      app.add_subcommand("sweep", "hyperparameter sweep with Pareto selection");
  add_data_flags(sweep_cmd, sweep_flags);
  std::string sweep_out;
  sweep_cmd->add_option("--grid", grid_path, "JSON array of TrainConfigs")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model");
  add_data_flags(eval_cmd, eval_flags);
  std::string params_path, scaler_path, eval_out, split_name = "none";
  int eval_samples = 1, dump_traces = 0;
  eval_cmd->add_option("--params", params_path, "saved model parameters")
      ->required();
  eval_cmd->add_option("--scaler", scaler_path, "standardization record");
  eval_cmd->add_option("--split", split_name,
                       "evaluate only one split: none|train|valid|test");
  eval_cmd->add_option("--eval-samples", eval_samples,
                       "episodes per example (K)");
  eval_cmd->add_option("--out", eval_out, "output directory (optional)");
  eval_cmd->add_option("--dump-traces", dump_traces,
                       "dump debug traces for the first N examples");

  auto* curve_cmd =
      app.add_subcommand("curve", "interpolate an accuracy/cost curve");
  std::string curve_path, levels = "0.9,0.75,0.5,0.25", svg_path;
  bool raw_axis = false;
  curve_cmd->add_option("--curve", curve_path, "curve CSV file")->required();
  curve_cmd->add_option("--levels", levels, "comma-separated cost levels");
  curve_cmd->add_flag("--raw", raw_axis,
                      "interpret levels on the raw cost axis");
  curve_cmd->add_option("--svg", svg_path, "write an SVG plot here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed())
      return cmd_train(train_flags, config_path, out_dir, overrides);
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_flags, grid_path, sweep_out);
    if (eval_cmd->parsed())
      return cmd_eval(eval_flags, params_path, scaler_path, split_name,
                      eval_samples, eval_out, dump_traces);
    if (curve_cmd->parsed())
      return cmd_curve(curve_path, levels, raw_axis, svg_path);
  } catch (const bream::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const bream::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 3;
  } catch (const bream::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
