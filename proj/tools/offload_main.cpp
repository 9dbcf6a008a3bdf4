// Command-line harness: dataset generation, policy training, evaluation and
// sweep experiments over the synthetic offloading corpus.
//
// Exit codes: 0 success, 2 configuration/data error, 3 training divergence.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "offload/baselines.hpp"
#include "offload/dataset.hpp"
#include "offload/errors.hpp"
#include "offload/experiment.hpp"
#include "offload/policy.hpp"
#include "offload/rl.hpp"

namespace fs = std::filesystem;
using namespace offload;

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

RewardWeights parse_weights(const std::string& s) {
  const auto v = parse_double_list(s);
  if (v.size() != 4) {
    throw ConfigError("--weights expects 4 comma-separated values: alpha,bAssoc,bLat,bCost");
  }
  RewardWeights w{v[0], v[1], v[2], v[3]};
  validate(w);
  return w;
}

std::vector<std::pair<double, double>> parse_budget_list(const std::string& s) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("--budgets expects lat:cost pairs, e.g. 30:0.05");
    }
    out.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
  }
  return out;
}

std::vector<std::string> parse_name_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Output root: relative --out paths land under $OFFLOAD_OUT_ROOT when set.
fs::path resolve_out(const fs::path& out) {
  if (out.is_absolute()) return out;
  if (const char* root = std::getenv("OFFLOAD_OUT_ROOT")) {
    return fs::path(root) / out;
  }
  return out;
}

struct GeneratorFlags {
  std::string device_name = "Jetson TX2";
  std::string device_table;

  void attach(CLI::App* cmd, GeneratorConfig& g) {
    cmd->add_option("--seed", g.seed, "dataset RNG seed");
    cmd->add_option("--conversations", g.conversations, "number of conversations");
    cmd->add_option("--modalities", g.modality_count, "modality universe size");
    cmd->add_option("--tasks", g.task_count, "task category count");
    cmd->add_option("--gap", g.local_quality_gap, "local LLM quality gap");
    cmd->add_option("--nde-noise", g.nde_noise_sd, "response score noise sd");
    cmd->add_option("--assoc-noise", g.assoc_noise_sd, "association noise sd");
    cmd->add_option("--coverage-bonus", g.coverage_bonus_scale, "per-affinity score bonus");
    cmd->add_flag("--persistent-bonus", g.persistent_modality_bonus,
                  "earlier uploads keep boosting later scores");
    cmd->add_option("--cloud-base", g.cloud_latency_base_s, "cloud latency base (s)");
    cmd->add_option("--cloud-per-modality", g.cloud_latency_per_modality_s,
                    "cloud latency per modality (s)");
    cmd->add_option("--cloud-jitter", g.cloud_latency_jitter_sd, "cloud latency jitter sd");
    cmd->add_option("--prompt-tokens", g.prompt_token_range, "prompt token range (min max)");
    cmd->add_option("--response-tokens", g.response_token_range,
                    "response token range (min max)");
    cmd->add_option("--split-ratio", g.split_ratio, "train fraction of conversations");
    cmd->add_option("--device", device_name, "local device name");
    cmd->add_option("--device-table", device_table,
                    "CSV device table (name,tflops,watts) replacing the built-ins");
  }

  void resolve(GeneratorConfig& g) const {
    if (!device_table.empty()) {
      const auto table = load_device_table(device_table);
      for (const auto& d : table) {
        if (d.name == device_name) {
          g.device = d;
          return;
        }
      }
      throw ConfigError("device '" + device_name + "' not in table " + device_table);
    }
    g.device = find_device(device_name);
  }
};

struct TrainFlags {
  std::string dataset_path;
  std::string out_dir = "out/train";
  std::string weights_csv;
  TrainConfig cfg;
  ConstraintBudget budget;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dataset", dataset_path, "dataset file")->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", cfg.seed, "training seed");
    cmd->add_option("--steps", cfg.total_steps, "environment steps to train for");
    cmd->add_option("--lr", cfg.learning_rate, "learning rate");
    cmd->add_option("--gamma", cfg.discount, "discount factor");
    cmd->add_option("--entropy", cfg.entropy_coeff, "entropy bonus coefficient");
    cmd->add_option("--lambda", cfg.lambda, "constraint penalty coefficient");
    cmd->add_option("--batch", cfg.batch_size, "transitions per update");
    cmd->add_option("--k", cfg.knn_k, "neighbors for score estimation");
    cmd->add_option("--hidden", cfg.hidden_dim, "hidden width of the policy MLP");
    cmd->add_flag("--logged-replay", cfg.logged_replay,
                  "roll transitions with the logged actions instead of the policy");
    cmd->add_option("--tau", budget.horizon, "dialogue horizon (state and budget window)");
    cmd->add_option("--latency-budget", budget.latency_budget_s, "window latency budget (s)");
    cmd->add_option("--cost-budget", budget.cost_budget_usd, "window cost budget (USD)");
    cmd->add_option("--weights", weights_csv, "reward weights alpha,bAssoc,bLat,bCost");
  }

  RewardWeights weights() const {
    return weights_csv.empty() ? RewardWeights{} : parse_weights(weights_csv);
  }

  std::map<std::string, std::string> manifest() const {
    const RewardWeights w = weights();
    return {
        {"dataset", dataset_path},
        {"out", out_dir},
        {"seed", std::to_string(cfg.seed)},
        {"steps", std::to_string(cfg.total_steps)},
        {"lr", fmt17(cfg.learning_rate)},
        {"gamma", fmt17(cfg.discount)},
        {"entropy", fmt17(cfg.entropy_coeff)},
        {"lambda", fmt17(cfg.lambda)},
        {"batch", std::to_string(cfg.batch_size)},
        {"k", std::to_string(cfg.knn_k)},
        {"hidden", std::to_string(cfg.hidden_dim)},
        {"logged-replay", cfg.logged_replay ? "true" : "false"},
        {"tau", std::to_string(budget.horizon)},
        {"latency-budget", fmt17(budget.latency_budget_s)},
        {"cost-budget", fmt17(budget.cost_budget_usd)},
        {"weights", fmt17(w.alpha) + "," + fmt17(w.beta_assoc) + "," +
                        fmt17(w.beta_latency) + "," + fmt17(w.beta_cost)},
    };
  }
};

int cmd_generate(const GeneratorConfig& cfg, const GeneratorFlags& flags,
                 const std::string& out_path) {
  GeneratorConfig g = cfg;
  flags.resolve(g);
  const Dataset data = generate(g);
  const fs::path out = resolve_out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save(data, out);
  std::cout << "wrote " << data.records.size() << " records ("
            << group_conversations(data.records).size() << " conversations) to " << out
            << "\n";
  std::cout << "modality_count=" << data.meta.modality_count
            << " task_count=" << data.meta.task_count
            << " split_ratio=" << data.meta.split_ratio << " device=" << g.device.name
            << " gap=" << g.local_quality_gap << "\n";
  return 0;
}

int cmd_train(const TrainFlags& flags) {
  const fs::path out = resolve_out(flags.out_dir);
  fs::create_directories(out);

  const Dataset full = load(flags.dataset_path);
  const RewardWeights weights = flags.weights();
  validate(flags.budget);
  const PreparedData data = prepare(full, flags.budget, full.meta.split_ratio);

  const TrainResult result = run_training(data, weights, flags.budget, flags.cfg);
  save_checkpoint(result.params, out / "checkpoint.txt");
  write_train_log_csv(result.log, out / "train_log.csv");
  write_manifest(flags.manifest(), out / "manifest.ini");

  const auto& last = result.log.back();
  std::cout << "trained " << flags.cfg.total_steps << " steps; final loss " << last.loss
            << ", final batch reward " << last.mean_reward << "\n";
  std::cout << "checkpoint: " << (out / "checkpoint.txt") << "\n";
  return 0;
}

struct EvalFlags {
  std::string dataset_path;
  std::string checkpoint;
  std::string baseline;
  std::string out_dir = "out/eval";
  std::string weights_csv;
  ConstraintBudget budget;
  int knn_k = 5;
  std::uint64_t seed = 1;
};

int cmd_eval(const EvalFlags& flags) {
  if (flags.checkpoint.empty() == flags.baseline.empty()) {
    throw ConfigError("pass exactly one of --checkpoint or --baseline");
  }
  const fs::path out = resolve_out(flags.out_dir);
  fs::create_directories(out);

  const Dataset full = load(flags.dataset_path);
  const RewardWeights weights =
      flags.weights_csv.empty() ? RewardWeights{} : parse_weights(flags.weights_csv);
  validate(flags.budget);
  const PreparedData data = prepare(full, flags.budget, full.meta.split_ratio);

  RunMetrics metrics;
  if (!flags.checkpoint.empty()) {
    const PolicyParams params = load_checkpoint(flags.checkpoint);
    if (params.input_dim != data.layout.state_dims()) {
      throw ConfigError("checkpoint input dim " + std::to_string(params.input_dim) +
                        " does not match the dataset/tau layout (" +
                        std::to_string(data.layout.state_dims()) + ")");
    }
    metrics = eval_checkpoint(data, params, weights, flags.budget, flags.knn_k);
  } else {
    metrics = eval_baseline(data, flags.baseline, weights, flags.budget, flags.knn_k,
                            flags.seed);
  }
  metrics.seed = flags.seed;

  write_eval_steps_csv(metrics, out / "eval_steps.csv");
  const AggregateRow row = aggregate("", "", {metrics});
  write_metrics_csv({row}, data.layout.modality_count, out / "eval.csv");
  std::cout << render_metrics_table({row}, data.layout.modality_count);
  std::cout << "steps: " << metrics.step_count << ", outputs in " << out << "\n";
  return 0;
}

struct SweepFlags {
  std::string axis;
  std::string dataset_out;  // unused placeholder for symmetry
  std::string out_dir = "out/sweep";
  std::string lambdas, budgets, gaps, devices;
  ExperimentConfig config;
  std::string weights_csv;
};

int cmd_sweep(SweepFlags& flags, const GeneratorFlags& gen_flags) {
  gen_flags.resolve(flags.config.gen);
  if (!flags.weights_csv.empty()) flags.config.weights = parse_weights(flags.weights_csv);
  if (!flags.lambdas.empty()) flags.config.lambda_values = parse_double_list(flags.lambdas);
  if (!flags.budgets.empty()) flags.config.budget_values = parse_budget_list(flags.budgets);
  if (!flags.gaps.empty()) flags.config.gap_values = parse_double_list(flags.gaps);
  if (!flags.devices.empty()) flags.config.device_values = parse_name_list(flags.devices);

  const fs::path out = resolve_out(flags.out_dir);
  fs::create_directories(out);

  const SweepResult result = run_sweep(flags.axis, flags.config);
  write_metrics_csv(result.rows, flags.config.gen.modality_count, out / "summary.csv");
  write_plot_series(result, out / "plots");
  std::cout << render_metrics_table(result.rows, flags.config.gen.modality_count);
  std::cout << "sweep outputs in " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline local/cloud LLM offloading: synthetic corpus, constrained "
               "actor-critic training, baselines and sweep experiments"};
  app.require_subcommand(1);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "generate a synthetic dataset file");
  gen_cmd->set_config("--config");
  gen_cmd->allow_config_extras(false);
  GeneratorConfig gen_cfg;
  GeneratorFlags gen_flags;
  std::string gen_out = "dataset.jsonl";
  gen_flags.attach(gen_cmd, gen_cfg);
  gen_cmd->add_option("--out", gen_out, "output dataset path");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the constrained actor-critic policy");
  train_cmd->set_config("--config");
  train_cmd->allow_config_extras(false);
  TrainFlags train_flags;
  train_flags.attach(train_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint or baseline");
  eval_cmd->set_config("--config");
  eval_cmd->allow_config_extras(false);
  EvalFlags eval_flags;
  eval_cmd->add_option("--dataset", eval_flags.dataset_path, "dataset file")->required();
  eval_cmd->add_option("--checkpoint", eval_flags.checkpoint, "trained checkpoint file");
  eval_cmd->add_option("--baseline", eval_flags.baseline,
                       "baseline policy: random|local|cloud|ucb");
  eval_cmd->add_option("--out", eval_flags.out_dir, "output directory");
  eval_cmd->add_option("--seed", eval_flags.seed, "baseline RNG seed");
  eval_cmd->add_option("--k", eval_flags.knn_k, "neighbors for score estimation");
  eval_cmd->add_option("--tau", eval_flags.budget.horizon, "dialogue horizon");
  eval_cmd->add_option("--latency-budget", eval_flags.budget.latency_budget_s,
                       "window latency budget (s)");
  eval_cmd->add_option("--cost-budget", eval_flags.budget.cost_budget_usd,
                       "window cost budget (USD)");
  eval_cmd->add_option("--weights", eval_flags.weights_csv,
                       "reward weights alpha,bAssoc,bLat,bCost");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "axis experiments with seed repetition");
  sweep_cmd->set_config("--config");
  sweep_cmd->allow_config_extras(false);
  SweepFlags sweep_flags;
  GeneratorFlags sweep_gen_flags;
  sweep_cmd
      ->add_option("--axis", sweep_flags.axis, "sweep axis: lambda|budget|device|gap|weights")
      ->required();
  sweep_gen_flags.attach(sweep_cmd, sweep_flags.config.gen);
  sweep_cmd->add_option("--out", sweep_flags.out_dir, "output directory");
  sweep_cmd->add_option("--seeds", sweep_flags.config.seed_count, "seeds per axis value");
  sweep_cmd->add_option("--jobs", sweep_flags.config.jobs, "parallel worker threads");
  sweep_cmd->add_option("--steps", sweep_flags.config.train_cfg.total_steps,
                        "training steps per run");
  sweep_cmd->add_option("--batch", sweep_flags.config.train_cfg.batch_size,
                        "transitions per update");
  sweep_cmd->add_option("--lr", sweep_flags.config.train_cfg.learning_rate, "learning rate");
  sweep_cmd->add_option("--k", sweep_flags.config.train_cfg.knn_k, "score estimator k");
  sweep_cmd->add_option("--train-seed", sweep_flags.config.train_cfg.seed,
                        "base training seed");
  sweep_cmd->add_option("--lambda", sweep_flags.config.train_cfg.lambda,
                        "penalty coefficient for non-lambda axes");
  sweep_cmd->add_option("--latency-budget", sweep_flags.config.budget.latency_budget_s,
                        "window latency budget (s)");
  sweep_cmd->add_option("--cost-budget", sweep_flags.config.budget.cost_budget_usd,
                        "window cost budget (USD)");
  sweep_cmd->add_option("--tau", sweep_flags.config.budget.horizon, "dialogue horizon");
  sweep_cmd->add_option("--weights", sweep_flags.weights_csv,
                        "base reward weights alpha,bAssoc,bLat,bCost");
  sweep_cmd->add_option("--lambdas", sweep_flags.lambdas, "lambda axis values, e.g. 0,10");
  sweep_cmd->add_option("--budgets", sweep_flags.budgets,
                        "budget axis values, e.g. 15:0.025,30:0.05");
  sweep_cmd->add_option("--gaps", sweep_flags.gaps, "gap axis values, e.g. 0,0.1,0.2,0.3");
  sweep_cmd->add_option("--devices", sweep_flags.devices,
                        "device axis names, ';'-separated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_cmd->parsed()) return cmd_generate(gen_cfg, gen_flags, gen_out);
    if (train_cmd->parsed()) return cmd_train(train_flags);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_flags, sweep_gen_flags);
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
