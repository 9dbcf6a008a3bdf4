#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offload/baselines.hpp"
#include "offload/dataset.hpp"
#include "offload/rl.hpp"

namespace offload {

// Everything one experiment run needs, resolved from defaults, config file
// and flags (flags win).
struct ExperimentConfig {
  GeneratorConfig gen;
  TrainConfig train_cfg;
  RewardWeights weights;
  ConstraintBudget budget;
  int seed_count = 3;
  std::filesystem::path out_dir = "out";
  int jobs = 2;

  // Sweep axes.
  std::vector<double> lambda_values{0.0, 10.0};
  std::vector<std::pair<double, double>> budget_values{{15, 0.025}, {30, 0.05}, {60, 0.10}};
  std::vector<std::string> device_values;  // empty = all built-in devices
  std::vector<double> gap_values{0.0, 0.1, 0.2, 0.3};
  // beta_assoc, beta_latency, beta_cost presets (alpha stays 1).
  std::vector<std::array<double, 3>> weight_presets{
      {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}, {1. / 3, 1. / 3, 1. / 3}};
};

// Train/test splits plus the score index the environment estimates from.
struct PreparedData {
  Dataset train;
  Dataset test;
  ScoreIndex index;
  StateLayout layout;
};

PreparedData prepare(const Dataset& full, const ConstraintBudget& budget, double split_ratio);

// One full train run over prepared data. Deterministic in (config, seed).
TrainResult run_training(const PreparedData& data, const RewardWeights& weights,
                         const ConstraintBudget& budget, TrainConfig train_cfg);

RunMetrics eval_checkpoint(const PreparedData& data, const PolicyParams& params,
                           const RewardWeights& weights, const ConstraintBudget& budget,
                           int knn_k);

// Baselines: "random", "local", "cloud" evaluate directly; "ucb" first does
// one exploration pass over the training split, then runs frozen.
RunMetrics eval_baseline(const PreparedData& data, const std::string& name,
                         const RewardWeights& weights, const ConstraintBudget& budget,
                         int knn_k, std::uint64_t seed);

// Mean/stddev aggregate of per-seed runs of one method at one axis value.
struct AggregateRow {
  std::string axis;
  std::string axis_value;
  std::string method;
  int runs = 0;
  double score_mean = 0, score_sd = 0;
  double latency_mean = 0, latency_sd = 0;
  double cost_mean = 0, cost_sd = 0;
  double reward_mean = 0, reward_sd = 0;
  double violation_latency_mean = 0, violation_latency_sd = 0;
  double violation_cost_mean = 0, violation_cost_sd = 0;
  std::vector<double> histogram_mean;  // local, cloud-0..cloud-M counts
};

AggregateRow aggregate(const std::string& axis, const std::string& axis_value,
                       const std::vector<RunMetrics>& runs);

struct SweepResult {
  std::string axis;
  std::vector<AggregateRow> rows;
};

// One training+eval per (axis value x seed) plus baseline evaluations,
// fanned out over `jobs` worker threads; aggregation is single-threaded.
SweepResult run_sweep(const std::string& axis, const ExperimentConfig& config);

// File emission. CSV schemas are documented in the README.
void write_train_log_csv(const std::vector<TrainLogRow>& log,
                         const std::filesystem::path& path);
void write_eval_steps_csv(const RunMetrics& metrics, const std::filesystem::path& path);
void write_metrics_csv(const std::vector<AggregateRow>& rows, int modality_count,
                       const std::filesystem::path& path);
std::string render_metrics_table(const std::vector<AggregateRow>& rows, int modality_count);
void write_plot_series(const SweepResult& sweep, const std::filesystem::path& dir);

// Flat key=value manifest of a fully resolved run; readable back as a
// config file by the CLI.
void write_manifest(const std::map<std::string, std::string>& entries,
                    const std::filesystem::path& path);
std::map<std::string, std::string> read_manifest(const std::filesystem::path& path);

double mean_of(const std::vector<double>& v);
double sd_of(const std::vector<double>& v);  // sample sd, 0 for fewer than 2 runs

}  // namespace offload
