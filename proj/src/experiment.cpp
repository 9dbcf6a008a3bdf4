#include "offload/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <semaphore>
#include <sstream>

#include "offload/errors.hpp"

namespace offload {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

PreparedData prepare(const Dataset& full, const ConstraintBudget& budget, double split_ratio) {
  PreparedData d;
  auto [train, test] = split(full, split_ratio);
  d.train = std::move(train);
  d.test = std::move(test);
  d.layout = StateLayout{budget.horizon, d.train.meta.modality_count,
                         d.train.meta.task_count};
  d.index = build_score_index(d.train, d.layout);
  return d;
}

TrainResult run_training(const PreparedData& data, const RewardWeights& weights,
                         const ConstraintBudget& budget, TrainConfig train_cfg) {
  EnvParams params{weights, budget, train_cfg.knn_k};
  Environment env(&data.train, &data.index, params);
  return train(env, weights, train_cfg);
}

RunMetrics eval_checkpoint(const PreparedData& data, const PolicyParams& params,
                           const RewardWeights& weights, const ConstraintBudget& budget,
                           int knn_k) {
  EnvParams env_params{weights, budget, knn_k};
  Environment env(&data.test, &data.index, env_params);
  return evaluate(env, params);
}

RunMetrics eval_baseline(const PreparedData& data, const std::string& name,
                         const RewardWeights& weights, const ConstraintBudget& budget,
                         int knn_k, std::uint64_t seed) {
  const int m = data.test.meta.modality_count;
  EnvParams env_params{weights, budget, knn_k};

  BaselinePolicy policy = [&]() {
    if (name == "random") return BaselinePolicy::random(m, seed);
    if (name == "local") return BaselinePolicy::local_only(m);
    if (name == "cloud") return BaselinePolicy::cloud_random(m, seed);
    if (name == "ucb") {
      return BaselinePolicy::ucb(m, data.test.meta.task_count, std::sqrt(2.0));
    }
    throw ConfigError("unknown baseline '" + name + "' (random|local|cloud|ucb)");
  }();

  if (policy.kind() == BaselinePolicy::Kind::UCB) {
    // Exploration pass over the training split, then frozen greedy eval.
    Environment train_env(&data.train, &data.index, env_params);
    for (int c = 0; c < train_env.conversation_count(); ++c) {
      EncodedState state = train_env.reset(c);
      const auto conv = train_env.conversation(c);
      for (int t = 0; t < static_cast<int>(conv.size()); ++t) {
        const ActionSpec action = policy.select(state, conv[t].task);
        const StepOutcome out = train_env.step(action);
        policy.update(conv[t].task, action, out.reward);
        state = out.next_state;
      }
    }
    policy.set_frozen(true);
  }

  Environment env(&data.test, &data.index, env_params);
  RunMetrics metrics = run_policy(
      env, [&](const EncodedState& s, TaskCategory task) { return policy.select(s, task); },
      policy.name());
  metrics.seed = seed;
  return metrics;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

AggregateRow aggregate(const std::string& axis, const std::string& axis_value,
                       const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate needs at least one run");
  AggregateRow row;
  row.axis = axis;
  row.axis_value = axis_value;
  row.method = runs.front().method;
  row.runs = static_cast<int>(runs.size());

  auto collect = [&](auto getter) {
    std::vector<double> v;
    v.reserve(runs.size());
    for (const auto& r : runs) v.push_back(getter(r));
    return v;
  };
  auto scores = collect([](const RunMetrics& r) { return r.mean_score; });
  auto lats = collect([](const RunMetrics& r) { return r.mean_latency_s; });
  auto costs = collect([](const RunMetrics& r) { return r.mean_cost_usd; });
  auto rewards = collect([](const RunMetrics& r) { return r.mean_reward; });
  auto vlats = collect([](const RunMetrics& r) { return r.mean_violation_latency; });
  auto vcosts = collect([](const RunMetrics& r) { return r.mean_violation_cost; });

  row.score_mean = mean_of(scores);
  row.score_sd = sd_of(scores);
  row.latency_mean = mean_of(lats);
  row.latency_sd = sd_of(lats);
  row.cost_mean = mean_of(costs);
  row.cost_sd = sd_of(costs);
  row.reward_mean = mean_of(rewards);
  row.reward_sd = sd_of(rewards);
  row.violation_latency_mean = mean_of(vlats);
  row.violation_latency_sd = sd_of(vlats);
  row.violation_cost_mean = mean_of(vcosts);
  row.violation_cost_sd = sd_of(vcosts);

  row.histogram_mean.assign(runs.front().action_histogram.size(), 0.0);
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < r.action_histogram.size(); ++i) {
      row.histogram_mean[i] += static_cast<double>(r.action_histogram[i]);
    }
  }
  for (auto& h : row.histogram_mean) h /= static_cast<double>(runs.size());
  return row;
}

namespace {

struct SweepPoint {
  std::string value_label;
  GeneratorConfig gen;
  RewardWeights weights;
  ConstraintBudget budget;
  TrainConfig train_cfg;
};

std::vector<SweepPoint> sweep_points(const std::string& axis, const ExperimentConfig& c) {
  std::vector<SweepPoint> points;
  const SweepPoint base{"", c.gen, c.weights, c.budget, c.train_cfg};

  auto label_num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };

  if (axis == "lambda") {
    for (double l : c.lambda_values) {
      SweepPoint p = base;
      p.value_label = label_num(l);
      p.train_cfg.lambda = l;
      points.push_back(std::move(p));
    }
  } else if (axis == "budget") {
    for (const auto& [lat, cost] : c.budget_values) {
      SweepPoint p = base;
      p.value_label = label_num(lat) + "s/" + label_num(cost);
      p.budget.latency_budget_s = lat;
      p.budget.cost_budget_usd = cost;
      points.push_back(std::move(p));
    }
  } else if (axis == "device") {
    std::vector<std::string> names = c.device_values;
    if (names.empty()) {
      for (const auto& d : builtin_devices()) names.push_back(d.name);
    }
    for (const auto& name : names) {
      SweepPoint p = base;
      p.value_label = name;
      p.gen.device = find_device(name);
      points.push_back(std::move(p));
    }
  } else if (axis == "gap") {
    for (double g : c.gap_values) {
      SweepPoint p = base;
      p.value_label = label_num(g);
      p.gen.local_quality_gap = g;
      points.push_back(std::move(p));
    }
  } else if (axis == "weights") {
    for (const auto& w : c.weight_presets) {
      SweepPoint p = base;
      p.value_label = label_num(w[0]) + "/" + label_num(w[1]) + "/" + label_num(w[2]);
      p.weights.beta_assoc = w[0];
      p.weights.beta_latency = w[1];
      p.weights.beta_cost = w[2];
      points.push_back(std::move(p));
    }
  } else {
    throw ConfigError("unknown sweep axis '" + axis +
                      "' (lambda|budget|device|gap|weights)");
  }
  return points;
}

}  // namespace

SweepResult run_sweep(const std::string& axis, const ExperimentConfig& config) {
  const auto points = sweep_points(axis, config);
  SweepResult result;
  result.axis = axis;

  struct RunOutput {
    std::vector<RunMetrics> trained;               // one per seed
    std::map<std::string, std::vector<RunMetrics>> baselines;
  };

  const int jobs = std::max(1, config.jobs);
  std::counting_semaphore<256> slots(jobs);
  std::vector<std::future<RunOutput>> futures;
  futures.reserve(points.size());

  for (const auto& point : points) {
    futures.push_back(std::async(std::launch::async, [&config, point, &slots]() {
      slots.acquire();
      RunOutput out;
      try {
        const Dataset full = generate(point.gen);
        const PreparedData data = prepare(full, point.budget, point.gen.split_ratio);
        for (int s = 0; s < config.seed_count; ++s) {
          TrainConfig tc = point.train_cfg;
          tc.seed = config.train_cfg.seed + static_cast<std::uint64_t>(s);
          TrainResult trained = run_training(data, point.weights, point.budget, tc);
          RunMetrics metrics =
              eval_checkpoint(data, trained.params, point.weights, point.budget, tc.knn_k);
          metrics.seed = tc.seed;
          metrics.steps.clear();  // aggregation does not need per-step rows
          out.trained.push_back(std::move(metrics));
          for (const std::string name : {"random", "local", "cloud", "ucb"}) {
            RunMetrics bm = eval_baseline(data, name, point.weights, point.budget,
                                          tc.knn_k, tc.seed);
            bm.steps.clear();
            out.baselines[name].push_back(std::move(bm));
          }
        }
      } catch (...) {
        slots.release();
        throw;
      }
      slots.release();
      return out;
    }));
  }

  for (std::size_t i = 0; i < points.size(); ++i) {
    RunOutput out = futures[i].get();
    result.rows.push_back(aggregate(axis, points[i].value_label, out.trained));
    for (auto& [name, runs] : out.baselines) {
      result.rows.push_back(aggregate(axis, points[i].value_label, runs));
    }
  }
  return result;
}

void write_train_log_csv(const std::vector<TrainLogRow>& log,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write training log: " + path.string());
  out << "step,loss,mean_reward,g_latency,g_cost\n";
  for (const auto& row : log) {
    out << row.step << "," << fmt(row.loss) << "," << fmt(row.mean_reward) << ","
        << fmt(row.g_latency) << "," << fmt(row.g_cost) << "\n";
  }
}

void write_eval_steps_csv(const RunMetrics& metrics, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write eval step log: " + path.string());
  out << "conversation_id,turn,action,score,assoc_sum,psi_hat,phi_hat,"
         "raw_latency_s,raw_cost_usd,reward,g_latency,g_cost,estimated\n";
  for (const auto& s : metrics.steps) {
    out << s.conversation_id << "," << s.turn << "," << s.action_idx << "," << fmt(s.score)
        << "," << fmt(s.assoc_sum) << "," << fmt(s.norm_latency) << "," << fmt(s.norm_cost)
        << "," << fmt(s.raw_latency_s) << "," << fmt(s.raw_cost_usd) << "," << fmt(s.reward)
        << "," << fmt(s.g_latency) << "," << fmt(s.g_cost) << "," << (s.estimated ? 1 : 0)
        << "\n";
  }
}

void write_metrics_csv(const std::vector<AggregateRow>& rows, int modality_count,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write metrics csv: " + path.string());
  out << "axis,value,method,runs,score_mean,score_sd,latency_mean,latency_sd,"
         "cost_mean,cost_sd,reward_mean,reward_sd,violation_latency_mean,"
         "violation_latency_sd,violation_cost_mean,violation_cost_sd,local";
  for (int m = 0; m <= modality_count; ++m) out << ",cloud" << m;
  out << ",local_frac";
  for (int m = 0; m <= modality_count; ++m) out << ",cloud" << m << "_frac";
  out << "\n";
  for (const auto& r : rows) {
    out << r.axis << "," << r.axis_value << "," << r.method << "," << r.runs << ","
        << fmt(r.score_mean) << "," << fmt(r.score_sd) << "," << fmt(r.latency_mean) << ","
        << fmt(r.latency_sd) << "," << fmt(r.cost_mean) << "," << fmt(r.cost_sd) << ","
        << fmt(r.reward_mean) << "," << fmt(r.reward_sd) << ","
        << fmt(r.violation_latency_mean) << "," << fmt(r.violation_latency_sd) << ","
        << fmt(r.violation_cost_mean) << "," << fmt(r.violation_cost_sd);
    double total = 0;
    for (double h : r.histogram_mean) total += h;
    for (double h : r.histogram_mean) out << "," << fmt(h);
    for (double h : r.histogram_mean) out << "," << fmt(total > 0 ? h / total : 0.0);
    out << "\n";
  }
}

std::string render_metrics_table(const std::vector<AggregateRow>& rows, int modality_count) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "Method" << std::right << std::setw(16)
     << "Score" << std::setw(14) << "Latency(s)" << std::setw(16) << "Cost(1e-3USD)"
     << std::setw(16) << "Reward" << std::setw(8) << "Local";
  for (int m = 0; m <= modality_count; ++m) os << std::setw(8) << ("Cld-" + std::to_string(m));
  os << std::setw(10) << "ViolLat" << std::setw(10) << "ViolCost" << "\n";
  for (const auto& r : rows) {
    char score[40], reward[40];
    std::snprintf(score, sizeof(score), "%.3f+-%.3f", r.score_mean, r.score_sd);
    std::snprintf(reward, sizeof(reward), "%.3f+-%.3f", r.reward_mean, r.reward_sd);
    os << std::left << std::setw(18)
       << (r.axis_value.empty() ? r.method : r.method + "@" + r.axis_value) << std::right
       << std::setw(16) << score << std::setw(14) << std::fixed << std::setprecision(3)
       << r.latency_mean << std::setw(16) << std::setprecision(3) << r.cost_mean * 1e3
       << std::setw(16) << reward << std::setw(8) << std::setprecision(1)
       << r.histogram_mean[0];
    for (int m = 0; m <= modality_count; ++m) {
      os << std::setw(8) << std::setprecision(1) << r.histogram_mean[1 + m];
    }
    os << std::setw(10) << std::setprecision(3) << r.violation_latency_mean << std::setw(10)
       << std::setprecision(4) << r.violation_cost_mean << "\n";
    os.unsetf(std::ios::fixed);
  }
  return os.str();
}

void write_plot_series(const SweepResult& sweep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  // One two-column (axis value, metric mean) file per method and metric.
  const std::vector<std::pair<std::string, double AggregateRow::*>> metrics = {
      {"score", &AggregateRow::score_mean},
      {"latency", &AggregateRow::latency_mean},
      {"cost", &AggregateRow::cost_mean},
      {"reward", &AggregateRow::reward_mean},
      {"violation_latency", &AggregateRow::violation_latency_mean},
      {"violation_cost", &AggregateRow::violation_cost_mean},
  };
  std::map<std::string, std::map<std::string, std::ofstream>> files;
  for (const auto& row : sweep.rows) {
    for (const auto& [metric, member] : metrics) {
      auto& stream = files[row.method][metric];
      if (!stream.is_open()) {
        stream.open(dir / (row.method + "_" + metric + ".dat"));
        if (!stream) throw DataError("cannot write plot series in " + dir.string());
      }
      stream << row.axis_value << " " << fmt(row.*member) << "\n";
    }
  }
}

void write_manifest(const std::map<std::string, std::string>& entries,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  for (const auto& [key, value] : entries) out << key << "=" << value << "\n";
}

std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  std::map<std::string, std::string> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("manifest line " + std::to_string(lineno) + ": expected key=value");
    }
    entries[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return entries;
}

}  // namespace offload
