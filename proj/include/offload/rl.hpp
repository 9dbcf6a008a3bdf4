#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "offload/environment.hpp"
#include "offload/policy.hpp"

namespace offload {

struct Transition {
  std::vector<double> state;
  std::vector<double> next_state;
  int action_idx = 0;
  double reward = 0.0;
  bool done = false;
  double raw_latency_s = 0.0;
  double raw_cost_usd = 0.0;
  double g_latency = 0.0;  // window violation after this action, raw seconds
  double g_cost = 0.0;     // raw USD
  // Budget-relative window overshoot after this action, sum over resources.
  double penalty = 0.0;
};

struct TrainConfig {
  int total_steps = 30000;
  double learning_rate = 7e-4;
  double discount = 0.99;       // gamma
  double entropy_coeff = 0.01;  // zeta
  double lambda = 10.0;         // constraint penalty coefficient
  int batch_size = 16;
  int knn_k = 5;
  int hidden_dim = 64;
  std::uint64_t seed = 1;
  // Follow the logged actions instead of sampling from the policy when
  // rolling training transitions (pure dataset replay).
  bool logged_replay = false;
  double divergence_abort = 1e6;
};

void validate(const TrainConfig& c);

// Mirrors PolicyParams tensor-for-tensor.
struct PolicyGrads {
  std::vector<double> w1, b1, w2, b2, wp, bp, wv, bv;

  static PolicyGrads zeros_like(const PolicyParams& p);
  std::vector<std::pair<std::string, std::vector<double>*>> tensors();
};

struct LossParts {
  double total = 0.0;     // mean surrogate loss incl. the lambda penalty term
  double policy = 0.0;    // mean -log pi(a|s) * A
  double value = 0.0;     // mean 0.5 (V(s) - target)^2
  double entropy = 0.0;   // mean policy entropy (enters total as -zeta * H)
  double penalty = 0.0;   // mean per-transition budget overshoot (normalized)
  double mean_reward = 0.0;
};

// A2C loss over a batch, with the exact analytic gradient when `grads` is
// given. Per transition: -log pi(a|s) * A + 0.5 (V(s) - T)^2 - zeta * H,
// with T = r + gamma V(s') (1-done) and A = T - V(s) held constant in the
// gradient. A positive lambda turns the stored budget overshoots into a
// score-function penalty by shifting the policy-term coefficient to
// A - lambda * penalty and adding lambda * mean(penalty) to the scalar.
LossParts a2c_loss(const PolicyParams& params, std::span<const Transition> batch,
                   double entropy_coeff, double discount, PolicyGrads* grads = nullptr,
                   double lambda = 0.0);

// F = f + lambda * sum_j max(g_j, 0) with g_j already scaled by its budget.
double penalized_loss(double base_loss, std::span<const double> normalized_violations,
                      double lambda);

struct TrainLogRow {
  std::int64_t step = 0;     // environment steps consumed so far
  double loss = 0.0;         // penalized loss of the latest update
  double mean_reward = 0.0;  // batch mean reward
  double g_latency = 0.0;    // batch mean positive latency overshoot, seconds
  double g_cost = 0.0;       // batch mean positive cost overshoot, USD
};

struct TrainResult {
  PolicyParams params;
  std::vector<TrainLogRow> log;
};

// Rolls episodes over the training conversations with the current policy
// (or the logged actions, see TrainConfig), updating by plain gradient
// descent on the penalized A2C loss every batch. Deterministic under the
// config seed; aborts with DivergenceError on runaway or non-finite loss.
TrainResult train(Environment& env, const RewardWeights& weights, const TrainConfig& config);

// One greedy-evaluation step record, enough to recompute the reward.
struct EvalStep {
  std::int64_t conversation_id = 0;
  int turn = 0;
  int action_idx = 0;
  double score = 0.0;
  double assoc_sum = 0.0;
  double norm_latency = 0.0;
  double norm_cost = 0.0;
  double raw_latency_s = 0.0;
  double raw_cost_usd = 0.0;
  double reward = 0.0;
  double g_latency = 0.0;
  double g_cost = 0.0;
  bool estimated = false;
};

struct RunMetrics {
  std::string method;
  std::uint64_t seed = 0;
  std::int64_t step_count = 0;
  double mean_score = 0.0;
  double mean_latency_s = 0.0;
  double mean_cost_usd = 0.0;
  double mean_reward = 0.0;
  // Mean over steps of max(g_j, 0) in raw units.
  double mean_violation_latency = 0.0;
  double mean_violation_cost = 0.0;
  // Bucket 0 = local, bucket 1+m = cloud with m selected modalities.
  std::vector<std::int64_t> action_histogram;
  std::vector<EvalStep> steps;
};

using ActionPicker = std::function<ActionSpec(const EncodedState&, TaskCategory)>;

// Streams every conversation of the environment's dataset in order through
// one continuous budget window and reports the aggregate metrics.
RunMetrics run_policy(Environment& env, const ActionPicker& pick, const std::string& method);

// Greedy (argmax) evaluation of a trained policy.
RunMetrics evaluate(Environment& env, const PolicyParams& params);

}  // namespace offload
