#pragma once

#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "offload/actions.hpp"
#include "offload/dataset.hpp"
#include "offload/score_estimator.hpp"

namespace offload {

// Dimensions of the encoded state: one slot per dialogue in the horizon,
// each slot a {pad, local, cloud} one-hot, the modality flags, and a task
// one-hot. The last slot is the current dialogue with the LLM/modality part
// zeroed (the action is still pending); earlier slots are history, oldest
// first, padded at the front.
struct StateLayout {
  int horizon = 5;
  int modality_count = 3;
  int task_count = 4;

  int slot_dims() const { return 3 + modality_count + task_count; }
  int state_dims() const { return horizon * slot_dims(); }
  // Action key encoding: {local, cloud} one-hot plus modality flags.
  int action_dims() const { return 2 + modality_count; }
  int key_dims() const { return state_dims() + action_dims(); }
};

struct EncodedState {
  std::vector<double> v;
};

// State with horizon-1 pad slots and the current slot holding `first_task`.
EncodedState make_initial_state(const StateLayout& layout, TaskCategory first_task);

// Shifts history left, stamps the taken action into the now-historical slot,
// and loads the next turn's task into the current slot (a pad slot when the
// conversation is over).
EncodedState advance_state(const StateLayout& layout, const EncodedState& state,
                           const ActionSpec& taken, std::optional<TaskCategory> next_task);

// [state action] key for the nearest-neighbor estimator.
StateActionKey make_key(const StateLayout& layout, const EncodedState& state,
                        const ActionSpec& action);

// Rolling per-resource sums over the last `capacity` actions, with the
// violation g_j = sum - budget exposed in raw units.
class BudgetWindow {
 public:
  explicit BudgetWindow(int capacity);

  void add(double latency_s, double cost_usd);
  void clear();

  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  // Recomputed from the stored entries, so the sums always match them.
  double latency_sum() const;
  double cost_sum() const;
  double latency_violation(const ConstraintBudget& b) const {
    return latency_sum() - b.latency_budget_s;
  }
  double cost_violation(const ConstraintBudget& b) const {
    return cost_sum() - b.cost_budget_usd;
  }

 private:
  int capacity_;
  std::deque<std::pair<double, double>> entries_;
};

BudgetWindow update_budget(BudgetWindow window, double latency_s, double cost_usd);

struct StepOutcome {
  double reward = 0.0;
  double raw_score = 0.0;
  double raw_association_sum = 0.0;
  double raw_latency_s = 0.0;
  double raw_cost_usd = 0.0;
  double norm_latency = 0.0;  // min-max scaled latency entering the reward
  double norm_cost = 0.0;
  bool score_estimated = false;  // true when the score came from the kNN index
  double g_latency = 0.0;        // window violation after this action, raw seconds
  double g_cost = 0.0;           // raw USD
  double penalty = 0.0;          // sum_j max(g_j, 0) / budget_j
  EncodedState next_state;
  bool done = false;
};

struct EnvParams {
  RewardWeights weights;
  ConstraintBudget budget;  // budget.horizon is the state/window horizon tau
  int knn_k = 5;
};

// The offline multi-dialogue decision process. Episodes replay one dataset
// conversation each. When the chosen action matches the logged one, the
// recorded score/latency/cost are used; otherwise the score comes from the
// nearest-neighbor index and latency/cost are re-derived from the dataset's
// cost models. The budget window intentionally persists across episodes
// (the interaction stream continues); call clear_window() to reset it.
class Environment {
 public:
  Environment(const Dataset* data, const ScoreIndex* index, EnvParams params);

  const StateLayout& layout() const { return layout_; }
  const EnvParams& params() const { return params_; }
  int conversation_count() const { return static_cast<int>(conversations_.size()); }
  ConversationView conversation(int idx) const { return conversations_[idx]; }

  EncodedState reset(int conversation_index);
  StepOutcome step(const ActionSpec& action);

  bool episode_done() const;
  const EncodedState& state() const { return state_; }
  const BudgetWindow& window() const { return window_; }
  void clear_window() { window_.clear(); }

  // Outcome of taking `action` at the given turn from state `s`; exposed for
  // ledger-style recomputation in tests.
  StepOutcome resolve(ConversationView conv, int turn, const EncodedState& s,
                      const ActionSpec& action) const;

 private:
  double resolve_score(ConversationView conv, int turn, const EncodedState& s,
                       const ActionSpec& action, bool* estimated) const;

  const Dataset* data_;
  const ScoreIndex* index_;
  EnvParams params_;
  StateLayout layout_;
  std::vector<ConversationView> conversations_;

  int conversation_idx_ = -1;
  int turn_ = 0;
  EncodedState state_;
  BudgetWindow window_;

  // Memoized kNN estimates keyed by the exact query bytes. The estimator is
  // a pure function of (index, key), so this only skips repeated scans.
  mutable std::unordered_map<std::string, double> estimate_cache_;
};

// Per-record [state action] keys following the logged trajectory; used to
// build the score index from the training split.
ScoreIndex build_score_index(const Dataset& train, const StateLayout& layout);

}  // namespace offload
