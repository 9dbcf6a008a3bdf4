#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offload/actions.hpp"
#include "offload/environment.hpp"
#include "offload/rng.hpp"

namespace offload {

// Non-learning and bandit comparison policies:
//   Random                 uniform over the whole action space
//   LocalOnly              always (local, {})
//   CloudRandomModalities  cloud with a uniform modality subset (incl. empty)
//   UCB                    one bandit arm per (task, action) pair
class BaselinePolicy {
 public:
  enum class Kind { Random, LocalOnly, CloudRandomModalities, UCB };

  static BaselinePolicy random(int modality_count, std::uint64_t seed);
  static BaselinePolicy local_only(int modality_count);
  static BaselinePolicy cloud_random(int modality_count, std::uint64_t seed);
  static BaselinePolicy ucb(int modality_count, int task_count, double exploration_coeff);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  ActionSpec select(const EncodedState& state, TaskCategory task);

  // Feeds the observed reward back into the UCB statistics; no-op for the
  // other variants.
  void update(TaskCategory task, const ActionSpec& action, double reward);

  // Frozen UCB picks argmax of the arm means with no exploration bonus.
  void set_frozen(bool frozen) { frozen_ = frozen; }

  double arm_mean(TaskCategory task, int action_idx) const;
  std::int64_t arm_pulls(TaskCategory task, int action_idx) const;

 private:
  BaselinePolicy(Kind kind, int modality_count, std::uint64_t seed);

  Kind kind_;
  std::string name_;
  int modality_count_;
  int task_count_ = 0;
  std::vector<ActionSpec> actions_;
  Rng rng_;
  bool frozen_ = false;

  double exploration_coeff_ = 0.0;
  std::vector<std::int64_t> pulls_;  // task-major [task * actions + action]
  std::vector<double> means_;
};

}  // namespace offload
