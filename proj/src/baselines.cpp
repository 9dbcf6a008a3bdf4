#include "offload/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace offload {

BaselinePolicy::BaselinePolicy(Kind kind, int modality_count, std::uint64_t seed)
    : kind_(kind),
      modality_count_(modality_count),
      actions_(enumerate_actions(modality_count)),
      rng_(seed) {}

BaselinePolicy BaselinePolicy::random(int modality_count, std::uint64_t seed) {
  BaselinePolicy p(Kind::Random, modality_count, mix_seed(seed, 0x72616e64ULL));
  p.name_ = "random";
  return p;
}

BaselinePolicy BaselinePolicy::local_only(int modality_count) {
  BaselinePolicy p(Kind::LocalOnly, modality_count, 0);
  p.name_ = "local";
  return p;
}

BaselinePolicy BaselinePolicy::cloud_random(int modality_count, std::uint64_t seed) {
  BaselinePolicy p(Kind::CloudRandomModalities, modality_count, mix_seed(seed, 0x636c64ULL));
  p.name_ = "cloud";
  return p;
}

BaselinePolicy BaselinePolicy::ucb(int modality_count, int task_count,
                                   double exploration_coeff) {
  BaselinePolicy p(Kind::UCB, modality_count, 0);
  p.name_ = "ucb";
  p.task_count_ = task_count;
  p.exploration_coeff_ = exploration_coeff;
  const std::size_t arms = static_cast<std::size_t>(task_count) * p.actions_.size();
  p.pulls_.assign(arms, 0);
  p.means_.assign(arms, 0.0);
  return p;
}

ActionSpec BaselinePolicy::select(const EncodedState&, TaskCategory task) {
  switch (kind_) {
    case Kind::LocalOnly:
      return ActionSpec::local();
    case Kind::Random: {
      const auto idx = rng_.uniform_int(0, static_cast<std::int64_t>(actions_.size()) - 1);
      return actions_[static_cast<std::size_t>(idx)];
    }
    case Kind::CloudRandomModalities: {
      const auto mask = static_cast<std::uint32_t>(
          rng_.uniform_int(0, (1 << modality_count_) - 1));
      return ActionSpec::cloud(ModalitySet::from_mask(mask));
    }
    case Kind::UCB:
      break;
  }

  if (task.index < 0 || task.index >= task_count_) {
    throw std::invalid_argument("task index outside the UCB arm table");
  }
  const std::size_t base = static_cast<std::size_t>(task.index) * actions_.size();
  std::int64_t task_pulls = 0;
  for (std::size_t a = 0; a < actions_.size(); ++a) task_pulls += pulls_[base + a];

  if (!frozen_) {
    // Unpulled arms first, in index order.
    for (std::size_t a = 0; a < actions_.size(); ++a) {
      if (pulls_[base + a] == 0) return actions_[a];
    }
  }

  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < actions_.size(); ++a) {
    double value = means_[base + a];
    if (!frozen_ && pulls_[base + a] > 0 && task_pulls > 0) {
      value += exploration_coeff_ *
               std::sqrt(std::log(static_cast<double>(task_pulls)) /
                         static_cast<double>(pulls_[base + a]));
    }
    if (value > best_value) {
      best_value = value;
      best = a;
    }
  }
  return actions_[best];
}

void BaselinePolicy::update(TaskCategory task, const ActionSpec& action, double reward) {
  if (kind_ != Kind::UCB) return;
  const std::size_t arm = static_cast<std::size_t>(task.index) * actions_.size() +
                          static_cast<std::size_t>(action_index(action, modality_count_));
  pulls_[arm] += 1;
  means_[arm] += (reward - means_[arm]) / static_cast<double>(pulls_[arm]);
}

double BaselinePolicy::arm_mean(TaskCategory task, int action_idx) const {
  return means_[static_cast<std::size_t>(task.index) * actions_.size() +
                static_cast<std::size_t>(action_idx)];
}

std::int64_t BaselinePolicy::arm_pulls(TaskCategory task, int action_idx) const {
  return pulls_[static_cast<std::size_t>(task.index) * actions_.size() +
                static_cast<std::size_t>(action_idx)];
}

}  // namespace offload
