#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace offload {

// Where a dialogue's inference runs.
enum class LLMChoice { Local, Cloud };

const char* to_string(LLMChoice llm);
LLMChoice llm_from_string(const std::string& s);

// Subset of the modality universe, stored as a bit mask. The universe size
// (default 3: first-person, side, overhead views) is dataset metadata.
class ModalitySet {
 public:
  ModalitySet() = default;
  static ModalitySet from_mask(std::uint32_t mask) { return ModalitySet(mask); }
  static ModalitySet from_indices(const std::vector<int>& indices);

  bool contains(int m) const { return (mask_ >> m) & 1u; }
  void add(int m) { mask_ |= (1u << m); }
  bool empty() const { return mask_ == 0; }
  int count() const;
  std::uint32_t mask() const { return mask_; }
  std::vector<int> indices() const;

  bool operator==(const ModalitySet&) const = default;

 private:
  explicit ModalitySet(std::uint32_t mask) : mask_(mask) {}
  std::uint32_t mask_ = 0;
};

// Task category index, in [0, task_count) with task_count from dataset
// metadata (default 4: assistant, recommendation, query, message editing).
struct TaskCategory {
  int index = 0;
  bool operator==(const TaskCategory&) const = default;
};

// One decision: which LLM plus which modalities to upload. The local LLM is
// text-only, so a local action always carries an empty modality set;
// construction rejects anything else. Cloud with an empty set is the
// distinct text-only-cloud action.
class ActionSpec {
 public:
  ActionSpec() = default;  // (Local, {})
  ActionSpec(LLMChoice llm, ModalitySet modalities);

  static ActionSpec local() { return ActionSpec(); }
  static ActionSpec cloud(ModalitySet modalities) {
    return ActionSpec(LLMChoice::Cloud, modalities);
  }

  LLMChoice llm() const { return llm_; }
  const ModalitySet& modalities() const { return modalities_; }
  bool is_local() const { return llm_ == LLMChoice::Local; }

  bool operator==(const ActionSpec&) const = default;

 private:
  LLMChoice llm_ = LLMChoice::Local;
  ModalitySet modalities_;
};

// Reward weights: alpha scales the response score, the betas scale the
// association bonus and the (normalized) latency / usage-cost penalties.
struct RewardWeights {
  double alpha = 1.0;
  double beta_assoc = 1.0 / 3.0;
  double beta_latency = 1.0 / 3.0;
  double beta_cost = 1.0 / 3.0;
};

// Resource budgets enforced over a sliding window of `horizon` actions.
struct ConstraintBudget {
  double latency_budget_s = 30.0;
  double cost_budget_usd = 0.05;
  int horizon = 5;
};

// Local hardware parameters: theoretical peak compute and max power draw.
struct DeviceProfile {
  std::string name;
  double peak_tflops = 0.0;  // 1e12 FLOPS
  double max_watts = 0.0;
};

void validate(const RewardWeights& w);
void validate(const ConstraintBudget& b);
void validate(const DeviceProfile& d);

int action_space_size(int modality_count);  // 1 + 2^modality_count

// Stable enumeration of the whole action space: index 0 is the local action,
// indices 1..2^M are cloud actions with modality masks 0..2^M-1 in binary
// counting order. modality_count above 16 is rejected.
std::vector<ActionSpec> enumerate_actions(int modality_count);

// Inverse of enumerate_actions; round-trips exactly.
int action_index(const ActionSpec& a, int modality_count);

std::string describe(const ActionSpec& a);

}  // namespace offload
