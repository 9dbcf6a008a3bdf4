#include "offload/actions.hpp"

#include <bit>
#include <stdexcept>

#include "offload/errors.hpp"

namespace offload {

const char* to_string(LLMChoice llm) {
  return llm == LLMChoice::Local ? "local" : "cloud";
}

LLMChoice llm_from_string(const std::string& s) {
  if (s == "local") return LLMChoice::Local;
  if (s == "cloud") return LLMChoice::Cloud;
  throw DataError("unknown llm choice: '" + s + "'");
}

ModalitySet ModalitySet::from_indices(const std::vector<int>& indices) {
  ModalitySet set;
  for (int m : indices) {
    if (m < 0 || m >= 32) throw std::invalid_argument("modality index out of range");
    set.add(m);
  }
  return set;
}

int ModalitySet::count() const { return std::popcount(mask_); }

std::vector<int> ModalitySet::indices() const {
  std::vector<int> out;
  for (int m = 0; m < 32; ++m) {
    if (contains(m)) out.push_back(m);
  }
  return out;
}

ActionSpec::ActionSpec(LLMChoice llm, ModalitySet modalities)
    : llm_(llm), modalities_(modalities) {
  if (llm_ == LLMChoice::Local && !modalities_.empty()) {
    throw std::invalid_argument("local actions cannot carry modalities");
  }
}

void validate(const RewardWeights& w) {
  if (w.alpha < 0 || w.beta_assoc < 0 || w.beta_latency < 0 || w.beta_cost < 0) {
    throw ConfigError("reward weights must be >= 0");
  }
}

void validate(const ConstraintBudget& b) {
  if (b.latency_budget_s <= 0 || b.cost_budget_usd <= 0) {
    throw ConfigError("resource budgets must be > 0");
  }
  if (b.horizon < 1) throw ConfigError("budget horizon must be >= 1");
}

void validate(const DeviceProfile& d) {
  if (d.peak_tflops <= 0) throw ConfigError("device '" + d.name + "': peak_tflops must be > 0");
  if (d.max_watts <= 0) throw ConfigError("device '" + d.name + "': max_watts must be > 0");
}

int action_space_size(int modality_count) {
  if (modality_count < 1) throw std::invalid_argument("modality_count must be >= 1");
  if (modality_count > 16) throw std::invalid_argument("modality_count > 16 not supported");
  return 1 + (1 << modality_count);
}

std::vector<ActionSpec> enumerate_actions(int modality_count) {
  const int size = action_space_size(modality_count);
  std::vector<ActionSpec> actions;
  actions.reserve(size);
  actions.push_back(ActionSpec::local());
  for (std::uint32_t mask = 0; mask < (1u << modality_count); ++mask) {
    actions.push_back(ActionSpec::cloud(ModalitySet::from_mask(mask)));
  }
  return actions;
}

int action_index(const ActionSpec& a, int modality_count) {
  action_space_size(modality_count);  // bounds check
  if (a.is_local()) return 0;
  return 1 + static_cast<int>(a.modalities().mask());
}

std::string describe(const ActionSpec& a) {
  if (a.is_local()) return "local";
  std::string out = "cloud{";
  bool first = true;
  for (int m : a.modalities().indices()) {
    if (!first) out += ",";
    out += std::to_string(m);
    first = false;
  }
  out += "}";
  return out;
}

}  // namespace offload
