#include "offload/environment.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "offload/cost_models.hpp"
#include "offload/errors.hpp"

namespace offload {

namespace {

// Slot layout: [pad local cloud | modality flags | task one-hot].
void write_slot(const StateLayout& layout, double* slot, std::optional<LLMChoice> llm,
                const ModalitySet& mods, std::optional<TaskCategory> task, bool pad) {
  std::fill(slot, slot + layout.slot_dims(), 0.0);
  if (pad) {
    slot[0] = 1.0;
    return;
  }
  if (llm) slot[*llm == LLMChoice::Local ? 1 : 2] = 1.0;
  for (int m = 0; m < layout.modality_count; ++m) {
    if (mods.contains(m)) slot[3 + m] = 1.0;
  }
  if (task) {
    if (task->index < 0 || task->index >= layout.task_count) {
      throw std::invalid_argument("task index out of range for state encoding");
    }
    slot[3 + layout.modality_count + task->index] = 1.0;
  }
}

}  // namespace

EncodedState make_initial_state(const StateLayout& layout, TaskCategory first_task) {
  EncodedState s;
  s.v.assign(layout.state_dims(), 0.0);
  for (int i = 0; i + 1 < layout.horizon; ++i) {
    write_slot(layout, s.v.data() + i * layout.slot_dims(), std::nullopt, {}, std::nullopt,
               /*pad=*/true);
  }
  write_slot(layout, s.v.data() + (layout.horizon - 1) * layout.slot_dims(), std::nullopt, {},
             first_task, /*pad=*/false);
  return s;
}

EncodedState advance_state(const StateLayout& layout, const EncodedState& state,
                           const ActionSpec& taken, std::optional<TaskCategory> next_task) {
  if (static_cast<int>(state.v.size()) != layout.state_dims()) {
    throw std::invalid_argument("state dimension mismatch");
  }
  EncodedState next;
  next.v.assign(layout.state_dims(), 0.0);
  const int sd = layout.slot_dims();
  // Drop the oldest slot; everything else moves one slot towards the past.
  std::copy(state.v.begin() + sd, state.v.end(), next.v.begin());

  // The consumed dialogue's slot keeps its task one-hot and gains the action.
  double* consumed = next.v.data() + (layout.horizon - 2) * sd;
  consumed[0] = 0.0;
  consumed[taken.is_local() ? 1 : 2] = 1.0;
  for (int m = 0; m < layout.modality_count; ++m) {
    consumed[3 + m] = taken.modalities().contains(m) ? 1.0 : 0.0;
  }

  double* current = next.v.data() + (layout.horizon - 1) * sd;
  if (next_task) {
    write_slot(layout, current, std::nullopt, {}, *next_task, /*pad=*/false);
  } else {
    write_slot(layout, current, std::nullopt, {}, std::nullopt, /*pad=*/true);
  }
  return next;
}

StateActionKey make_key(const StateLayout& layout, const EncodedState& state,
                        const ActionSpec& action) {
  StateActionKey key;
  key.v.reserve(layout.key_dims());
  key.v = state.v;
  key.v.push_back(action.is_local() ? 1.0 : 0.0);
  key.v.push_back(action.is_local() ? 0.0 : 1.0);
  for (int m = 0; m < layout.modality_count; ++m) {
    key.v.push_back(action.modalities().contains(m) ? 1.0 : 0.0);
  }
  return key;
}

BudgetWindow::BudgetWindow(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("window capacity must be >= 1");
}

void BudgetWindow::add(double latency_s, double cost_usd) {
  entries_.emplace_back(latency_s, cost_usd);
  while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
}

void BudgetWindow::clear() { entries_.clear(); }

double BudgetWindow::latency_sum() const {
  double sum = 0.0;
  for (const auto& [lat, cost] : entries_) sum += lat;
  return sum;
}

double BudgetWindow::cost_sum() const {
  double sum = 0.0;
  for (const auto& [lat, cost] : entries_) sum += cost;
  return sum;
}

BudgetWindow update_budget(BudgetWindow window, double latency_s, double cost_usd) {
  window.add(latency_s, cost_usd);
  return window;
}

Environment::Environment(const Dataset* data, const ScoreIndex* index, EnvParams params)
    : data_(data),
      index_(index),
      params_(params),
      layout_{params.budget.horizon, data->meta.modality_count, data->meta.task_count},
      window_(params.budget.horizon) {
  validate(params_.weights);
  validate(params_.budget);
  if (params_.knn_k < 1) throw ConfigError("knn_k must be >= 1");
  conversations_ = group_conversations(data_->records);
  if (conversations_.empty()) throw ConfigError("environment needs a non-empty dataset");
}

EncodedState Environment::reset(int conversation_index) {
  if (conversation_index < 0 || conversation_index >= conversation_count()) {
    throw std::invalid_argument("conversation index out of range");
  }
  const auto conv = conversations_[conversation_index];
  if (conv.empty()) throw std::invalid_argument("empty conversation");
  conversation_idx_ = conversation_index;
  turn_ = 0;
  state_ = make_initial_state(layout_, conv.front().task);
  return state_;
}

bool Environment::episode_done() const {
  return conversation_idx_ < 0 ||
         turn_ >= static_cast<int>(conversations_[conversation_idx_].size());
}

double Environment::resolve_score(ConversationView conv, int turn, const EncodedState& s,
                                  const ActionSpec& action, bool* estimated) const {
  const DialogueRecord& record = conv[static_cast<std::size_t>(turn)];
  if (action == record.action) {
    *estimated = false;
    return record.response_score;
  }
  *estimated = true;
  if (index_ == nullptr || index_->size() == 0) {
    throw std::invalid_argument("counterfactual action needs a score index");
  }
  const StateActionKey key = make_key(layout_, s, action);
  std::string cache_key(reinterpret_cast<const char*>(key.v.data()),
                        key.v.size() * sizeof(double));
  auto it = estimate_cache_.find(cache_key);
  if (it != estimate_cache_.end()) return it->second;
  const double est = index_->estimate(key, params_.knn_k);
  estimate_cache_.emplace(std::move(cache_key), est);
  return est;
}

StepOutcome Environment::resolve(ConversationView conv, int turn, const EncodedState& s,
                                 const ActionSpec& action) const {
  if (turn < 0 || turn >= static_cast<int>(conv.size())) {
    throw std::invalid_argument("turn outside conversation");
  }
  const DialogueRecord& record = conv[static_cast<std::size_t>(turn)];
  const GeneratorConfig& gen = data_->meta.generator;
  for (int m : action.modalities().indices()) {
    if (m >= layout_.modality_count) {
      throw std::invalid_argument("action selects modality outside the universe");
    }
  }

  StepOutcome out;
  out.raw_score = resolve_score(conv, turn, s, action, &out.score_estimated);

  if (action == record.action) {
    out.raw_latency_s = record.latency_s;
    out.raw_cost_usd = record.cost_usd;
  } else if (action.is_local()) {
    const LocalWorkload w{gen.local_model_params,
                          static_cast<double>(record.prompt_tokens + record.response_tokens),
                          gen.local_ref_tokens};
    out.raw_latency_s = local_latency_s(w, gen.device);
    out.raw_cost_usd = local_cost_usd(out.raw_latency_s, gen.device, gen.pricing);
  } else {
    const int action_idx = action_index(action, layout_.modality_count);
    const double jitter = counterfactual_cloud_jitter(gen, record.conversation_id,
                                                      record.turn_index, action_idx);
    out.raw_latency_s = cloud_interaction_latency(gen, action.modalities().count(), jitter);
    out.raw_cost_usd = cloud_cost_usd(static_cast<double>(record.prompt_tokens),
                                      static_cast<double>(record.response_tokens),
                                      action.modalities(), gen.modality_bytes, gen.cloud_rates);
  }

  out.raw_association_sum = 0.0;
  for (int m : action.modalities().indices()) {
    out.raw_association_sum += record.association[m];
  }

  const auto& norm = data_->meta.norm;
  out.norm_latency = minmax_normalize(out.raw_latency_s, norm.latency_min, norm.latency_max);
  out.norm_cost = minmax_normalize(out.raw_cost_usd, norm.cost_min, norm.cost_max);

  const auto& w = params_.weights;
  out.reward = w.alpha * out.raw_score + w.beta_assoc * out.raw_association_sum -
               w.beta_latency * out.norm_latency - w.beta_cost * out.norm_cost;

  const bool last_turn = turn + 1 >= static_cast<int>(conv.size());
  out.done = last_turn;
  out.next_state = advance_state(
      layout_, s, action,
      last_turn ? std::nullopt : std::optional<TaskCategory>(conv[turn + 1].task));
  return out;
}

StepOutcome Environment::step(const ActionSpec& action) {
  if (episode_done()) throw std::logic_error("step called on a finished episode");
  const auto conv = conversations_[conversation_idx_];
  StepOutcome out = resolve(conv, turn_, state_, action);

  window_.add(out.raw_latency_s, out.raw_cost_usd);
  out.g_latency = window_.latency_violation(params_.budget);
  out.g_cost = window_.cost_violation(params_.budget);
  out.penalty = std::max(out.g_latency, 0.0) / params_.budget.latency_budget_s +
                std::max(out.g_cost, 0.0) / params_.budget.cost_budget_usd;

  state_ = out.next_state;
  ++turn_;
  return out;
}

ScoreIndex build_score_index(const Dataset& train, const StateLayout& layout) {
  return build_index(train.records, [&layout](ConversationView conv, int turn) {
    EncodedState s = make_initial_state(layout, conv.front().task);
    for (int t = 0; t < turn; ++t) {
      s = advance_state(layout, s, conv[t].action,
                        std::optional<TaskCategory>(conv[t + 1].task));
    }
    return make_key(layout, s, conv[turn].action);
  });
}

}  // namespace offload
