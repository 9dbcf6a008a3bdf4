#include "offload/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "offload/errors.hpp"
#include "offload/rng.hpp"

namespace offload {

void validate(const TrainConfig& c) {
  if (c.total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (c.learning_rate <= 0) throw ConfigError("learning_rate must be > 0");
  if (c.discount <= 0 || c.discount > 1) throw ConfigError("discount must be in (0, 1]");
  if (c.entropy_coeff < 0) throw ConfigError("entropy_coeff must be >= 0");
  if (c.lambda < 0) throw ConfigError("lambda must be >= 0");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.knn_k < 1) throw ConfigError("knn_k must be >= 1");
  if (c.hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
}

PolicyGrads PolicyGrads::zeros_like(const PolicyParams& p) {
  PolicyGrads g;
  g.w1.assign(p.w1.size(), 0.0);
  g.b1.assign(p.b1.size(), 0.0);
  g.w2.assign(p.w2.size(), 0.0);
  g.b2.assign(p.b2.size(), 0.0);
  g.wp.assign(p.wp.size(), 0.0);
  g.bp.assign(p.bp.size(), 0.0);
  g.wv.assign(p.wv.size(), 0.0);
  g.bv.assign(p.bv.size(), 0.0);
  return g;
}

std::vector<std::pair<std::string, std::vector<double>*>> PolicyGrads::tensors() {
  return {{"w1", &w1}, {"b1", &b1}, {"w2", &w2}, {"b2", &b2},
          {"wp", &wp}, {"bp", &bp}, {"wv", &wv}, {"bv", &bv}};
}

namespace {

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw DivergenceError(std::string("non-finite ") + what + " in loss computation");
  }
}

// Backprop for one transition. dz (dL/dlogits) and dv (dL/dvalue) are given;
// accumulates parameter gradients (unscaled; caller divides by batch size).
void backprop(const PolicyParams& p, const ForwardPass& f, std::span<const double> dz,
              double dv, PolicyGrads& g) {
  const int H = p.hidden_dim;
  const int A = p.action_count;
  const int I = p.input_dim;

  // Heads.
  std::vector<double> dh2(H, 0.0);
  for (int a = 0; a < A; ++a) {
    const double d = dz[a];
    g.bp[a] += d;
    double* grow = g.wp.data() + static_cast<std::size_t>(a) * H;
    const double* wrow = p.wp.data() + static_cast<std::size_t>(a) * H;
    for (int h = 0; h < H; ++h) {
      grow[h] += d * f.h2[h];
      dh2[h] += d * wrow[h];
    }
  }
  g.bv[0] += dv;
  for (int h = 0; h < H; ++h) {
    g.wv[h] += dv * f.h2[h];
    dh2[h] += dv * p.wv[h];
  }

  // Second trunk layer (tanh' = 1 - tanh^2).
  std::vector<double> dpre2(H);
  for (int h = 0; h < H; ++h) dpre2[h] = dh2[h] * (1.0 - f.h2[h] * f.h2[h]);
  std::vector<double> dh1(H, 0.0);
  for (int o = 0; o < H; ++o) {
    const double d = dpre2[o];
    g.b2[o] += d;
    double* grow = g.w2.data() + static_cast<std::size_t>(o) * H;
    const double* wrow = p.w2.data() + static_cast<std::size_t>(o) * H;
    for (int h = 0; h < H; ++h) {
      grow[h] += d * f.h1[h];
      dh1[h] += d * wrow[h];
    }
  }

  // First trunk layer.
  for (int o = 0; o < H; ++o) {
    const double d = dh1[o] * (1.0 - f.h1[o] * f.h1[o]);
    g.b1[o] += d;
    double* grow = g.w1.data() + static_cast<std::size_t>(o) * I;
    for (int i = 0; i < I; ++i) grow[i] += d * f.input[i];
  }
}

}  // namespace

LossParts a2c_loss(const PolicyParams& params, std::span<const Transition> batch,
                   double entropy_coeff, double discount, PolicyGrads* grads, double lambda) {
  if (batch.empty()) throw std::invalid_argument("a2c_loss needs a non-empty batch");

  LossParts parts;
  PolicyGrads local = grads ? PolicyGrads::zeros_like(params) : PolicyGrads{};

  for (const Transition& tr : batch) {
    if (tr.action_idx < 0 || tr.action_idx >= params.action_count) {
      throw std::invalid_argument("transition action index outside the action space");
    }
    const ForwardPass f = forward(params, tr.state);
    double next_value = 0.0;
    if (!tr.done) next_value = forward(params, tr.next_state).value;

    // Bootstrapped target and advantage, both constants for the gradient.
    const double target = tr.reward + discount * next_value * (tr.done ? 0.0 : 1.0);
    const double advantage = target - f.value;
    const double h = entropy(f.probs);
    const double log_pa = f.log_probs[tr.action_idx];
    check_finite(log_pa, "log-probability");
    check_finite(advantage, "advantage");

    // The budget penalty enters the policy gradient as a score-function
    // term: grad of lambda * E[overshoot] is E[overshoot * grad(-log pi)],
    // which is the A2C policy term with coefficient A - lambda * overshoot.
    const double coeff = advantage - lambda * tr.penalty;

    parts.policy += -log_pa * advantage;
    parts.value += 0.5 * (f.value - target) * (f.value - target);
    parts.entropy += h;
    parts.penalty += tr.penalty;
    parts.mean_reward += tr.reward;
    parts.total += -log_pa * coeff + 0.5 * (f.value - target) * (f.value - target) -
                   entropy_coeff * h + lambda * tr.penalty;

    if (grads) {
      const int A = params.action_count;
      std::vector<double> dz(A);
      for (int a = 0; a < A; ++a) {
        const double indicator = (a == tr.action_idx) ? 1.0 : 0.0;
        // d(-log p[a] * coeff)/dz = coeff * (p - onehot)
        dz[a] = coeff * (f.probs[a] - indicator);
        // d(-zeta H)/dz_a = zeta * p_a * (log p_a + H)
        dz[a] += entropy_coeff * f.probs[a] * (f.log_probs[a] + h);
      }
      const double dv = f.value - target;
      backprop(params, f, dz, dv, local);
    }
  }

  const double n = static_cast<double>(batch.size());
  parts.policy /= n;
  parts.value /= n;
  parts.entropy /= n;
  parts.penalty /= n;
  parts.mean_reward /= n;
  parts.total /= n;
  check_finite(parts.total, "total loss");

  if (grads) {
    for (auto& [name, t] : local.tensors()) {
      for (double& x : *t) {
        x /= n;
        check_finite(x, "gradient entry");
      }
    }
    *grads = std::move(local);
  }
  return parts;
}

double penalized_loss(double base_loss, std::span<const double> normalized_violations,
                      double lambda) {
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  double penalty = 0.0;
  for (double g : normalized_violations) penalty += std::max(g, 0.0);
  return base_loss + lambda * penalty;
}

namespace {

int sample_action(const ForwardPass& f, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t a = 0; a < f.probs.size(); ++a) {
    acc += f.probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(f.probs.size()) - 1;
}

}  // namespace

TrainResult train(Environment& env, const RewardWeights& weights, const TrainConfig& config) {
  validate(config);
  if (env.params().weights.alpha != weights.alpha ||
      env.params().weights.beta_assoc != weights.beta_assoc ||
      env.params().weights.beta_latency != weights.beta_latency ||
      env.params().weights.beta_cost != weights.beta_cost) {
    throw ConfigError("environment reward weights differ from the training weights");
  }

  const auto actions = enumerate_actions(env.layout().modality_count);
  PolicyParams params = PolicyParams::init(env.layout().state_dims(), config.hidden_dim,
                                           static_cast<int>(actions.size()), config.seed);
  Rng rng(mix_seed(config.seed, 0x747261696eULL));

  // Seeded conversation order, reshuffled on every pass over the split.
  std::vector<int> order(static_cast<std::size_t>(env.conversation_count()));
  std::iota(order.begin(), order.end(), 0);
  auto reshuffle = [&]() {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
  };
  reshuffle();
  std::size_t order_pos = 0;

  TrainResult result;
  env.clear_window();
  EncodedState state;
  ConversationView conv;
  int logged_turn = 0;
  bool episode_open = false;

  std::vector<Transition> batch;
  batch.reserve(config.batch_size);
  std::int64_t steps_done = 0;

  while (steps_done < config.total_steps) {
    if (!episode_open) {
      if (order_pos >= order.size()) {
        reshuffle();
        order_pos = 0;
      }
      const int conv_idx = order[order_pos++];
      state = env.reset(conv_idx);
      conv = env.conversation(conv_idx);
      logged_turn = 0;
      episode_open = true;
    }

    const ForwardPass f = forward(params, state.v);
    int action_idx;
    if (config.logged_replay) {
      action_idx = action_index(conv[logged_turn].action, env.layout().modality_count);
    } else {
      action_idx = sample_action(f, rng);
    }
    const ActionSpec& action = actions[action_idx];

    const StepOutcome out = env.step(action);
    Transition tr;
    tr.state = state.v;
    tr.next_state = out.next_state.v;
    tr.action_idx = action_idx;
    tr.reward = out.reward;
    tr.done = out.done;
    tr.raw_latency_s = out.raw_latency_s;
    tr.raw_cost_usd = out.raw_cost_usd;
    tr.g_latency = out.g_latency;
    tr.g_cost = out.g_cost;
    tr.penalty = out.penalty;
    batch.push_back(std::move(tr));

    state = out.next_state;
    ++logged_turn;
    ++steps_done;
    if (out.done) episode_open = false;

    if (static_cast<int>(batch.size()) == config.batch_size ||
        steps_done == config.total_steps) {
      PolicyGrads grads;
      const LossParts parts = a2c_loss(params, batch, config.entropy_coeff, config.discount,
                                       &grads, config.lambda);
      if (std::abs(parts.total) > config.divergence_abort) {
        throw DivergenceError("loss " + std::to_string(parts.total) +
                              " exceeded the divergence threshold at step " +
                              std::to_string(steps_done));
      }

      auto gts = grads.tensors();
      auto pts = params.tensors();
      for (std::size_t t = 0; t < pts.size(); ++t) {
        auto& pv = *pts[t].second;
        const auto& gv = *gts[t].second;
        for (std::size_t i = 0; i < pv.size(); ++i) {
          pv[i] -= config.learning_rate * gv[i];
        }
      }
      if (!params.all_finite()) {
        throw DivergenceError("non-finite parameters after update at step " +
                              std::to_string(steps_done));
      }

      TrainLogRow row;
      row.step = steps_done;
      row.loss = parts.total;
      row.mean_reward = parts.mean_reward;
      double sum_glat = 0.0, sum_gcost = 0.0;
      for (const auto& tr2 : batch) {
        sum_glat += std::max(tr2.g_latency, 0.0);
        sum_gcost += std::max(tr2.g_cost, 0.0);
      }
      row.g_latency = sum_glat / static_cast<double>(batch.size());
      row.g_cost = sum_gcost / static_cast<double>(batch.size());
      result.log.push_back(row);
      batch.clear();
    }
  }

  result.params = std::move(params);
  return result;
}

RunMetrics run_policy(Environment& env, const ActionPicker& pick, const std::string& method) {
  RunMetrics m;
  m.method = method;
  m.action_histogram.assign(static_cast<std::size_t>(env.layout().modality_count) + 2, 0);
  env.clear_window();

  double sum_score = 0, sum_lat = 0, sum_cost = 0, sum_reward = 0;
  double sum_vlat = 0, sum_vcost = 0;

  for (int c = 0; c < env.conversation_count(); ++c) {
    EncodedState state = env.reset(c);
    const auto conv = env.conversation(c);
    for (int t = 0; t < static_cast<int>(conv.size()); ++t) {
      const ActionSpec action = pick(state, conv[t].task);
      const StepOutcome out = env.step(action);

      EvalStep step;
      step.conversation_id = conv.front().conversation_id;
      step.turn = t;
      step.action_idx = action_index(action, env.layout().modality_count);
      step.score = out.raw_score;
      step.assoc_sum = out.raw_association_sum;
      step.norm_latency = out.norm_latency;
      step.norm_cost = out.norm_cost;
      step.raw_latency_s = out.raw_latency_s;
      step.raw_cost_usd = out.raw_cost_usd;
      step.reward = out.reward;
      step.g_latency = out.g_latency;
      step.g_cost = out.g_cost;
      step.estimated = out.score_estimated;
      m.steps.push_back(step);

      if (action.is_local()) {
        ++m.action_histogram[0];
      } else {
        ++m.action_histogram[1 + static_cast<std::size_t>(action.modalities().count())];
      }
      sum_score += out.raw_score;
      sum_lat += out.raw_latency_s;
      sum_cost += out.raw_cost_usd;
      sum_reward += out.reward;
      sum_vlat += std::max(out.g_latency, 0.0);
      sum_vcost += std::max(out.g_cost, 0.0);
      state = out.next_state;
    }
  }

  m.step_count = static_cast<std::int64_t>(m.steps.size());
  const double n = std::max<double>(1.0, static_cast<double>(m.step_count));
  m.mean_score = sum_score / n;
  m.mean_latency_s = sum_lat / n;
  m.mean_cost_usd = sum_cost / n;
  m.mean_reward = sum_reward / n;
  m.mean_violation_latency = sum_vlat / n;
  m.mean_violation_cost = sum_vcost / n;
  return m;
}

RunMetrics evaluate(Environment& env, const PolicyParams& params) {
  const auto actions = enumerate_actions(env.layout().modality_count);
  return run_policy(
      env,
      [&](const EncodedState& s, TaskCategory) {
        const ForwardPass f = forward(params, s.v);
        return actions[static_cast<std::size_t>(argmax(f.probs))];
      },
      "rc-a2c");
}

}  // namespace offload
