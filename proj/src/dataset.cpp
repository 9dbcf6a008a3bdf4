#include "offload/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "offload/errors.hpp"
#include "offload/rng.hpp"

namespace offload {

using nlohmann::json;

namespace {

constexpr const char* kSchemaName = "offload-dataset";
constexpr int kSchemaVersion = 1;
constexpr int kMinTurns = 2;
constexpr int kMaxTurns = 5;

std::vector<std::vector<double>> default_affinity(int task_count, int modality_count) {
  // Curated matrix for the default 4x3 setup: the last task is text-only,
  // the third leans on every view. Other shapes get a varied fallback.
  if (task_count == 4 && modality_count == 3) {
    return {{0.8, 0.3, 0.5}, {0.6, 0.2, 0.7}, {0.9, 0.6, 0.8}, {0.0, 0.0, 0.0}};
  }
  std::vector<std::vector<double>> a(task_count, std::vector<double>(modality_count));
  for (int t = 0; t < task_count; ++t) {
    for (int m = 0; m < modality_count; ++m) {
      a[t][m] = ((t * 7 + m * 5) % 10) / 10.0;
    }
  }
  return a;
}

std::vector<double> default_base_scores(int task_count) {
  if (task_count == 4) return {0.75, 0.72, 0.68, 0.85};
  std::vector<double> base(task_count);
  for (int t = 0; t < task_count; ++t) base[t] = 0.65 + 0.05 * ((t * 3) % 5);
  return base;
}

}  // namespace

GeneratorConfig resolve_defaults(GeneratorConfig config) {
  if (config.conversations < 1) throw ConfigError("conversations must be >= 1");
  if (config.modality_count < 1 || config.modality_count > 16) {
    throw ConfigError("modality_count must be in [1, 16]");
  }
  if (config.task_count < 1) throw ConfigError("task_count must be >= 1");

  if (config.affinity.empty()) {
    config.affinity = default_affinity(config.task_count, config.modality_count);
  }
  if (config.task_base_scores.empty()) {
    config.task_base_scores = default_base_scores(config.task_count);
  }
  if (config.modality_bytes.empty()) {
    config.modality_bytes.resize(config.modality_count);
    for (int m = 0; m < config.modality_count; ++m) {
      config.modality_bytes[m] = 1.0 + 0.25 * m;
    }
  }
  if (config.cloud_rates.modality_rates.empty()) {
    config.cloud_rates.modality_rates.assign(config.modality_count, 0.0028);
  }

  if (static_cast<int>(config.affinity.size()) != config.task_count) {
    throw ConfigError("affinity must have one row per task");
  }
  for (const auto& row : config.affinity) {
    if (static_cast<int>(row.size()) != config.modality_count) {
      throw ConfigError("affinity rows must have one entry per modality");
    }
    for (double v : row) {
      if (v < 0 || v > 1) throw ConfigError("affinity entries must be in [0, 1]");
    }
  }
  if (static_cast<int>(config.task_base_scores.size()) != config.task_count) {
    throw ConfigError("task_base_scores must have one entry per task");
  }
  for (double b : config.task_base_scores) {
    if (b < 0) throw ConfigError("task base scores must be >= 0");
  }
  if (static_cast<int>(config.modality_bytes.size()) != config.modality_count) {
    throw ConfigError("modality_bytes must have one entry per modality");
  }
  if (static_cast<int>(config.cloud_rates.modality_rates.size()) != config.modality_count) {
    throw ConfigError("cloud modality_rates must have one entry per modality");
  }
  for (double r : config.cloud_rates.modality_rates) {
    if (r < 0) throw ConfigError("cloud modality rates must be >= 0");
  }
  if (config.cloud_rates.prompt_rate_per_1k < 0 || config.cloud_rates.response_rate_per_1k < 0) {
    throw ConfigError("cloud token rates must be >= 0");
  }
  if (config.coverage_bonus_scale < 0) throw ConfigError("coverage_bonus_scale must be >= 0");
  if (config.local_quality_gap < 0) throw ConfigError("local_quality_gap must be >= 0");
  if (config.nde_noise_sd < 0 || config.assoc_noise_sd < 0 ||
      config.cloud_latency_jitter_sd < 0) {
    throw ConfigError("noise standard deviations must be >= 0");
  }
  if (config.prompt_token_range.first < 1 ||
      config.prompt_token_range.second < config.prompt_token_range.first) {
    throw ConfigError("prompt token range is empty or below 1");
  }
  if (config.response_token_range.first < 1 ||
      config.response_token_range.second < config.response_token_range.first) {
    throw ConfigError("response token range is empty or below 1");
  }
  if (config.local_model_params <= 0 || config.local_ref_tokens <= 0) {
    throw ConfigError("local model parameters and reference tokens must be > 0");
  }
  if (config.cloud_latency_base_s < 0 || config.cloud_latency_per_modality_s < 0 ||
      config.cloud_latency_min_s < 0) {
    throw ConfigError("cloud latency parameters must be >= 0");
  }
  if (config.split_ratio <= 0 || config.split_ratio > 1) {
    throw ConfigError("split_ratio must be in (0, 1]");
  }
  validate(config.device);
  if (config.pricing.usd_per_joule <= 0) throw ConfigError("usd_per_joule must be > 0");
  return config;
}

std::vector<ConversationView> group_conversations(std::span<const DialogueRecord> records) {
  std::vector<ConversationView> out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= records.size(); ++i) {
    if (i == records.size() || records[i].conversation_id != records[start].conversation_id) {
      out.emplace_back(records.data() + start, i - start);
      start = i;
    }
  }
  return out;
}

double cloud_interaction_latency(const GeneratorConfig& config, int modality_count,
                                 double jitter) {
  const double lat = config.cloud_latency_base_s +
                     config.cloud_latency_per_modality_s * modality_count + jitter;
  return std::max(lat, config.cloud_latency_min_s);
}

double counterfactual_cloud_jitter(const GeneratorConfig& config, std::int64_t conversation_id,
                                   int turn_index, int action_idx) {
  std::uint64_t h = config.seed;
  h = mix_seed(h, 0x636c6f7564ULL);  // stream tag
  h = mix_seed(h, static_cast<std::uint64_t>(conversation_id));
  h = mix_seed(h, static_cast<std::uint64_t>(turn_index));
  h = mix_seed(h, static_cast<std::uint64_t>(action_idx));
  return hashed_normal(h, 0.0, config.cloud_latency_jitter_sd);
}

namespace {

// Bounds from the records of the first train_conversations conversations.
NormalizationBounds measure_bounds(const std::vector<DialogueRecord>& records,
                                   std::int64_t train_conversations) {
  NormalizationBounds b;
  b.latency_min = b.cost_min = std::numeric_limits<double>::infinity();
  b.latency_max = b.cost_max = -std::numeric_limits<double>::infinity();
  std::int64_t seen_conversations = 0;
  std::int64_t last_id = -1;
  for (const auto& r : records) {
    if (r.conversation_id != last_id) {
      last_id = r.conversation_id;
      ++seen_conversations;
    }
    if (seen_conversations > train_conversations) break;
    b.latency_min = std::min(b.latency_min, r.latency_s);
    b.latency_max = std::max(b.latency_max, r.latency_s);
    b.cost_min = std::min(b.cost_min, r.cost_usd);
    b.cost_max = std::max(b.cost_max, r.cost_usd);
  }
  if (!std::isfinite(b.latency_min)) return NormalizationBounds{};
  // Degenerate spreads would break min-max scaling downstream.
  if (b.latency_max <= b.latency_min) b.latency_max = b.latency_min + 1e-12;
  if (b.cost_max <= b.cost_min) b.cost_max = b.cost_min + 1e-12;
  return b;
}

}  // namespace

Dataset generate(const GeneratorConfig& raw_config) {
  const GeneratorConfig config = resolve_defaults(raw_config);
  Rng rng(config.seed);
  const auto actions = enumerate_actions(config.modality_count);

  Dataset out;
  out.meta.modality_count = config.modality_count;
  out.meta.task_count = config.task_count;
  out.meta.split_ratio = config.split_ratio;
  out.meta.generator = config;

  for (std::int64_t conv = 0; conv < config.conversations; ++conv) {
    const int turns = static_cast<int>(rng.uniform_int(kMinTurns, kMaxTurns));
    std::uint32_t uploaded_mask = 0;
    for (int t = 0; t < turns; ++t) {
      DialogueRecord r;
      r.conversation_id = conv;
      r.turn_index = t;
      r.task.index = static_cast<int>(rng.uniform_int(0, config.task_count - 1));
      const int action_idx =
          static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(actions.size()) - 1));
      r.action = actions[action_idx];
      r.prompt_tokens =
          rng.uniform_int(config.prompt_token_range.first, config.prompt_token_range.second);
      r.response_tokens =
          rng.uniform_int(config.response_token_range.first, config.response_token_range.second);

      r.association.resize(config.modality_count);
      for (int m = 0; m < config.modality_count; ++m) {
        const double v =
            config.affinity[r.task.index][m] + rng.normal(0.0, config.assoc_noise_sd);
        r.association[m] = std::clamp(v, -1.0, 1.0);
      }

      // Draw all randomness up front so knobs like the quality gap shift
      // scores without shifting the random stream.
      const double score_noise = rng.normal(0.0, config.nde_noise_sd);
      const double latency_jitter = rng.normal(0.0, config.cloud_latency_jitter_sd);

      std::uint32_t bonus_mask = r.action.is_local() ? 0u : r.action.modalities().mask();
      if (config.persistent_modality_bonus) bonus_mask |= uploaded_mask;
      double coverage = 0.0;
      for (int m = 0; m < config.modality_count; ++m) {
        if ((bonus_mask >> m) & 1u) coverage += config.affinity[r.task.index][m];
      }
      double mean = config.task_base_scores[r.task.index] +
                    config.coverage_bonus_scale * coverage;
      if (r.action.is_local()) mean -= config.local_quality_gap;
      r.response_score = std::max(0.0, mean + score_noise);

      if (r.action.is_local()) {
        const LocalWorkload w{config.local_model_params,
                              static_cast<double>(r.prompt_tokens + r.response_tokens),
                              config.local_ref_tokens};
        r.latency_s = local_latency_s(w, config.device);
        r.cost_usd = local_cost_usd(r.latency_s, config.device, config.pricing);
      } else {
        r.latency_s = cloud_interaction_latency(config, r.action.modalities().count(),
                                                latency_jitter);
        r.cost_usd = cloud_cost_usd(static_cast<double>(r.prompt_tokens),
                                    static_cast<double>(r.response_tokens),
                                    r.action.modalities(), config.modality_bytes,
                                    config.cloud_rates);
        uploaded_mask |= r.action.modalities().mask();
      }
      out.records.push_back(std::move(r));
    }
  }

  out.meta.record_count = static_cast<std::int64_t>(out.records.size());
  std::int64_t train_conversations =
      static_cast<std::int64_t>(std::floor(config.split_ratio * config.conversations));
  if (train_conversations < 1) train_conversations = config.conversations;
  out.meta.norm = measure_bounds(out.records, train_conversations);
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double ratio) {
  const auto conversations = group_conversations(dataset.records);
  const auto n = static_cast<std::int64_t>(conversations.size());
  if (n < 2) throw ConfigError("split needs at least 2 conversations");
  const auto train_n = static_cast<std::int64_t>(std::floor(ratio * static_cast<double>(n)));
  if (train_n < 1 || train_n >= n) {
    throw ConfigError("split ratio " + std::to_string(ratio) +
                      " leaves an empty train or test side");
  }

  Dataset train, test;
  train.meta = dataset.meta;
  test.meta = dataset.meta;
  for (std::int64_t i = 0; i < n; ++i) {
    auto& side = (i < train_n) ? train : test;
    side.records.insert(side.records.end(), conversations[i].begin(), conversations[i].end());
  }
  train.meta.record_count = static_cast<std::int64_t>(train.records.size());
  test.meta.record_count = static_cast<std::int64_t>(test.records.size());
  train.meta.split_ratio = ratio;
  test.meta.split_ratio = ratio;

  const auto bounds = measure_bounds(train.records, train_n);
  train.meta.norm = bounds;
  test.meta.norm = bounds;
  return {std::move(train), std::move(test)};
}

namespace {

json to_json(const GeneratorConfig& c) {
  return json{{"seed", c.seed},
              {"conversations", c.conversations},
              {"modality_count", c.modality_count},
              {"task_count", c.task_count},
              {"affinity", c.affinity},
              {"task_base_scores", c.task_base_scores},
              {"coverage_bonus_scale", c.coverage_bonus_scale},
              {"local_quality_gap", c.local_quality_gap},
              {"nde_noise_sd", c.nde_noise_sd},
              {"assoc_noise_sd", c.assoc_noise_sd},
              {"persistent_modality_bonus", c.persistent_modality_bonus},
              {"device",
               {{"name", c.device.name},
                {"peak_tflops", c.device.peak_tflops},
                {"max_watts", c.device.max_watts}}},
              {"usd_per_joule", c.pricing.usd_per_joule},
              {"local_model_params", c.local_model_params},
              {"local_ref_tokens", c.local_ref_tokens},
              {"cloud_latency_base_s", c.cloud_latency_base_s},
              {"cloud_latency_per_modality_s", c.cloud_latency_per_modality_s},
              {"cloud_latency_jitter_sd", c.cloud_latency_jitter_sd},
              {"cloud_latency_min_s", c.cloud_latency_min_s},
              {"prompt_token_range", {c.prompt_token_range.first, c.prompt_token_range.second}},
              {"response_token_range",
               {c.response_token_range.first, c.response_token_range.second}},
              {"modality_bytes", c.modality_bytes},
              {"prompt_rate_per_1k", c.cloud_rates.prompt_rate_per_1k},
              {"response_rate_per_1k", c.cloud_rates.response_rate_per_1k},
              {"modality_rates", c.cloud_rates.modality_rates},
              {"split_ratio", c.split_ratio}};
}

GeneratorConfig generator_from_json(const json& j) {
  GeneratorConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.conversations = j.at("conversations").get<int>();
  c.modality_count = j.at("modality_count").get<int>();
  c.task_count = j.at("task_count").get<int>();
  c.affinity = j.at("affinity").get<std::vector<std::vector<double>>>();
  c.task_base_scores = j.at("task_base_scores").get<std::vector<double>>();
  c.coverage_bonus_scale = j.at("coverage_bonus_scale").get<double>();
  c.local_quality_gap = j.at("local_quality_gap").get<double>();
  c.nde_noise_sd = j.at("nde_noise_sd").get<double>();
  c.assoc_noise_sd = j.at("assoc_noise_sd").get<double>();
  c.persistent_modality_bonus = j.at("persistent_modality_bonus").get<bool>();
  c.device.name = j.at("device").at("name").get<std::string>();
  c.device.peak_tflops = j.at("device").at("peak_tflops").get<double>();
  c.device.max_watts = j.at("device").at("max_watts").get<double>();
  c.pricing.usd_per_joule = j.at("usd_per_joule").get<double>();
  c.local_model_params = j.at("local_model_params").get<double>();
  c.local_ref_tokens = j.at("local_ref_tokens").get<double>();
  c.cloud_latency_base_s = j.at("cloud_latency_base_s").get<double>();
  c.cloud_latency_per_modality_s = j.at("cloud_latency_per_modality_s").get<double>();
  c.cloud_latency_jitter_sd = j.at("cloud_latency_jitter_sd").get<double>();
  c.cloud_latency_min_s = j.at("cloud_latency_min_s").get<double>();
  c.prompt_token_range = {j.at("prompt_token_range")[0].get<int>(),
                          j.at("prompt_token_range")[1].get<int>()};
  c.response_token_range = {j.at("response_token_range")[0].get<int>(),
                            j.at("response_token_range")[1].get<int>()};
  c.modality_bytes = j.at("modality_bytes").get<std::vector<double>>();
  c.cloud_rates.prompt_rate_per_1k = j.at("prompt_rate_per_1k").get<double>();
  c.cloud_rates.response_rate_per_1k = j.at("response_rate_per_1k").get<double>();
  c.cloud_rates.modality_rates = j.at("modality_rates").get<std::vector<double>>();
  c.split_ratio = j.at("split_ratio").get<double>();
  return c;
}

const json& require_field(const json& j, const char* field, int lineno) {
  auto it = j.find(field);
  if (it == j.end()) {
    throw DataError("line " + std::to_string(lineno) + ": missing field '" + field + "'");
  }
  return *it;
}

}  // namespace

void save(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path.string());

  json meta{{"schema", kSchemaName},
            {"version", kSchemaVersion},
            {"modality_count", dataset.meta.modality_count},
            {"task_count", dataset.meta.task_count},
            {"record_count", dataset.meta.record_count},
            {"split_ratio", dataset.meta.split_ratio},
            {"norm",
             {{"latency_min", dataset.meta.norm.latency_min},
              {"latency_max", dataset.meta.norm.latency_max},
              {"cost_min", dataset.meta.norm.cost_min},
              {"cost_max", dataset.meta.norm.cost_max}}},
            {"generator", to_json(dataset.meta.generator)}};
  out << meta.dump() << "\n";

  for (const auto& r : dataset.records) {
    json row{{"conversation_id", r.conversation_id},
             {"turn_index", r.turn_index},
             {"task", r.task.index},
             {"action",
              {{"llm", to_string(r.action.llm())},
               {"modalities", r.action.modalities().indices()}}},
             {"prompt_tokens", r.prompt_tokens},
             {"response_tokens", r.response_tokens},
             {"response_score", r.response_score},
             {"association", r.association},
             {"latency_s", r.latency_s},
             {"cost_usd", r.cost_usd}};
    out << row.dump() << "\n";
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Dataset load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file: " + path.string());

  Dataset out;
  int lineno = 1;
  try {
    const json meta = json::parse(line);
    if (meta.value("schema", "") != kSchemaName ||
        meta.value("version", -1) != kSchemaVersion) {
      throw DataError("schema-version mismatch: expected " + std::string(kSchemaName) +
                      " v" + std::to_string(kSchemaVersion));
    }
    out.meta.modality_count = meta.at("modality_count").get<int>();
    out.meta.task_count = meta.at("task_count").get<int>();
    out.meta.record_count = meta.at("record_count").get<std::int64_t>();
    out.meta.split_ratio = meta.at("split_ratio").get<double>();
    out.meta.norm.latency_min = meta.at("norm").at("latency_min").get<double>();
    out.meta.norm.latency_max = meta.at("norm").at("latency_max").get<double>();
    out.meta.norm.cost_min = meta.at("norm").at("cost_min").get<double>();
    out.meta.norm.cost_max = meta.at("norm").at("cost_max").get<double>();
    out.meta.generator = generator_from_json(meta.at("generator"));
  } catch (const json::exception& e) {
    throw DataError("line 1: bad metadata header: " + std::string(e.what()));
  }
  if (out.meta.norm.latency_min > out.meta.norm.latency_max ||
      out.meta.norm.cost_min > out.meta.norm.cost_max) {
    throw DataError("line 1: normalization bounds violate min <= max");
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(lineno) + ": malformed row: " + e.what());
    }
    DialogueRecord r;
    try {
      r.conversation_id = require_field(row, "conversation_id", lineno).get<std::int64_t>();
      r.turn_index = require_field(row, "turn_index", lineno).get<int>();
      r.task.index = require_field(row, "task", lineno).get<int>();
      const json& a = require_field(row, "action", lineno);
      const auto llm = llm_from_string(require_field(a, "llm", lineno).get<std::string>());
      const auto mods = ModalitySet::from_indices(
          require_field(a, "modalities", lineno).get<std::vector<int>>());
      r.action = ActionSpec(llm, mods);
      r.prompt_tokens = require_field(row, "prompt_tokens", lineno).get<std::int64_t>();
      r.response_tokens = require_field(row, "response_tokens", lineno).get<std::int64_t>();
      r.response_score = require_field(row, "response_score", lineno).get<double>();
      r.association = require_field(row, "association", lineno).get<std::vector<double>>();
      r.latency_s = require_field(row, "latency_s", lineno).get<double>();
      r.cost_usd = require_field(row, "cost_usd", lineno).get<double>();
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(lineno) + ": malformed row: " + e.what());
    } catch (const std::invalid_argument& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }

    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (r.task.index < 0 || r.task.index >= out.meta.task_count) {
      throw DataError(where + "task index out of range");
    }
    if (static_cast<int>(r.association.size()) != out.meta.modality_count) {
      throw DataError(where + "association vector length != modality_count");
    }
    for (double v : r.association) {
      if (v < -1.0 || v > 1.0) throw DataError(where + "association value outside [-1, 1]");
    }
    if (!r.action.is_local()) {
      for (int m : r.action.modalities().indices()) {
        if (m >= out.meta.modality_count) {
          throw DataError(where + "modality index out of range");
        }
      }
    }
    if (r.prompt_tokens < 1 || r.response_tokens < 1) {
      throw DataError(where + "token counts must be >= 1");
    }
    if (r.response_score < 0) throw DataError(where + "response_score must be >= 0");
    if (r.latency_s < 0 || r.cost_usd < 0) {
      throw DataError(where + "latency and cost must be >= 0");
    }
    out.records.push_back(std::move(r));
  }

  if (static_cast<std::int64_t>(out.records.size()) != out.meta.record_count) {
    throw DataError("record_count mismatch: header says " +
                    std::to_string(out.meta.record_count) + ", file has " +
                    std::to_string(out.records.size()));
  }
  // Conversations must be contiguous with 0-based consecutive turns of the
  // schema's 2-5 turn range.
  for (const auto& conv : group_conversations(out.records)) {
    if (conv.size() < kMinTurns || conv.size() > kMaxTurns) {
      throw DataError("conversation " + std::to_string(conv.front().conversation_id) +
                      " has " + std::to_string(conv.size()) + " turns, expected 2-5");
    }
    for (std::size_t t = 0; t < conv.size(); ++t) {
      if (conv[t].turn_index != static_cast<int>(t)) {
        throw DataError("conversation " + std::to_string(conv.front().conversation_id) +
                        ": turn indices not consecutive from 0");
      }
    }
  }
  return out;
}

}  // namespace offload
