#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "offload/actions.hpp"
#include "offload/cost_models.hpp"

namespace offload {

// One logged prompt/response event. Text never appears here, only metrics:
// the response score is the judged quality ratio against a reference answer,
// association holds the prompt/modality similarity for EVERY modality in the
// universe (measured regardless of what was uploaded) so counterfactual
// actions can be rewarded later.
struct DialogueRecord {
  std::int64_t conversation_id = 0;
  int turn_index = 0;  // 0-based within the conversation
  TaskCategory task;
  ActionSpec action;
  std::int64_t prompt_tokens = 1;
  std::int64_t response_tokens = 1;
  double response_score = 0.0;
  std::vector<double> association;  // one value per modality, in [-1, 1]
  double latency_s = 0.0;
  double cost_usd = 0.0;
};

// Synthetic corpus knobs. The real corpus this schema mirrors is not
// distributable, so the generator is the canonical data source; its score
// model is the ground truth the experiments measure against.
struct GeneratorConfig {
  std::uint64_t seed = 1;
  int conversations = 1500;
  int modality_count = 3;
  int task_count = 4;

  // Score model: mean = task_base + coverage_bonus_scale * sum of selected
  // affinities - local_quality_gap for local actions, plus N(0, nde_noise_sd),
  // clamped at 0. Empty vectors get filled with defaults for the configured
  // counts (see resolve_defaults).
  std::vector<std::vector<double>> affinity;  // task x modality, entries in [0,1]
  std::vector<double> task_base_scores;
  double coverage_bonus_scale = 0.12;
  double local_quality_gap = 0.25;
  double nde_noise_sd = 0.05;
  double assoc_noise_sd = 0.05;
  // When set, modalities uploaded earlier in a conversation keep contributing
  // to the coverage bonus of later turns.
  bool persistent_modality_bonus = false;

  // Local platform.
  DeviceProfile device{"Jetson TX2", 1.33, 15};
  EnergyPricing pricing;
  double local_model_params = 3.8e9;
  // Calibrated so the mean-token workload equals the device table's
  // reference workload (~1.52e10 FLOPs): 2 * 3.8e9 * 181 / 1.52e10.
  double local_ref_tokens = 90.5;

  // Cloud interaction model: recorded latency = base + per_modality * |M|
  // + N(0, jitter_sd), floored at min_latency.
  double cloud_latency_base_s = 4.0;
  double cloud_latency_per_modality_s = 1.2;
  double cloud_latency_jitter_sd = 0.4;
  double cloud_latency_min_s = 0.1;

  std::pair<int, int> prompt_token_range{12, 100};
  std::pair<int, int> response_token_range{30, 220};

  std::vector<double> modality_bytes;  // per-modality payload size proxy
  CloudRates cloud_rates;

  double split_ratio = 0.8;
};

// Fills empty affinity / base-score / size / rate vectors with defaults
// sized to modality_count and task_count, then validates everything.
GeneratorConfig resolve_defaults(GeneratorConfig config);

struct NormalizationBounds {
  double latency_min = 0.0;
  double latency_max = 1.0;
  double cost_min = 0.0;
  double cost_max = 1.0;
};

struct DatasetMeta {
  int modality_count = 3;
  int task_count = 4;
  std::int64_t record_count = 0;
  double split_ratio = 0.8;
  // Min-max bounds measured on the training split only.
  NormalizationBounds norm;
  // Provenance echo; also drives counterfactual latency/cost re-evaluation.
  GeneratorConfig generator;
};

struct Dataset {
  std::vector<DialogueRecord> records;  // grouped by conversation, turns in order
  DatasetMeta meta;
};

// A contiguous run of records sharing a conversation_id.
using ConversationView = std::span<const DialogueRecord>;

std::vector<ConversationView> group_conversations(std::span<const DialogueRecord> records);

// Deterministic synthetic corpus: per conversation draws 2-5 turns; per turn
// a uniform task, a uniform action over the whole action space, token
// counts, per-modality associations, and the score/latency/cost described
// above. Local latency/cost come from the cost models exactly; cloud latency
// from the interaction model. meta.norm is measured on the split_ratio
// training portion.
Dataset generate(const GeneratorConfig& config);

// Splits at conversation granularity: the first floor(ratio * conversations)
// conversations go to train. Both splits carry the same meta with norm
// bounds recomputed from the train side. Fewer than 2 conversations or an
// empty side is an error.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double ratio);

// Line-delimited file: first line is the metadata object, then one record
// per line. Round-trips losslessly.
void save(const Dataset& dataset, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

// Cloud interaction latency for a given modality count and jitter draw.
double cloud_interaction_latency(const GeneratorConfig& config, int modality_count,
                                 double jitter);

// Deterministic jitter for re-evaluating the interaction model on actions
// the log never took, keyed by (dataset seed, conversation, turn, action).
double counterfactual_cloud_jitter(const GeneratorConfig& config, std::int64_t conversation_id,
                                   int turn_index, int action_idx);

}  // namespace offload
