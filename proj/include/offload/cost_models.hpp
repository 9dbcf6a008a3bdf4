#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "offload/actions.hpp"

namespace offload {

// One local inference: 2 * model_params FLOPs per forward pass, amortized
// over a reference processing length, times the total token count.
struct LocalWorkload {
  double model_params = 0.0;  // parameter count of the local LLM
  double total_tokens = 0.0;  // prompt + response tokens
  double ref_tokens = 0.0;    // reference processing length
};

// Cloud provider pricing. Token rates are USD per 1K tokens; modality rates
// are USD per unit of the modality's size proxy.
struct CloudRates {
  double prompt_rate_per_1k = 0.005;
  double response_rate_per_1k = 0.015;
  std::vector<double> modality_rates;
};

// Converts local energy use (Joules) into USD.
struct EnergyPricing {
  double usd_per_joule = 4.63e-8;
};

struct EmbeddingVector {
  std::vector<double> values;
};

// Compute latency of the local LLM on the given device, in seconds:
// 2 * model_params * total_tokens / (ref_tokens * peak FLOPS).
double local_latency_s(const LocalWorkload& w, const DeviceProfile& d);

// Energy cost of a local inference: latency * max_watts * usd_per_joule.
double local_cost_usd(double latency_s, const DeviceProfile& d, const EnergyPricing& p);

// Cloud service fee: token costs plus the size-proportional fee of every
// uploaded modality. `modality_sizes` holds (modality index, size) pairs and
// must cover exactly the selected set; an entry for an unselected modality
// is rejected.
double cloud_cost_usd(double prompt_tokens, double response_tokens,
                      const ModalitySet& selected,
                      std::span<const std::pair<int, double>> modality_sizes,
                      const CloudRates& rates);

// Convenience: picks the selected modalities' sizes out of a universe-sized
// size vector.
double cloud_cost_usd(double prompt_tokens, double response_tokens,
                      const ModalitySet& selected,
                      const std::vector<double>& universe_sizes,
                      const CloudRates& rates);

// Cosine similarity of two embeddings, in [-1, 1]. Zero-norm input is
// rejected.
double association(const EmbeddingVector& text, const EmbeddingVector& image);

// Min-max scaling clamped to [0, 1]. Bounds come from the training split.
double minmax_normalize(double x, double lo, double hi);

// Built-in local device table (name, peak TFLOPS, max Watts).
const std::vector<DeviceProfile>& builtin_devices();
DeviceProfile find_device(const std::string& name);

// Loads a device table file: one "name,tflops,watts" CSV row per line,
// '#' comments and a header row allowed.
std::vector<DeviceProfile> load_device_table(const std::filesystem::path& path);

// Loads embeddings: one "id v0 v1 ... vd" line per vector.
std::vector<std::pair<std::string, EmbeddingVector>> load_embeddings(
    const std::filesystem::path& path);

}  // namespace offload
