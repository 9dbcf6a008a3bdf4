#include "offload/cost_models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "offload/errors.hpp"

namespace offload {

double local_latency_s(const LocalWorkload& w, const DeviceProfile& d) {
  if (w.model_params <= 0 || w.total_tokens <= 0 || w.ref_tokens <= 0) {
    throw std::invalid_argument("local workload fields must be > 0");
  }
  if (d.peak_tflops <= 0) throw std::invalid_argument("device peak_tflops must be > 0");
  const double peak_flops = d.peak_tflops * 1e12;
  return 2.0 * w.model_params * w.total_tokens / (w.ref_tokens * peak_flops);
}

double local_cost_usd(double latency_s, const DeviceProfile& d, const EnergyPricing& p) {
  if (latency_s < 0) throw std::invalid_argument("latency must be >= 0");
  if (p.usd_per_joule <= 0) throw std::invalid_argument("usd_per_joule must be > 0");
  return latency_s * d.max_watts * p.usd_per_joule;
}

double cloud_cost_usd(double prompt_tokens, double response_tokens,
                      const ModalitySet& selected,
                      std::span<const std::pair<int, double>> modality_sizes,
                      const CloudRates& rates) {
  if (prompt_tokens < 0 || response_tokens < 0) {
    throw std::invalid_argument("token counts must be >= 0");
  }
  double cost = rates.prompt_rate_per_1k * prompt_tokens / 1000.0 +
                rates.response_rate_per_1k * response_tokens / 1000.0;
  std::uint32_t covered = 0;
  for (const auto& [m, size] : modality_sizes) {
    if (!selected.contains(m)) {
      throw std::invalid_argument("size given for unselected modality " + std::to_string(m));
    }
    if (m >= static_cast<int>(rates.modality_rates.size())) {
      throw std::invalid_argument("no rate for modality " + std::to_string(m));
    }
    cost += rates.modality_rates[m] * size;
    covered |= (1u << m);
  }
  if (covered != selected.mask()) {
    throw std::invalid_argument("missing size for a selected modality");
  }
  return cost;
}

double cloud_cost_usd(double prompt_tokens, double response_tokens,
                      const ModalitySet& selected,
                      const std::vector<double>& universe_sizes,
                      const CloudRates& rates) {
  std::vector<std::pair<int, double>> sizes;
  for (int m : selected.indices()) {
    if (m >= static_cast<int>(universe_sizes.size())) {
      throw std::invalid_argument("no size for modality " + std::to_string(m));
    }
    sizes.emplace_back(m, universe_sizes[m]);
  }
  return cloud_cost_usd(prompt_tokens, response_tokens, selected, sizes, rates);
}

double association(const EmbeddingVector& text, const EmbeddingVector& image) {
  if (text.values.size() != image.values.size()) {
    throw std::invalid_argument("embedding dimensions differ");
  }
  double dot = 0, nt = 0, ni = 0;
  for (std::size_t i = 0; i < text.values.size(); ++i) {
    dot += text.values[i] * image.values[i];
    nt += text.values[i] * text.values[i];
    ni += image.values[i] * image.values[i];
  }
  if (nt == 0 || ni == 0) throw std::invalid_argument("zero-norm embedding");
  return dot / (std::sqrt(nt) * std::sqrt(ni));
}

double minmax_normalize(double x, double lo, double hi) {
  if (lo >= hi) throw std::invalid_argument("minmax_normalize requires lo < hi");
  const double z = (x - lo) / (hi - lo);
  return z < 0 ? 0 : (z > 1 ? 1 : z);
}

const std::vector<DeviceProfile>& builtin_devices() {
  static const std::vector<DeviceProfile> devices = {
      {"Raspberry Pi-4B", 0.0135, 8},
      {"Raspberry Pi-5", 0.0314, 12},
      {"Jetson Nano", 0.472, 10},
      {"Jetson TX2", 1.33, 15},
      {"Jetson Xavier NX", 21, 20},
      {"Jetson Orin NX", 100, 25},
      {"iPhone 15 (A16)", 15.8, 15},
      {"iPhone 15 Pro (A17 Pro)", 35, 15},
  };
  return devices;
}

DeviceProfile find_device(const std::string& name) {
  for (const auto& d : builtin_devices()) {
    if (d.name == name) return d;
  }
  throw ConfigError("unknown device '" + name + "'");
}

std::vector<DeviceProfile> load_device_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open device table: " + path.string());
  std::vector<DeviceProfile> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string name, tflops, watts;
    if (!std::getline(ss, name, ',') || !std::getline(ss, tflops, ',') ||
        !std::getline(ss, watts)) {
      throw DataError("device table line " + std::to_string(lineno) +
                      ": expected name,tflops,watts");
    }
    if (name == "name") continue;  // header row
    DeviceProfile d;
    d.name = name;
    try {
      d.peak_tflops = std::stod(tflops);
      d.max_watts = std::stod(watts);
    } catch (const std::exception&) {
      throw DataError("device table line " + std::to_string(lineno) + ": bad number");
    }
    validate(d);
    out.push_back(std::move(d));
  }
  if (out.empty()) throw DataError("device table is empty: " + path.string());
  return out;
}

std::vector<std::pair<std::string, EmbeddingVector>> load_embeddings(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path.string());
  std::vector<std::pair<std::string, EmbeddingVector>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string id;
    if (!(ss >> id)) continue;
    EmbeddingVector v;
    double x;
    while (ss >> x) v.values.push_back(x);
    if (v.values.empty()) {
      throw DataError("embedding line " + std::to_string(lineno) + ": no components");
    }
    out.emplace_back(std::move(id), std::move(v));
  }
  return out;
}

}  // namespace offload
