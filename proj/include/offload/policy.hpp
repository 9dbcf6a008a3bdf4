#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace offload {

// Actor-critic MLP: a two-layer tanh trunk shared by a softmax policy head
// over the enumerated action space and a scalar value head. Weights are
// row-major (out x in). Everything is plain doubles; gradients are computed
// analytically in rl.cpp.
struct PolicyParams {
  int input_dim = 0;
  int hidden_dim = 0;
  int action_count = 0;

  std::vector<double> w1, b1;  // hidden x input
  std::vector<double> w2, b2;  // hidden x hidden
  std::vector<double> wp, bp;  // actions x hidden
  std::vector<double> wv, bv;  // 1 x hidden

  // Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], seeded.
  static PolicyParams init(int input_dim, int hidden_dim, int action_count,
                           std::uint64_t seed);

  // Named views over every tensor, for updates, checkpoints and grad checks.
  std::vector<std::pair<std::string, std::vector<double>*>> tensors();
  std::vector<std::pair<std::string, const std::vector<double>*>> tensors() const;

  std::size_t parameter_count() const;
  bool all_finite() const;
};

// Activations kept for backprop.
struct ForwardPass {
  std::vector<double> input;
  std::vector<double> h1, h2;       // post-tanh trunk activations
  std::vector<double> logits;
  std::vector<double> probs;        // softmax over enumerate_actions order
  std::vector<double> log_probs;
  double value = 0.0;
};

// Softmax is computed via a max-shifted log-sum-exp, so logits up to a few
// hundred in magnitude stay finite. Throws on dimension mismatch or
// non-finite intermediates.
ForwardPass forward(const PolicyParams& params, std::span<const double> state);

double entropy(std::span<const double> probs);
int argmax(std::span<const double> values);

// Text checkpoint: magic header, then one named tensor per block with shape
// and %.17g values (lossless round-trip).
void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_checkpoint(const std::filesystem::path& path);

}  // namespace offload
