#include "offload/policy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "offload/errors.hpp"
#include "offload/rng.hpp"

namespace offload {

namespace {

void fill_uniform(std::vector<double>& v, std::size_t n, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  v.resize(n);
  for (auto& x : v) x = rng.uniform(-bound, bound);
}

// y = W x + b, W is (out x in) row-major.
void linear(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::vector<double>& y) {
  const std::size_t out = b.size();
  const std::size_t in = x.size();
  y.resize(out);
  for (std::size_t o = 0; o < out; ++o) {
    double acc = b[o];
    const double* row = w.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

}  // namespace

PolicyParams PolicyParams::init(int input_dim, int hidden_dim, int action_count,
                                std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || action_count < 2) {
    throw ConfigError("policy dimensions must be positive (and >= 2 actions)");
  }
  PolicyParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.action_count = action_count;
  Rng rng(mix_seed(seed, 0x706f6c696379ULL));
  fill_uniform(p.w1, static_cast<std::size_t>(hidden_dim) * input_dim, input_dim, rng);
  fill_uniform(p.b1, hidden_dim, input_dim, rng);
  fill_uniform(p.w2, static_cast<std::size_t>(hidden_dim) * hidden_dim, hidden_dim, rng);
  fill_uniform(p.b2, hidden_dim, hidden_dim, rng);
  fill_uniform(p.wp, static_cast<std::size_t>(action_count) * hidden_dim, hidden_dim, rng);
  fill_uniform(p.bp, action_count, hidden_dim, rng);
  fill_uniform(p.wv, hidden_dim, hidden_dim, rng);
  fill_uniform(p.bv, 1, hidden_dim, rng);
  return p;
}

std::vector<std::pair<std::string, std::vector<double>*>> PolicyParams::tensors() {
  return {{"w1", &w1}, {"b1", &b1}, {"w2", &w2}, {"b2", &b2},
          {"wp", &wp}, {"bp", &bp}, {"wv", &wv}, {"bv", &bv}};
}

std::vector<std::pair<std::string, const std::vector<double>*>> PolicyParams::tensors() const {
  return {{"w1", &w1}, {"b1", &b1}, {"w2", &w2}, {"b2", &b2},
          {"wp", &wp}, {"bp", &bp}, {"wv", &wv}, {"bv", &bv}};
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors()) n += t->size();
  return n;
}

bool PolicyParams::all_finite() const {
  for (const auto& [name, t] : tensors()) {
    for (double x : *t) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

ForwardPass forward(const PolicyParams& p, std::span<const double> state) {
  if (static_cast<int>(state.size()) != p.input_dim) {
    throw std::invalid_argument("state dimension mismatch: expected " +
                                std::to_string(p.input_dim) + ", got " +
                                std::to_string(state.size()));
  }
  ForwardPass f;
  f.input.assign(state.begin(), state.end());

  linear(p.w1, p.b1, f.input, f.h1);
  for (auto& x : f.h1) x = std::tanh(x);
  linear(p.w2, p.b2, f.h1, f.h2);
  for (auto& x : f.h2) x = std::tanh(x);

  linear(p.wp, p.bp, f.h2, f.logits);
  std::vector<double> vout;
  linear(p.wv, p.bv, f.h2, vout);
  f.value = vout[0];

  double max_logit = f.logits[0];
  for (double z : f.logits) max_logit = std::max(max_logit, z);
  double sum = 0.0;
  f.probs.resize(f.logits.size());
  for (std::size_t a = 0; a < f.logits.size(); ++a) {
    f.probs[a] = std::exp(f.logits[a] - max_logit);
    sum += f.probs[a];
  }
  const double log_sum = std::log(sum);
  f.log_probs.resize(f.logits.size());
  for (std::size_t a = 0; a < f.logits.size(); ++a) {
    f.probs[a] /= sum;
    f.log_probs[a] = f.logits[a] - max_logit - log_sum;
  }

  for (double z : f.logits) {
    if (!std::isfinite(z)) throw DivergenceError("non-finite logit in forward pass");
  }
  if (!std::isfinite(f.value)) throw DivergenceError("non-finite value in forward pass");
  return f;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double pr : probs) {
    if (pr > 0) h -= pr * std::log(pr);
  }
  return h;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {
constexpr const char* kCheckpointMagic = "offload-checkpoint v1";

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}
}  // namespace

void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out << kCheckpointMagic << "\n";
  out << "dims " << params.input_dim << " " << params.hidden_dim << " "
      << params.action_count << "\n";
  for (const auto& [name, tensor] : params.tensors()) {
    out << "tensor " << name << " " << tensor->size() << "\n";
    for (std::size_t i = 0; i < tensor->size(); ++i) {
      out << format_double((*tensor)[i]) << ((i + 1) % 8 == 0 ? "\n" : " ");
    }
    if (tensor->size() % 8 != 0) out << "\n";
  }
  if (!out) throw DataError("checkpoint write failed: " + path.string());
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw DataError("bad checkpoint magic in " + path.string());
  }
  PolicyParams p;
  std::string tag;
  in >> tag >> p.input_dim >> p.hidden_dim >> p.action_count;
  if (tag != "dims" || !in) throw DataError("bad checkpoint dims in " + path.string());

  for (auto& [name, tensor] : p.tensors()) {
    std::string key, got_name;
    std::size_t n = 0;
    if (!(in >> key >> got_name >> n) || key != "tensor" || got_name != name) {
      throw DataError("checkpoint tensor order mismatch, expected '" + name + "'");
    }
    tensor->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(in >> (*tensor)[i])) {
        throw DataError("checkpoint truncated in tensor '" + name + "'");
      }
    }
  }
  if (!p.all_finite()) throw DataError("checkpoint holds non-finite values");
  return p;
}

}  // namespace offload
