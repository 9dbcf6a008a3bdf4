#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "offload/errors.hpp"
#include "offload/policy.hpp"
#include "offload/rng.hpp"

using namespace offload;

namespace {

std::vector<double> random_state(int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

}  // namespace

TEST_CASE("a zero policy head yields the uniform distribution") {
  PolicyParams p = PolicyParams::init(50, 64, 9, 1);
  std::fill(p.wp.begin(), p.wp.end(), 0.0);
  std::fill(p.bp.begin(), p.bp.end(), 0.0);
  const ForwardPass f = forward(p, random_state(50, 2));
  for (double pr : f.probs) CHECK(pr == doctest::Approx(1.0 / 9).epsilon(1e-12));
  CHECK(entropy(f.probs) == doctest::Approx(std::log(9.0)).epsilon(1e-12));
}

TEST_CASE("probabilities sum to one and forward is pure") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const PolicyParams p = PolicyParams::init(20, 16, 9, seed);
    const auto state = random_state(20, seed + 100);
    const ForwardPass a = forward(p, state);
    const ForwardPass b = forward(p, state);
    double sum = 0;
    for (double pr : a.probs) sum += pr;
    CHECK(std::abs(sum - 1.0) < 1e-6);
    CHECK(a.probs == b.probs);
    CHECK(a.value == b.value);
  }
}

TEST_CASE("initialization is seeded and within the fan-in bound") {
  const PolicyParams a = PolicyParams::init(10, 8, 5, 42);
  const PolicyParams b = PolicyParams::init(10, 8, 5, 42);
  const PolicyParams c = PolicyParams::init(10, 8, 5, 43);
  CHECK(a.w1 == b.w1);
  CHECK(a.wv == b.wv);
  CHECK(a.w1 != c.w1);
  const double bound = 1.0 / std::sqrt(10.0);
  for (double x : a.w1) {
    CHECK(x <= bound);
    CHECK(x >= -bound);
  }
}

TEST_CASE("softmax stays finite for logits up to magnitude 50") {
  PolicyParams p = PolicyParams::init(4, 4, 3, 7);
  // Zero the trunk so the policy head biases are the logits.
  std::fill(p.wp.begin(), p.wp.end(), 0.0);
  std::fill(p.w1.begin(), p.w1.end(), 0.0);
  std::fill(p.b1.begin(), p.b1.end(), 0.0);
  std::fill(p.w2.begin(), p.w2.end(), 0.0);
  std::fill(p.b2.begin(), p.b2.end(), 0.0);
  p.bp = {50.0, -50.0, 0.0};
  const ForwardPass f = forward(p, {{0, 0, 0, 0}});
  for (double pr : f.probs) CHECK(std::isfinite(pr));
  for (double lp : f.log_probs) CHECK(std::isfinite(lp));
  CHECK(f.probs[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.log_probs[1] == doctest::Approx(-100.0).epsilon(1e-9));
}

TEST_CASE("entropy is maximal exactly at the uniform distribution") {
  const std::vector<double> uniform(9, 1.0 / 9);
  CHECK(entropy(uniform) == doctest::Approx(std::log(9.0)).epsilon(1e-9));
  std::vector<double> skewed(9, (1.0 - 0.2) / 8);
  skewed[3] = 0.2;
  CHECK(entropy(skewed) < std::log(9.0) - 1e-9);
  for (int n : {2, 5, 9, 17}) {
    std::vector<double> u(static_cast<std::size_t>(n), 1.0 / n);
    CHECK(std::abs(entropy(u) - std::log(static_cast<double>(n))) < 1e-9);
  }
}

TEST_CASE("argmax is invariant under adding a constant to all logits") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> logits(9);
    for (auto& z : logits) z = rng.uniform(-2, 2);
    const int base = argmax(logits);
    std::vector<double> shifted = logits;
    for (auto& z : shifted) z += 123.456;
    CHECK(argmax(shifted) == base);
  }
}

TEST_CASE("forward rejects dimension mismatches") {
  const PolicyParams p = PolicyParams::init(10, 8, 5, 1);
  CHECK_THROWS_AS(forward(p, random_state(11, 1)), std::invalid_argument);
}

TEST_CASE("checkpoint round trip is exact") {
  const PolicyParams p = PolicyParams::init(50, 64, 9, 99);
  const auto path = std::filesystem::temp_directory_path() / "offload_ckpt_test.txt";
  save_checkpoint(p, path);
  const PolicyParams q = load_checkpoint(path);
  CHECK(q.input_dim == p.input_dim);
  CHECK(q.hidden_dim == p.hidden_dim);
  CHECK(q.action_count == p.action_count);
  CHECK(q.w1 == p.w1);
  CHECK(q.b1 == p.b1);
  CHECK(q.w2 == p.w2);
  CHECK(q.b2 == p.b2);
  CHECK(q.wp == p.wp);
  CHECK(q.bp == p.bp);
  CHECK(q.wv == p.wv);
  CHECK(q.bv == p.bv);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects bad files") {
  const auto path = std::filesystem::temp_directory_path() / "offload_ckpt_bad.txt";
  {
    std::ofstream out(path);
    out << "not a checkpoint\n";
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  std::filesystem::remove(path);
}
