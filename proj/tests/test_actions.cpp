#include <doctest.h>

#include <set>

#include "offload/actions.hpp"
#include "offload/errors.hpp"

using namespace offload;

TEST_CASE("action space size") {
  CHECK(enumerate_actions(3).size() == 9);  // 1 + 2^3
  CHECK(enumerate_actions(1).size() == 3);  // 1 + 2^1
  CHECK(enumerate_actions(3).front() == ActionSpec::local());
}

TEST_CASE("enumeration order is local, then cloud masks in binary order") {
  const auto actions = enumerate_actions(3);
  CHECK(actions[1] == ActionSpec::cloud(ModalitySet::from_mask(0)));
  // index 2 = cloud with only the first modality (mask 0b001).
  CHECK(actions[2] == ActionSpec::cloud(ModalitySet::from_mask(1)));
  CHECK(actions[2].modalities().indices() == std::vector<int>{0});
  CHECK(actions[8] == ActionSpec::cloud(ModalitySet::from_mask(7)));
}

TEST_CASE("action_index is the exact inverse of enumerate_actions") {
  CHECK(action_index(ActionSpec::local(), 3) == 0);
  CHECK(action_index(ActionSpec::cloud(ModalitySet::from_mask(0)), 3) == 1);
  for (int m : {1, 2, 3, 4}) {
    const auto actions = enumerate_actions(m);
    std::set<int> seen;
    for (int i = 0; i < static_cast<int>(actions.size()); ++i) {
      const int idx = action_index(actions[i], m);
      CHECK(idx == i);
      seen.insert(idx);
    }
    CHECK(static_cast<int>(seen.size()) == action_space_size(m));
  }
}

TEST_CASE("local actions cannot carry modalities") {
  CHECK_THROWS_AS(ActionSpec(LLMChoice::Local, ModalitySet::from_mask(1)),
                  std::invalid_argument);
  CHECK_NOTHROW(ActionSpec(LLMChoice::Cloud, ModalitySet::from_mask(1)));
  CHECK_NOTHROW(ActionSpec(LLMChoice::Local, ModalitySet{}));
}

TEST_CASE("modality_count guard rails") {
  CHECK_THROWS_AS(enumerate_actions(0), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_actions(17), std::invalid_argument);
  CHECK_NOTHROW(enumerate_actions(16));
}

TEST_CASE("domain type validation") {
  RewardWeights w;
  CHECK_NOTHROW(validate(w));
  w.beta_cost = -0.1;
  CHECK_THROWS_AS(validate(w), ConfigError);

  ConstraintBudget b;
  CHECK_NOTHROW(validate(b));
  b.latency_budget_s = 0;
  CHECK_THROWS_AS(validate(b), ConfigError);
  b = ConstraintBudget{};
  b.horizon = 0;
  CHECK_THROWS_AS(validate(b), ConfigError);

  DeviceProfile d{"x", 1.0, 5.0};
  CHECK_NOTHROW(validate(d));
  d.peak_tflops = 0;
  CHECK_THROWS_AS(validate(d), ConfigError);
}
