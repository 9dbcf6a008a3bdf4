#include <doctest.h>

#include <cmath>
#include <vector>

#include "offload/baselines.hpp"

using namespace offload;

namespace {
const EncodedState kNoState{};
}

TEST_CASE("local-only always picks the local action") {
  auto policy = BaselinePolicy::local_only(3);
  for (int i = 0; i < 20; ++i) {
    CHECK(policy.select(kNoState, TaskCategory{i % 4}) == ActionSpec::local());
  }
}

TEST_CASE("random covers all nine actions near-uniformly") {
  auto policy = BaselinePolicy::random(3, 123);
  std::vector<int> counts(9, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    ++counts[static_cast<std::size_t>(
        action_index(policy.select(kNoState, TaskCategory{0}), 3))];
  }
  // Expected frequency 1/9 ~ 11.1%; 1.5% tolerance is ~5 binomial sds.
  for (int a = 0; a < 9; ++a) {
    const double freq = static_cast<double>(counts[static_cast<std::size_t>(a)]) / draws;
    CHECK(std::abs(freq - 1.0 / 9) < 0.015);
  }
}

TEST_CASE("random and cloud baselines are deterministic under the seed") {
  auto a1 = BaselinePolicy::random(3, 7);
  auto a2 = BaselinePolicy::random(3, 7);
  auto b = BaselinePolicy::random(3, 8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 50; ++i) {
    const auto x = a1.select(kNoState, TaskCategory{0});
    const auto y = a2.select(kNoState, TaskCategory{0});
    const auto z = b.select(kNoState, TaskCategory{0});
    all_equal = all_equal && (x == y);
    any_diff = any_diff || !(x == z);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("cloud baseline draws uniform subsets including the empty one") {
  auto policy = BaselinePolicy::cloud_random(3, 99);
  std::vector<int> counts(8, 0);
  const int draws = 8000;
  for (int i = 0; i < draws; ++i) {
    const auto a = policy.select(kNoState, TaskCategory{0});
    CHECK(!a.is_local());
    ++counts[a.modalities().mask()];
  }
  for (int mask = 0; mask < 8; ++mask) {
    const double freq = static_cast<double>(counts[static_cast<std::size_t>(mask)]) / draws;
    CHECK(std::abs(freq - 1.0 / 8) < 0.02);
  }
  CHECK(counts[0] > 0);  // text-only cloud is a real option
}

TEST_CASE("ucb keeps exact running means per arm") {
  auto policy = BaselinePolicy::ucb(3, 4, std::sqrt(2.0));
  const ActionSpec a = ActionSpec::cloud(ModalitySet::from_mask(3));
  const TaskCategory task{1};
  policy.update(task, a, 0.7);
  CHECK(policy.arm_pulls(task, action_index(a, 3)) == 1);
  CHECK(policy.arm_mean(task, action_index(a, 3)) == doctest::Approx(0.7).epsilon(1e-12));

  auto fresh = BaselinePolicy::ucb(3, 4, std::sqrt(2.0));
  fresh.update(task, a, 0.4);
  fresh.update(task, a, 0.8);
  CHECK(fresh.arm_pulls(task, action_index(a, 3)) == 2);
  CHECK(fresh.arm_mean(task, action_index(a, 3)) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("update is a no-op for non-bandit baselines") {
  auto policy = BaselinePolicy::local_only(3);
  policy.update(TaskCategory{0}, ActionSpec::local(), 1.0);
  CHECK(policy.select(kNoState, TaskCategory{0}) == ActionSpec::local());
}

TEST_CASE("ucb explores every arm once, then locks onto the best arm") {
  auto policy = BaselinePolicy::ucb(3, 1, std::sqrt(2.0));
  const TaskCategory task{0};
  const int best_arm = 4;

  // Stationary bandit: arm 4 pays 1.0, everything else 0.0.
  int best_picks_late = 0;
  const int total_pulls = 2000;
  for (int i = 0; i < total_pulls; ++i) {
    const ActionSpec a = policy.select(kNoState, task);
    const int idx = action_index(a, 3);
    if (i < 9) CHECK(idx == i);  // unpulled arms first, in index order
    policy.update(task, a, idx == best_arm ? 1.0 : 0.0);
    if (i >= total_pulls - 500 && idx == best_arm) ++best_picks_late;
  }
  CHECK(best_picks_late > 450);  // selection frequency approaches 1

  policy.set_frozen(true);
  for (int i = 0; i < 10; ++i) {
    CHECK(action_index(policy.select(kNoState, task), 3) == best_arm);
  }
}
