#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "offload/rng.hpp"
#include "offload/score_estimator.hpp"

using namespace offload;

namespace {

StateActionKey key2(double x, double y) { return StateActionKey{{x, y}}; }

}  // namespace

TEST_CASE("index keeps one entry per key, duplicates included") {
  // Two identical state-action pairs with different scores both stay (NDE).
  auto index = ScoreIndex::build({key2(1, 0), key2(1, 0), key2(0, 1)}, {0.6, 1.0, 0.2});
  CHECK(index.size() == 3);
  CHECK(index.score_at(0) == 0.6);
  CHECK(index.score_at(1) == 1.0);

  auto again = ScoreIndex::build({key2(1, 0), key2(1, 0), key2(0, 1)}, {0.6, 1.0, 0.2});
  CHECK(again.size() == index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    CHECK(again.score_at(i) == index.score_at(i));
  }

  CHECK_THROWS_AS(ScoreIndex::build({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(ScoreIndex::build({key2(0, 0)}, {0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("inverse-distance weighting matches the worked example") {
  // Neighbors at distance 1 (score 0.8) and 3 (score 0.4):
  // (0.8/1 + 0.4/3) / (1/1 + 1/3) = 0.7.
  auto index = ScoreIndex::build({key2(1, 0), key2(3, 0)}, {0.8, 0.4});
  CHECK(index.estimate(key2(0, 0), 2) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("exact matches return the epsilon-neighborhood mean") {
  auto index = ScoreIndex::build({key2(2, 5), key2(7, 1)}, {0.9, 0.1});
  CHECK(index.estimate(key2(2, 5), 1) == 0.9);
  CHECK(index.estimate(key2(2, 5), 2) == 0.9);  // exact match dominates

  // Several exact duplicates with different scores average out.
  auto nde = ScoreIndex::build({key2(2, 5), key2(2, 5), key2(7, 1)}, {0.6, 1.0, 0.1});
  CHECK(nde.estimate(key2(2, 5), 3) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("equidistant neighbors average symmetrically") {
  auto index = ScoreIndex::build({key2(-1, 0), key2(1, 0)}, {0.2, 0.8});
  CHECK(index.estimate(key2(0, 0), 2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("estimate stays in the hull of the neighbor scores") {
  Rng rng(11);
  std::vector<StateActionKey> keys;
  std::vector<double> scores;
  for (int i = 0; i < 200; ++i) {
    keys.push_back(key2(rng.uniform(-5, 5), rng.uniform(-5, 5)));
    scores.push_back(rng.uniform(0, 2));
  }
  auto index = ScoreIndex::build(keys, scores);
  const double lo = *std::min_element(scores.begin(), scores.end());
  const double hi = *std::max_element(scores.begin(), scores.end());
  for (int q = 0; q < 100; ++q) {
    const double est = index.estimate(key2(rng.uniform(-6, 6), rng.uniform(-6, 6)), 5);
    CHECK(est >= lo);
    CHECK(est <= hi);
  }
}

TEST_CASE("estimate is invariant to a common scaling of all distances") {
  Rng rng(13);
  std::vector<StateActionKey> keys;
  std::vector<double> scores;
  for (int i = 0; i < 60; ++i) {
    keys.push_back(key2(rng.uniform(-3, 3), rng.uniform(-3, 3)));
    scores.push_back(rng.uniform(0, 1.5));
  }
  const StateActionKey query = key2(0.37, -0.82);
  auto index = ScoreIndex::build(keys, scores);
  const double base = index.estimate(query, 4);
  for (double c : {0.01, 0.5, 12.0}) {
    std::vector<StateActionKey> scaled = keys;
    for (auto& k : scaled) {
      for (auto& x : k.v) x *= c;
    }
    auto scaled_index = ScoreIndex::build(scaled, scores);
    StateActionKey sq = query;
    for (auto& x : sq.v) x *= c;
    CHECK(scaled_index.estimate(sq, 4) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("permuting index entries does not change the estimate") {
  Rng rng(17);
  std::vector<StateActionKey> keys;
  std::vector<double> scores;
  for (int i = 0; i < 50; ++i) {
    keys.push_back(key2(rng.uniform(-3, 3), rng.uniform(-3, 3)));
    scores.push_back(rng.uniform(0, 1.5));
  }
  const StateActionKey query = key2(0.1, 0.2);
  auto index = ScoreIndex::build(keys, scores);
  const double base = index.estimate(query, 5);

  std::vector<std::size_t> perm(keys.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1],
              perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
  std::vector<StateActionKey> pk;
  std::vector<double> ps;
  for (auto i : perm) {
    pk.push_back(keys[i]);
    ps.push_back(scores[i]);
  }
  auto permuted = ScoreIndex::build(pk, ps);
  CHECK(permuted.estimate(query, 5) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("argument guards") {
  auto index = ScoreIndex::build({key2(0, 0), key2(1, 1)}, {0.5, 0.7});
  CHECK_THROWS_AS(index.estimate(key2(0, 0), 3), std::invalid_argument);
  CHECK_THROWS_AS(index.estimate(key2(0, 0), 0), std::invalid_argument);
  CHECK_THROWS_AS(index.estimate(StateActionKey{{1, 2, 3}}, 1), std::invalid_argument);
}

TEST_CASE("kNN beats the global mean on a noisy duplicate benchmark") {
  // Each distinct key appears several times with score f(key) + noise; the
  // estimator must denoise better than predicting the global mean.
  for (std::uint64_t seed : {101, 202, 303}) {
    Rng rng(seed);
    const int distinct = 80;
    const int repeats = 4;
    std::vector<StateActionKey> unique_keys;
    std::vector<double> truth;
    for (int i = 0; i < distinct; ++i) {
      StateActionKey k{{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)}};
      truth.push_back(0.4 + 0.5 * (k.v[0] + 0.7 * k.v[1] - 0.3 * k.v[2]));
      unique_keys.push_back(std::move(k));
    }
    std::vector<StateActionKey> keys;
    std::vector<double> scores;
    for (int i = 0; i < distinct; ++i) {
      for (int r = 0; r < repeats; ++r) {
        keys.push_back(unique_keys[static_cast<std::size_t>(i)]);
        scores.push_back(truth[static_cast<std::size_t>(i)] + rng.normal(0.0, 0.15));
      }
    }
    auto index = ScoreIndex::build(keys, scores);
    const double global_mean =
        std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());

    double mse_knn = 0, mse_mean = 0;
    for (int i = 0; i < distinct; ++i) {
      const double est = index.estimate(unique_keys[static_cast<std::size_t>(i)], 5);
      mse_knn += (est - truth[static_cast<std::size_t>(i)]) *
                 (est - truth[static_cast<std::size_t>(i)]);
      mse_mean += (global_mean - truth[static_cast<std::size_t>(i)]) *
                  (global_mean - truth[static_cast<std::size_t>(i)]);
    }
    CHECK(mse_knn <= mse_mean);
  }
}

TEST_CASE("build_index produces one aligned entry per training record") {
  std::vector<DialogueRecord> records;
  for (int conv = 0; conv < 3; ++conv) {
    for (int t = 0; t < 2; ++t) {
      DialogueRecord r;
      r.conversation_id = conv;
      r.turn_index = t;
      r.response_score = conv + 0.1 * t;
      records.push_back(r);
    }
  }
  const auto index = build_index(records, [](ConversationView conv, int turn) {
    return StateActionKey{{static_cast<double>(conv.front().conversation_id),
                           static_cast<double>(turn)}};
  });
  CHECK(index.size() == records.size());
  CHECK(index.score_at(0) == doctest::Approx(0.0));
  CHECK(index.score_at(5) == doctest::Approx(2.1));
  CHECK(index.estimate(StateActionKey{{2.0, 1.0}}, 1) == doctest::Approx(2.1));
}
