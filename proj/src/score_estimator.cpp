#include "offload/score_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "offload/errors.hpp"

namespace offload {

ScoreIndex ScoreIndex::build(std::vector<StateActionKey> keys, std::vector<double> scores) {
  if (keys.empty()) throw std::invalid_argument("score index needs at least one entry");
  if (keys.size() != scores.size()) {
    throw std::invalid_argument("keys and scores must have the same length");
  }
  ScoreIndex index;
  index.dim_ = static_cast<int>(keys.front().v.size());
  index.flat_.reserve(keys.size() * keys.front().v.size());
  for (const auto& k : keys) {
    if (static_cast<int>(k.v.size()) != index.dim_) {
      throw std::invalid_argument("inconsistent key dimension");
    }
    index.flat_.insert(index.flat_.end(), k.v.begin(), k.v.end());
  }
  index.scores_ = std::move(scores);
  return index;
}

double ScoreIndex::estimate(const StateActionKey& query, int k) const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (static_cast<std::size_t>(k) > size()) {
    throw std::invalid_argument("k exceeds index size");
  }
  if (static_cast<int>(query.v.size()) != dim_) {
    throw std::invalid_argument("query dimension mismatch");
  }

  // Bounded selection of the k smallest (distance^2, index) pairs; the index
  // component makes the order total, so ties are deterministic.
  struct Neighbor {
    double dist2;
    std::size_t idx;
    bool operator<(const Neighbor& o) const {
      return dist2 < o.dist2 || (dist2 == o.dist2 && idx < o.idx);
    }
  };
  std::vector<Neighbor> best;
  best.reserve(static_cast<std::size_t>(k) + 1);

  const double* base = flat_.data();
  const auto d = static_cast<std::size_t>(dim_);
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    const double* row = base + i * d;
    double dist2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = query.v[j] - row[j];
      dist2 += diff * diff;
    }
    const Neighbor cand{dist2, i};
    if (best.size() < static_cast<std::size_t>(k)) {
      best.push_back(cand);
      std::push_heap(best.begin(), best.end());
    } else if (cand < best.front()) {
      std::pop_heap(best.begin(), best.end());
      best.back() = cand;
      std::push_heap(best.begin(), best.end());
    }
  }

  constexpr double eps2 = kExactMatchEpsilon * kExactMatchEpsilon;
  double exact_sum = 0.0;
  int exact_count = 0;
  for (const auto& n : best) {
    if (n.dist2 < eps2) {
      exact_sum += scores_[n.idx];
      ++exact_count;
    }
  }
  if (exact_count > 0) return exact_sum / exact_count;

  double weighted = 0.0, weight_sum = 0.0;
  for (const auto& n : best) {
    const double w = 1.0 / std::sqrt(n.dist2);
    weighted += w * scores_[n.idx];
    weight_sum += w;
  }
  return weighted / weight_sum;
}

ScoreIndex build_index(std::span<const DialogueRecord> train_records,
                       const RecordKeyEncoder& encoder) {
  if (train_records.empty()) throw std::invalid_argument("empty training set");
  std::vector<StateActionKey> keys;
  std::vector<double> scores;
  keys.reserve(train_records.size());
  scores.reserve(train_records.size());
  for (const auto& conv : group_conversations(train_records)) {
    for (std::size_t t = 0; t < conv.size(); ++t) {
      keys.push_back(encoder(conv, static_cast<int>(t)));
      scores.push_back(conv[t].response_score);
    }
  }
  return ScoreIndex::build(std::move(keys), std::move(scores));
}

}  // namespace offload
