#pragma once

#include <functional>
#include <span>
#include <vector>

#include "offload/dataset.hpp"

namespace offload {

// Concatenated [state action] vector used as the neighbor-lookup key.
struct StateActionKey {
  std::vector<double> v;
};

// Below this distance a neighbor counts as an exact match of the query.
inline constexpr double kExactMatchEpsilon = 1e-9;

// Immutable nearest-neighbor index over training-split keys and their
// recorded response scores. Duplicate keys with different scores are kept;
// averaging over them is exactly what resolves non-deterministic evaluation.
class ScoreIndex {
 public:
  ScoreIndex() = default;

  // Keys and scores stay in the given order; empty input is an error.
  static ScoreIndex build(std::vector<StateActionKey> keys, std::vector<double> scores);

  // Inverse-distance-weighted average over the k nearest keys by Euclidean
  // distance: (sum S_i/d_i) / (sum 1/d_i). Ties at the k-th neighbor break
  // by index order. If any selected neighbor lies within the exact-match
  // epsilon, returns the plain mean of those near-zero-distance neighbors
  // (the limit of the weighted form).
  double estimate(const StateActionKey& query, int k) const;

  std::size_t size() const { return scores_.size(); }
  int dim() const { return dim_; }
  double score_at(std::size_t i) const { return scores_[i]; }

 private:
  int dim_ = 0;
  std::vector<double> flat_;  // row-major keys
  std::vector<double> scores_;
};

// Builds the key for each training record via the caller's encoder (the
// environment supplies the state encoding; the key is record-order aligned).
using RecordKeyEncoder =
    std::function<StateActionKey(ConversationView conversation, int turn)>;

ScoreIndex build_index(std::span<const DialogueRecord> train_records,
                       const RecordKeyEncoder& encoder);

}  // namespace offload
