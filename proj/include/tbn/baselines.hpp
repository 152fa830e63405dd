#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tbn/corpus.hpp"
#include "tbn/error.hpp"
#include "tbn/random.hpp"
#include "tbn/temporal.hpp"

namespace tbn {

/// Full-vocabulary ranking, scores non-increasing.
using Ranking = std::vector<std::pair<std::string, double>>;
using IntentSet = std::set<std::string>;

/// What a next-intent predictor may look at for one lagged pair.
struct PairContext {
  std::size_t index = 0;  // position of the pair in its dataset
  IntentSet previous;     // intents at t-1; empty at t = 0
  IntentSet current;
  ProgressBucket progress = ProgressBucket::early;
};

using Predictor = std::function<Ranking(const PairContext&)>;

inline IntentSet active_set(const std::vector<std::uint8_t>& row, std::size_t offset,
                            const std::vector<std::string>& intents) {
  IntentSet out;
  for (std::size_t j = 0; j < intents.size(); ++j) {
    if (row[offset + j]) out.insert(intents[j]);
  }
  return out;
}

/// Contexts for every pair, recovering x_{t-1} from the pair that ends at t.
inline std::vector<PairContext> pair_contexts(const LaggedDataset& data) {
  const auto intents = data.intent_names();
  std::map<std::pair<std::string, std::size_t>, std::size_t> by_tag;
  for (std::size_t r = 0; r < data.size(); ++r) by_tag[{data.row_tags[r].dialogue_id, data.row_tags[r].turn}] = r;

  std::vector<PairContext> out;
  out.reserve(data.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    PairContext c;
    c.index = r;
    c.current = active_set(data.rows[r], 0, intents);
    c.progress = data.progress(r);
    const auto& tag = data.row_tags[r];
    if (tag.turn > 0) {
      auto it = by_tag.find({tag.dialogue_id, tag.turn - 1});
      if (it != by_tag.end()) c.previous = active_set(data.rows[it->second], 0, intents);
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// Sort by score descending, ties by name.
inline Ranking rank_by_score(std::vector<std::pair<std::string, double>> scored) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return scored;
}

/// Uniform permutation determined by (seed, draw_index); score = 1/rank.
inline Ranking random_ranking(const IntentVocabulary& vocab, std::uint64_t seed, std::uint64_t draw_index) {
  std::vector<std::string> names = vocab.names();
  Rng rng(seed, "random-baseline", draw_index);
  rng.shuffle(names);
  Ranking out;
  for (std::size_t i = 0; i < names.size(); ++i) out.emplace_back(names[i], 1.0 / static_cast<double>(i + 1));
  return out;
}

/// Next-turn frequency of every intent over the lagged training pairs.
inline std::vector<double> next_intent_counts(const LaggedDataset& train) {
  std::vector<double> counts(train.intent_count, 0.0);
  for (const auto& row : train.rows) {
    for (std::size_t j = 0; j < train.intent_count; ++j) counts[j] += row[train.next_column(j)];
  }
  return counts;
}

inline Ranking marginal_ranking(const LaggedDataset& train) {
  if (train.size() == 0) throw Error(ErrorKind::estimation, "marginal baseline needs at least one training pair");
  const auto counts = next_intent_counts(train);
  const auto names = train.intent_names();
  std::vector<std::pair<std::string, double>> scored;
  for (std::size_t j = 0; j < names.size(); ++j) scored.emplace_back(names[j], counts[j]);
  return rank_by_score(std::move(scored));
}

inline Ranking marginal_ranking(const TurnIntentMatrix& train, const IntentVocabulary& vocab) {
  if (train.rows() == 0) throw Error(ErrorKind::estimation, "marginal baseline needs training data");
  return marginal_ranking(build_lagged(train, vocab));
}

/// Next-intent counts keyed by the (t-1, t) intent-set context.
struct BigramTable {
  std::vector<std::string> intents;
  std::map<std::pair<IntentSet, IntentSet>, std::vector<double>> contexts;
  std::vector<double> marginal;
  Ranking marginal_order;
};

inline BigramTable fit_bigram(const LaggedDataset& train) {
  BigramTable table;
  table.intents = train.intent_names();
  table.marginal = next_intent_counts(train);
  table.marginal_order = marginal_ranking(train);
  const auto ctx = pair_contexts(train);
  for (std::size_t r = 0; r < train.size(); ++r) {
    auto& counts = table.contexts[{ctx[r].previous, ctx[r].current}];
    counts.resize(train.intent_count, 0.0);
    for (std::size_t j = 0; j < train.intent_count; ++j) counts[j] += train.rows[r][train.next_column(j)];
  }
  return table;
}

/// Counts of a seen context (positive counts first, ties by name, then the
/// zero-count intents in marginal order); the marginal ranking otherwise.
inline Ranking bigram_ranking(const BigramTable& table, const IntentSet& previous, const IntentSet& current) {
  auto it = table.contexts.find({previous, current});
  if (it == table.contexts.end()) return table.marginal_order;

  std::vector<std::pair<std::string, double>> positive;
  IntentSet taken;
  for (std::size_t j = 0; j < table.intents.size(); ++j) {
    if (it->second[j] > 0.0) {
      positive.emplace_back(table.intents[j], it->second[j]);
      taken.insert(table.intents[j]);
    }
  }
  Ranking out = rank_by_score(std::move(positive));
  for (const auto& [name, score] : table.marginal_order) {
    if (!taken.count(name)) out.emplace_back(name, 0.0);
  }
  return out;
}

}  // namespace tbn
