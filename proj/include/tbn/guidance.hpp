#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tbn/corpus.hpp"
#include "tbn/error.hpp"
#include "tbn/inference.hpp"
#include "tbn/random.hpp"
#include "tbn/temporal.hpp"

namespace tbn {

/// Maps text to a fixed-dimension vector; equal texts must give equal vectors.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Signed feature hashing of lowercased character trigrams, L2-normalized.
/// The text is padded with one space on each side so word boundaries count.
class TrigramEmbedder final : public Embedder {
 public:
  explicit TrigramEmbedder(std::size_t dimension = 512) : dimension_(dimension) {}

  std::size_t dimension() const override { return dimension_; }

  std::vector<double> embed(std::string_view text) const override {
    std::string padded = " ";
    for (char c : text) padded += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    padded += ' ';
    std::vector<double> v(dimension_, 0.0);
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      const auto h = fnv1a64(std::string_view(padded).substr(i, 3));
      v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& x : v) x /= norm;
    }
    return v;
  }

 private:
  std::size_t dimension_;
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

using ScoredIntents = std::vector<std::pair<std::string, double>>;

struct ObservationSet {
  ScoredIntents intents;  // descending similarity
};

/// "find-hotel" -> "find hotel"
inline std::string intent_phrase(std::string_view intent) {
  std::string out(intent);
  std::replace(out.begin(), out.end(), '-', ' ');
  return out;
}

/// Top-k vocabulary intents by cosine similarity to the utterance.
/// Candidates with non-positive similarity are never observed.
inline ObservationSet ground_utterance(std::string_view utterance, const IntentVocabulary& vocab,
                                       const Embedder& embedder, std::size_t k) {
  if (utterance.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorKind::input, "empty utterance");
  }
  if (k == 0) throw Error(ErrorKind::input, "top-k must be at least 1");
  const auto u = embedder.embed(utterance);
  ScoredIntents scored;
  for (const auto& name : vocab.names()) {
    const double sim = cosine(u, embedder.embed(intent_phrase(name)));
    if (sim > 0.0) scored.emplace_back(name, sim);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > k) scored.resize(k);
  return {std::move(scored)};
}

/// Intents with probability strictly above tau, descending, ties by name.
inline ScoredIntents gate(const NextIntentPosterior& posterior, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorKind::input, "gate threshold must lie in [0, 1]");
  ScoredIntents out;
  for (const auto& [name, p] : posterior.probabilities) {
    if (p > tau) out.emplace_back(name, p);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

struct InsightBlock {
  std::string text;
  ScoredIntents surviving;
};

inline InsightBlock format_insight_block(const ObservationSet& observed, const ScoredIntents& surviving) {
  InsightBlock block{{}, surviving};
  if (surviving.empty()) return block;
  std::string observed_names;
  for (const auto& [name, sim] : observed.intents) {
    if (!observed_names.empty()) observed_names += ", ";
    observed_names += name;
  }
  std::string text = "[CAUSAL INSIGHT]\nObserved intents: " + observed_names + "\nLikely next user intents:\n";
  for (const auto& [name, p] : surviving) {
    char prob[32];
    std::snprintf(prob, sizeof prob, "%.3f", p);
    text += "- " + name + " (p=" + prob + ")\n";
  }
  text +=
      "Guidance: address the user's immediate request first; then proactively offer help with the likely next "
      "intents.\n[/CAUSAL INSIGHT]";
  block.text = std::move(text);
  return block;
}

/// One elimination per observed intent (that intent's current copy set to 1,
/// plus the progress indicators); each next intent keeps its maximum.
inline NextIntentPosterior aggregate_posterior(const DiscreteBayesNet& bn, const ObservationSet& observed,
                                               std::optional<ProgressBucket> progress) {
  Evidence base;
  if (progress && has_progress_variables(bn)) base.set_progress(*progress);
  if (observed.intents.empty()) return posterior_next_intents(bn, base);

  NextIntentPosterior out;
  for (const auto& [name, sim] : observed.intents) {
    Evidence e = base;
    e.set(current_name(name), 1);
    for (const auto& [intent, p] : posterior_next_intents(bn, e).probabilities) {
      auto [it, inserted] = out.probabilities.try_emplace(intent, p);
      if (!inserted) it->second = std::max(it->second, p);
    }
  }
  return out;
}

struct GuidanceOptions {
  std::size_t top_k = 5;
  double tau = 0.5;
};

/// Ground, infer, gate and format for one USER turn.
inline InsightBlock guide(std::string_view utterance, long long turn_index, long long dialogue_turn_count,
                          const DiscreteBayesNet& bn, const IntentVocabulary& vocab, const Embedder& embedder,
                          const GuidanceOptions& options) {
  const auto bucket = progress_bucket(turn_index, dialogue_turn_count);
  const auto observed = ground_utterance(utterance, vocab, embedder, options.top_k);
  const auto posterior = aggregate_posterior(bn, observed, bucket);
  return format_insight_block(observed, gate(posterior, options.tau));
}

}  // namespace tbn
