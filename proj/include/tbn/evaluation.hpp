#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tbn/baselines.hpp"
#include "tbn/corpus.hpp"
#include "tbn/error.hpp"
#include "tbn/guidance.hpp"
#include "tbn/inference.hpp"
#include "tbn/parameters.hpp"
#include "tbn/random.hpp"
#include "tbn/structure.hpp"
#include "tbn/temporal.hpp"

namespace tbn {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  out.count = xs.size();
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Track A: ranking

inline constexpr std::array<int, 3> kRecallCutoffs = {1, 3, 5};

struct RankEvalReport {
  std::map<int, double> recall_at;
  double mrr = 0.0;
  std::size_t pair_count = 0;      // pairs scored
  std::size_t excluded_pairs = 0;  // next turn carries no intent
  std::map<std::string, double> per_intent_recall5;
  std::map<std::string, std::size_t> per_intent_support;
};

/// A pair hits at k when any ground-truth next intent is in the top k; the
/// reciprocal rank uses the best-ranked ground-truth intent. Per-intent
/// Recall@5 counts the pair once for each of its ground-truth intents.
inline RankEvalReport rank_eval(const Predictor& predictor, const LaggedDataset& pairs) {
  const auto intents = pairs.intent_names();
  const IntentSet vocabulary(intents.begin(), intents.end());
  const auto contexts = pair_contexts(pairs);

  RankEvalReport report;
  std::map<int, double> hits;
  std::map<std::string, double> intent_hits;
  double rr_sum = 0.0;
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto truth = active_set(pairs.rows[r], pairs.intent_count, intents);
    if (truth.empty()) {
      ++report.excluded_pairs;
      continue;
    }
    const Ranking ranking = predictor(contexts[r]);
    IntentSet seen;
    for (const auto& entry : ranking) seen.insert(entry.first);
    if (ranking.size() != intents.size() || seen != vocabulary) {
      throw Error(ErrorKind::contract, "predictor did not return a permutation of the vocabulary");
    }
    std::size_t best = ranking.size() + 1;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      if (truth.count(ranking[i].first)) {
        best = std::min(best, i + 1);
        if (i < 5) intent_hits[ranking[i].first] += 1.0;
      }
    }
    for (int k : kRecallCutoffs) hits[k] += best <= static_cast<std::size_t>(k) ? 1.0 : 0.0;
    rr_sum += 1.0 / static_cast<double>(best);
    for (const auto& t : truth) ++report.per_intent_support[t];
    ++report.pair_count;
  }
  if (report.pair_count == 0) throw Error(ErrorKind::input, "no evaluable pairs (every next turn is empty)");
  const auto n = static_cast<double>(report.pair_count);
  for (int k : kRecallCutoffs) report.recall_at[k] = hits[k] / n;
  report.mrr = rr_sum / n;
  for (const auto& [name, support] : report.per_intent_support) {
    report.per_intent_recall5[name] = intent_hits[name] / static_cast<double>(support);
  }
  return report;
}

/// Evidence of a lagged pair: every current-turn copy observed, plus progress.
inline Evidence pair_evidence(const IntentSet& current, const std::vector<std::string>& intents,
                              std::optional<ProgressBucket> progress) {
  Evidence e;
  for (const auto& name : intents) e.set(current_name(name), current.count(name) ? 1 : 0);
  if (progress) e.set_progress(*progress);
  return e;
}

inline Ranking ranking_from_posterior(const NextIntentPosterior& posterior) {
  return rank_by_score({posterior.probabilities.begin(), posterior.probabilities.end()});
}

/// Ranks next intents by P(x_{t+1} | x_t, progress). Posteriors are memoized
/// per distinct evidence, so a predictor instance is not thread-safe.
inline Predictor make_tbn_predictor(std::shared_ptr<const DiscreteBayesNet> bn) {
  auto cache = std::make_shared<std::map<std::pair<IntentSet, ProgressBucket>, Ranking>>();
  std::vector<std::string> intents;
  for (const auto& name : bn->variable_names()) {
    if (slice_of(name) == Slice::current) intents.push_back(name.substr(0, name.size() - kCurrentSuffix.size()));
  }
  const bool with_progress = has_progress_variables(*bn);
  return [bn, cache, intents, with_progress](const PairContext& ctx) {
    const auto key = std::make_pair(ctx.current, ctx.progress);
    auto it = cache->find(key);
    if (it != cache->end()) return it->second;
    const auto evidence =
        pair_evidence(ctx.current, intents, with_progress ? std::optional(ctx.progress) : std::nullopt);
    auto ranking = ranking_from_posterior(posterior_next_intents(*bn, evidence));
    cache->emplace(key, ranking);
    return ranking;
  };
}

inline Predictor make_marginal_predictor(const LaggedDataset& train) {
  return [ranking = marginal_ranking(train)](const PairContext&) { return ranking; };
}

inline Predictor make_bigram_predictor(const LaggedDataset& train) {
  return [table = fit_bigram(train)](const PairContext& ctx) {
    return bigram_ranking(table, ctx.previous, ctx.current);
  };
}

inline Predictor make_random_predictor(const IntentVocabulary& vocab, std::uint64_t seed) {
  return [vocab, seed](const PairContext& ctx) { return random_ranking(vocab, seed, ctx.index); };
}

// ---------------------------------------------------------------------------
// Track B: ground-truth replay

struct ReplayDialogueRecord {
  std::string dialogue_id;
  std::size_t turns = 0;
  std::vector<double> baseline_coverage;
  std::vector<double> guided_coverage;
  double baseline_auc = 0.0;
  double guided_auc = 0.0;
  std::size_t baseline_turns_to_75 = 0;
  std::size_t guided_turns_to_75 = 0;
  double turn_reduction = 0.0;
  std::optional<double> hit_rate;  // absent for single-turn dialogues
  std::optional<double> jaccard;
};

struct ReplayReport {
  std::vector<ReplayDialogueRecord> dialogues;
  std::vector<std::string> excluded;  // dialogues with an empty total intent set
  MeanStd baseline_auc;
  MeanStd guided_auc;
  MeanStd baseline_turns_to_75;
  MeanStd guided_turns_to_75;
  MeanStd turn_reduction;
  MeanStd hit_rate;
  MeanStd jaccard;
};

inline std::size_t turns_to_coverage(const std::vector<double>& coverage, double level) {
  for (std::size_t t = 0; t < coverage.size(); ++t) {
    if (coverage[t] >= level) return t + 1;
  }
  return coverage.size();
}

/// Scores one dialogue given its per-USER-turn intent sets and the gated
/// predictions issued at each turn. `intents` must have a non-empty union.
inline ReplayDialogueRecord replay_dialogue(const std::string& dialogue_id, const std::vector<IntentSet>& intents,
                                            const std::vector<IntentSet>& predictions) {
  if (predictions.size() != intents.size()) throw Error(ErrorKind::contract, "one prediction set per turn expected");
  const std::size_t n = intents.size();
  IntentSet total;
  for (const auto& s : intents) total.insert(s.begin(), s.end());
  if (total.empty()) throw Error(ErrorKind::input, "dialogue '" + dialogue_id + "' has no intents");

  ReplayDialogueRecord rec;
  rec.dialogue_id = dialogue_id;
  rec.turns = n;
  const auto denom = static_cast<double>(total.size());

  std::vector<IntentSet> later(n);  // intents at turns strictly after t
  for (std::size_t t = n; t-- > 1;) {
    later[t - 1] = later[t];
    later[t - 1].insert(intents[t].begin(), intents[t].end());
  }

  IntentSet seen, guided;
  for (std::size_t t = 0; t < n; ++t) {
    seen.insert(intents[t].begin(), intents[t].end());
    guided.insert(intents[t].begin(), intents[t].end());
    for (const auto& p : predictions[t]) {
      if (later[t].count(p)) guided.insert(p);
    }
    rec.baseline_coverage.push_back(static_cast<double>(seen.size()) / denom);
    rec.guided_coverage.push_back(static_cast<double>(guided.size()) / denom);
  }
  rec.baseline_auc = mean_std(rec.baseline_coverage).mean;
  rec.guided_auc = mean_std(rec.guided_coverage).mean;
  rec.baseline_turns_to_75 = turns_to_coverage(rec.baseline_coverage, 0.75);
  rec.guided_turns_to_75 = turns_to_coverage(rec.guided_coverage, 0.75);
  rec.turn_reduction =
      static_cast<double>(rec.baseline_turns_to_75) - static_cast<double>(rec.guided_turns_to_75);

  if (n >= 2) {
    double hits = 0.0, jac = 0.0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
      const auto& pred = predictions[t];
      const auto& actual = intents[t + 1];
      std::size_t inter = 0;
      for (const auto& p : pred) inter += actual.count(p);
      IntentSet uni = pred;
      uni.insert(actual.begin(), actual.end());
      hits += inter > 0 ? 1.0 : 0.0;
      jac += uni.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni.size());
    }
    rec.hit_rate = hits / static_cast<double>(n - 1);
    rec.jaccard = jac / static_cast<double>(n - 1);
  }
  return rec;
}

/// What a replay predictor sees at one USER turn.
struct ReplayTurn {
  const std::string& utterance;
  const IntentSet& intents;
  std::size_t turn;
  std::size_t turn_count;
};

using TurnPredictor = std::function<IntentSet(const ReplayTurn&)>;

/// Gated top-k next intents with the turn's annotated intents as evidence.
inline TurnPredictor make_annotation_turn_predictor(std::shared_ptr<const DiscreteBayesNet> bn, std::size_t top_k,
                                                    double tau) {
  auto tbn = make_tbn_predictor(bn);
  return [tbn, top_k, tau](const ReplayTurn& turn) {
    PairContext ctx;
    ctx.current = turn.intents;
    ctx.progress = progress_bucket(static_cast<long long>(turn.turn), static_cast<long long>(turn.turn_count));
    const Ranking ranking = tbn(ctx);
    IntentSet out;
    for (std::size_t i = 0; i < ranking.size() && i < top_k; ++i) {
      if (ranking[i].second > tau) out.insert(ranking[i].first);
    }
    return out;
  };
}

/// Gated intents of the full utterance-grounding guidance pipeline.
inline TurnPredictor make_utterance_turn_predictor(std::shared_ptr<const DiscreteBayesNet> bn,
                                                   IntentVocabulary vocab, std::shared_ptr<const Embedder> embedder,
                                                   GuidanceOptions options) {
  return [bn, vocab = std::move(vocab), embedder, options](const ReplayTurn& turn) {
    IntentSet out;
    if (turn.utterance.find_first_not_of(" \t\r\n") == std::string::npos) return out;
    const auto block = guide(turn.utterance, static_cast<long long>(turn.turn),
                             static_cast<long long>(turn.turn_count), *bn, vocab, *embedder, options);
    for (const auto& [name, p] : block.surviving) out.insert(name);
    return out;
  };
}

inline ReplayReport replay(const std::vector<Dialogue>& dialogues, const TurnPredictor& predictor) {
  ReplayReport report;
  std::vector<const Dialogue*> ordered;
  for (const auto& d : dialogues) ordered.push_back(&d);
  std::sort(ordered.begin(), ordered.end(),
            [](const Dialogue* a, const Dialogue* b) { return a->dialogue_id < b->dialogue_id; });

  for (const Dialogue* d : ordered) {
    const auto intents = user_intent_sets(*d);
    IntentSet total;
    for (const auto& s : intents) total.insert(s.begin(), s.end());
    if (total.empty()) {
      report.excluded.push_back(d->dialogue_id);
      continue;
    }
    std::vector<const std::string*> utterances;
    for (const auto& turn : d->turns) {
      if (turn.speaker == Speaker::user) utterances.push_back(&turn.utterance);
    }
    std::vector<IntentSet> predictions;
    for (std::size_t t = 0; t < intents.size(); ++t) {
      predictions.push_back(predictor(ReplayTurn{*utterances[t], intents[t], t, intents.size()}));
    }
    report.dialogues.push_back(replay_dialogue(d->dialogue_id, intents, predictions));
  }

  std::vector<double> b_auc, g_auc, b_t, g_t, red, hit, jac;
  for (const auto& r : report.dialogues) {
    b_auc.push_back(r.baseline_auc);
    g_auc.push_back(r.guided_auc);
    b_t.push_back(static_cast<double>(r.baseline_turns_to_75));
    g_t.push_back(static_cast<double>(r.guided_turns_to_75));
    red.push_back(r.turn_reduction);
    if (r.hit_rate) hit.push_back(*r.hit_rate);
    if (r.jaccard) jac.push_back(*r.jaccard);
  }
  report.baseline_auc = mean_std(b_auc);
  report.guided_auc = mean_std(g_auc);
  report.baseline_turns_to_75 = mean_std(b_t);
  report.guided_turns_to_75 = mean_std(g_t);
  report.turn_reduction = mean_std(red);
  report.hit_rate = mean_std(hit);
  report.jaccard = mean_std(jac);
  return report;
}

// ---------------------------------------------------------------------------
// Structural diagnostics

/// 2|E| over the number of nodes touching at least one edge.
inline double average_degree(const std::vector<Edge>& edges) {
  if (edges.empty()) return 0.0;
  std::set<std::size_t> touched;
  for (const auto& e : edges) {
    touched.insert(e.source);
    touched.insert(e.target);
  }
  return 2.0 * static_cast<double>(edges.size()) / static_cast<double>(touched.size());
}

inline double average_degree(const WeightedDag& dag) { return average_degree(dag.edges); }

struct EdgeStability {
  std::string source;
  std::string target;
  std::size_t presence = 0;
  double mean_weight = 0.0;
  double weight_std = 0.0;
  bool robust = false;
};

struct StabilityReport {
  std::size_t folds = 0;
  std::vector<EdgeStability> edges;
  std::size_t backward_edges = 0;  // summed over folds
  double average_degree = 0.0;     // mean over folds
  std::vector<std::size_t> fold_edge_counts;
};

inline constexpr std::size_t kRobustMinFolds = 4;
inline constexpr double kRobustMaxStd = 0.10;

/// Dialogue-level k-fold: structure is learned on each fold's complement.
inline StabilityReport edge_stability(const std::vector<Dialogue>& dialogues, std::size_t folds,
                                      const NotearsConfig& config, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorKind::configuration, "need at least 2 folds");
  if (dialogues.size() < folds) throw Error(ErrorKind::configuration, "fewer dialogues than folds");
  const auto vocab = build_vocabulary(dialogues);

  std::vector<std::size_t> order(dialogues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed, "folds");
  rng.shuffle(order);
  std::vector<std::size_t> fold_of(dialogues.size());
  for (std::size_t p = 0; p < order.size(); ++p) fold_of[order[p]] = p % folds;

  StabilityReport report;
  report.folds = folds;
  std::map<std::pair<std::string, std::string>, std::vector<double>> weights;
  std::vector<double> degrees;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Dialogue> train;
    for (std::size_t i = 0; i < dialogues.size(); ++i) {
      if (fold_of[i] != f) train.push_back(dialogues[i]);
    }
    const auto lagged = build_lagged(build_turn_matrix(train, vocab), vocab);
    WeightedDag dag;
    try {
      dag = learn_structure(lagged, build_tabu_mask(lagged.variable_names), config);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("fold " + std::to_string(f) + ": " + e.what(), e.last_h());
    }
    for (const auto& e : dag.edges) {
      weights[{dag.variable_names[e.source], dag.variable_names[e.target]}].push_back(e.weight);
    }
    report.backward_edges += backward_edge_count(dag);
    report.fold_edge_counts.push_back(dag.edges.size());
    degrees.push_back(average_degree(dag));
  }
  report.average_degree = mean_std(degrees).mean;

  for (const auto& [key, ws] : weights) {
    const auto stats = mean_std(ws);
    EdgeStability e{key.first, key.second, ws.size(), stats.mean, stats.std, false};
    e.robust = e.presence >= kRobustMinFolds && e.weight_std < kRobustMaxStd;
    report.edges.push_back(std::move(e));
  }
  std::sort(report.edges.begin(), report.edges.end(), [](const auto& a, const auto& b) {
    if (a.presence != b.presence) return a.presence > b.presence;
    if (std::abs(a.mean_weight) != std::abs(b.mean_weight)) return std::abs(a.mean_weight) > std::abs(b.mean_weight);
    return std::tie(a.source, a.target) < std::tie(b.source, b.target);
  });
  return report;
}

/// Empirical mutual information in bits of two binary sequences (MLE, 0 log 0 = 0).
inline double mutual_information_bits(const std::vector<std::uint8_t>& xs, const std::vector<std::uint8_t>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::shape, "sequences differ in length");
  if (xs.empty()) throw Error(ErrorKind::estimation, "no pairs to estimate information from");
  double joint[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < xs.size(); ++i) joint[xs[i] ? 1 : 0][ys[i] ? 1 : 0] += 1.0;
  const auto n = static_cast<double>(xs.size());
  double mi = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      if (joint[a][b] == 0.0) continue;
      const double pab = joint[a][b] / n;
      const double pa = (joint[a][0] + joint[a][1]) / n;
      const double pb = (joint[0][b] + joint[1][b]) / n;
      mi += pab * std::log2(pab / (pa * pb));
    }
  }
  return std::max(mi, 0.0);
}

/// I(j_t; j_{t+1}) over within-dialogue consecutive USER-turn pairs.
inline double info_gain(const TurnIntentMatrix& matrix, const IntentVocabulary& vocab, const std::string& intent) {
  const auto j = vocab.index(intent);
  const auto lagged = build_lagged(matrix, vocab);
  if (lagged.size() == 0) throw Error(ErrorKind::estimation, "no consecutive USER-turn pairs");
  std::vector<std::uint8_t> xs, ys;
  for (const auto& row : lagged.rows) {
    xs.push_back(row[lagged.current_column(j)]);
    ys.push_back(row[lagged.next_column(j)]);
  }
  return mutual_information_bits(xs, ys);
}

/// Uniform choice of `edge_count` mask-respecting edges under a random order
/// that keeps progress indicators first and current copies before next copies.
inline WeightedDag random_dag(const std::vector<std::string>& variable_names, std::size_t edge_count, Rng& rng) {
  const auto mask = build_tabu_mask(variable_names);
  std::vector<std::size_t> progress, current, next;
  for (std::size_t v = 0; v < variable_names.size(); ++v) {
    switch (slice_of(variable_names[v])) {
      case Slice::progress: progress.push_back(v); break;
      case Slice::current: current.push_back(v); break;
      case Slice::next: next.push_back(v); break;
    }
  }
  rng.shuffle(current);
  rng.shuffle(next);
  std::vector<std::size_t> order = progress;
  order.insert(order.end(), current.begin(), current.end());
  order.insert(order.end(), next.begin(), next.end());

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      if (!mask.is_forbidden(order[a], order[b])) candidates.emplace_back(order[a], order[b]);
    }
  }
  if (edge_count > candidates.size()) {
    throw Error(ErrorKind::configuration, "edge count " + std::to_string(edge_count) + " infeasible under the mask");
  }
  for (std::size_t i = 0; i < edge_count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }

  WeightedDag dag;
  dag.variable_names = variable_names;
  const auto d = static_cast<Eigen::Index>(variable_names.size());
  dag.weights = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < edge_count; ++i) {
    const auto [s, t] = candidates[i];
    dag.edges.push_back({s, t, 1.0});
    dag.weights(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = 1.0;
  }
  dag.prune_threshold = 0.0;
  return dag;
}

struct RandomDagComparison {
  double learned_recall5 = 0.0;
  MeanStd random_recall5;
  std::vector<double> trial_recall5;
  std::size_t edge_count = 0;
};

inline RandomDagComparison random_dag_comparison(const LaggedDataset& train, const LaggedDataset& test,
                                                 const WeightedDag& reference, double ess, std::size_t trials,
                                                 std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorKind::configuration, "need at least one random-DAG trial");
  RandomDagComparison out;
  out.edge_count = reference.edges.size();
  auto learned = std::make_shared<const DiscreteBayesNet>(fit_cpds(reference, train, ess));
  out.learned_recall5 = rank_eval(make_tbn_predictor(learned), test).recall_at.at(5);

  Rng rng(seed, "random-dag");
  for (std::size_t i = 0; i < trials; ++i) {
    const auto dag = random_dag(reference.variable_names, reference.edges.size(), rng);
    auto bn = std::make_shared<const DiscreteBayesNet>(fit_cpds(dag, train, ess));
    out.trial_recall5.push_back(rank_eval(make_tbn_predictor(bn), test).recall_at.at(5));
  }
  out.random_recall5 = mean_std(out.trial_recall5);
  return out;
}

}  // namespace tbn
