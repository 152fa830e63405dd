#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tbn/corpus.hpp"
#include "tbn/error.hpp"
#include "tbn/evaluation.hpp"
#include "tbn/parameters.hpp"
#include "tbn/structure.hpp"
#include "tbn/synth.hpp"
#include "tbn/temporal.hpp"

namespace tbn {

inline constexpr int kFormatVersion = 1;

using nlohmann::json;

struct Model {
  IntentVocabulary vocabulary;
  DiscreteBayesNet net;
  json config = json::object();
};

inline json model_to_json(const Model& model) {
  const auto& bn = model.net;
  const auto& names = bn.variable_names();
  json weights = json::array();
  for (Eigen::Index i = 0; i < bn.dag.weights.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < bn.dag.weights.cols(); ++j) row.push_back(bn.dag.weights(i, j));
    weights.push_back(std::move(row));
  }
  json edges = json::array();
  for (const auto& e : bn.dag.edges) edges.push_back(json::array({names[e.source], names[e.target], e.weight}));
  json cpds = json::array();
  for (const auto& t : bn.tables) {
    json parents = json::array();
    for (auto p : t.parents) parents.push_back(names[p]);
    cpds.push_back({{"node", names[t.node]},
                    {"parents", parents},
                    {"cardinalities", t.cardinalities},
                    {"table", t.probabilities}});
  }
  return {{"format_version", kFormatVersion},
          {"vocabulary", model.vocabulary.names()},
          {"variables", names},
          {"weights", weights},
          {"edges", edges},
          {"prune_threshold", bn.dag.prune_threshold},
          {"ess", bn.ess},
          {"cpds", cpds},
          {"config", model.config}};
}

inline Model model_from_json(const json& j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorKind::schema, "unsupported model format_version");
    }
    Model model;
    model.vocabulary = IntentVocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    const auto variables = j.at("variables").get<std::vector<std::string>>();
    if (variables != lagged_variable_names(model.vocabulary)) {
      throw Error(ErrorKind::schema, "model variables do not match its vocabulary");
    }
    const auto d = variables.size();
    std::map<std::string, std::size_t> id;
    for (std::size_t v = 0; v < d; ++v) id[variables[v]] = v;
    auto lookup = [&](const std::string& name) {
      auto it = id.find(name);
      if (it == id.end()) throw Error(ErrorKind::schema, "model names unknown variable '" + name + "'");
      return it->second;
    };

    std::vector<ConditionalTable> tables;
    for (const auto& c : j.at("cpds")) {
      ConditionalTable t;
      t.node = lookup(c.at("node").get<std::string>());
      for (const auto& p : c.at("parents")) t.parents.push_back(lookup(p.get<std::string>()));
      t.cardinalities = c.at("cardinalities").get<std::vector<std::size_t>>();
      t.probabilities = c.at("table").get<std::vector<double>>();
      tables.push_back(std::move(t));
    }
    model.net = make_bayes_net(variables, std::move(tables), j.at("ess").get<double>());

    const auto& w = j.at("weights");
    if (w.size() != d) throw Error(ErrorKind::schema, "weight matrix has the wrong number of rows");
    auto& dag = model.net.dag;
    for (std::size_t r = 0; r < d; ++r) {
      if (w[r].size() != d) throw Error(ErrorKind::schema, "weight matrix is not square");
      for (std::size_t c = 0; c < d; ++c) {
        dag.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r][c].get<double>();
      }
    }
    std::set<std::pair<std::size_t, std::size_t>> from_tables;
    for (const auto& e : dag.edges) from_tables.emplace(e.source, e.target);
    dag.edges.clear();
    std::set<std::pair<std::size_t, std::size_t>> listed;
    for (const auto& e : j.at("edges")) {
      const Edge edge{lookup(e.at(0).get<std::string>()), lookup(e.at(1).get<std::string>()), e.at(2).get<double>()};
      listed.emplace(edge.source, edge.target);
      dag.edges.push_back(edge);
    }
    if (listed != from_tables) throw Error(ErrorKind::schema, "edge list disagrees with the CPD parent sets");
    dag.prune_threshold = j.at("prune_threshold").get<double>();
    model.config = j.value("config", json::object());
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, std::string("malformed model: ") + e.what());
  }
}

inline void save_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

inline json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::schema, "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void save_model(const std::string& path, const Model& model) { save_json(path, model_to_json(model)); }
inline Model load_model(const std::string& path) { return model_from_json(load_json(path)); }

inline json notears_config_to_json(const NotearsConfig& c) {
  return {{"lambda1", c.lambda1},
          {"h_tolerance", c.h_tolerance},
          {"max_outer_iterations", c.max_outer_iterations},
          {"penalty_init", c.penalty_init},
          {"penalty_multiplier", c.penalty_multiplier},
          {"penalty_max", c.penalty_max},
          {"prune_threshold", c.prune_threshold},
          {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}, {"count", m.count}}; }

inline json to_json(const RankEvalReport& r) {
  json recall = json::object();
  for (const auto& [k, v] : r.recall_at) recall[std::to_string(k)] = v;
  return {{"recall_at", recall},
          {"mrr", r.mrr},
          {"pair_count", r.pair_count},
          {"excluded_pairs", r.excluded_pairs},
          {"per_intent_recall5", r.per_intent_recall5},
          {"per_intent_support", r.per_intent_support}};
}

inline json to_json(const ReplayReport& r) {
  json dialogues = json::array();
  for (const auto& d : r.dialogues) {
    dialogues.push_back({{"dialogue_id", d.dialogue_id},
                         {"turns", d.turns},
                         {"baseline_coverage", d.baseline_coverage},
                         {"guided_coverage", d.guided_coverage},
                         {"baseline_auc", d.baseline_auc},
                         {"guided_auc", d.guided_auc},
                         {"baseline_turns_to_75", d.baseline_turns_to_75},
                         {"guided_turns_to_75", d.guided_turns_to_75},
                         {"turn_reduction", d.turn_reduction},
                         {"hit_rate", d.hit_rate ? json(*d.hit_rate) : json(nullptr)},
                         {"jaccard", d.jaccard ? json(*d.jaccard) : json(nullptr)}});
  }
  return {{"dialogues", dialogues},
          {"excluded", r.excluded},
          {"aggregate",
           {{"baseline_auc", to_json(r.baseline_auc)},
            {"guided_auc", to_json(r.guided_auc)},
            {"baseline_turns_to_75", to_json(r.baseline_turns_to_75)},
            {"guided_turns_to_75", to_json(r.guided_turns_to_75)},
            {"turn_reduction", to_json(r.turn_reduction)},
            {"hit_rate", to_json(r.hit_rate)},
            {"jaccard", to_json(r.jaccard)}}}};
}

inline json to_json(const StabilityReport& r) {
  json edges = json::array();
  for (const auto& e : r.edges) {
    edges.push_back({{"source", e.source},
                     {"target", e.target},
                     {"presence", e.presence},
                     {"mean_weight", e.mean_weight},
                     {"weight_std", e.weight_std},
                     {"robust", e.robust}});
  }
  return {{"folds", r.folds},
          {"edges", edges},
          {"backward_edges", r.backward_edges},
          {"average_degree", r.average_degree},
          {"fold_edge_counts", r.fold_edge_counts}};
}

inline json to_json(const RandomDagComparison& r) {
  return {{"learned_recall5", r.learned_recall5},
          {"random_recall5", to_json(r.random_recall5)},
          {"trial_recall5", r.trial_recall5},
          {"edge_count", r.edge_count}};
}

/// Wraps a report body with its format version and the settings that produced it.
inline json report_envelope(const std::string& kind, json body, json config) {
  return {{"format_version", kFormatVersion}, {"report", kind}, {"config", std::move(config)}, {"result", std::move(body)}};
}

// ---------------------------------------------------------------------------
// Synthetic corpus specs

inline json to_json(const SynthSpec& s) {
  json transitions = json::array();
  for (const auto& t : s.transitions) {
    transitions.push_back({{"from", t.from}, {"to", t.to}, {"probability", t.probability}});
  }
  return {{"vocabulary", s.vocabulary},
          {"persistence", s.persistence},
          {"transitions", transitions},
          {"spawn", s.spawn},
          {"dialogues", s.dialogues},
          {"min_turns", s.min_turns},
          {"max_turns", s.max_turns},
          {"seed", s.seed}};
}

inline SynthSpec synth_spec_from_json(const json& j) {
  try {
    SynthSpec s;
    s.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    s.persistence = j.value("persistence", std::map<std::string, double>{});
    for (const auto& t : j.value("transitions", json::array())) {
      s.transitions.push_back({t.at("from").get<std::string>(), t.at("to").get<std::string>(),
                               t.at("probability").get<double>()});
    }
    s.spawn = j.value("spawn", s.spawn);
    s.dialogues = j.value("dialogues", s.dialogues);
    s.min_turns = j.value("min_turns", s.min_turns);
    s.max_turns = j.value("max_turns", s.max_turns);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, std::string("malformed synth spec: ") + e.what());
  }
}

/// Two persistent search intents and one search-to-booking transition.
inline SynthSpec planted_spec(std::size_t dialogues = 500, std::uint64_t seed = 42) {
  SynthSpec s;
  s.vocabulary = {"book-hotel", "book-train", "find-hotel", "find-train"};
  s.persistence = {{"find-hotel", 0.8}, {"find-train", 0.8}};
  s.transitions = {{"find-hotel", "book-hotel", 0.7}};
  s.spawn = 0.15;
  s.dialogues = dialogues;
  s.min_turns = 3;
  s.max_turns = 8;
  s.seed = seed;
  return s;
}

}  // namespace tbn
