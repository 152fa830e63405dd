// tbn: train, query and evaluate temporal Bayesian networks over dialogue intents.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tbn/tbn.hpp"

namespace {

using tbn::json;

struct Settings {
  std::uint64_t seed = 42;
  double lambda1 = tbn::NotearsConfig{}.lambda1;
  double prune_threshold = 0.5;
  double ess = 1.0;
  std::size_t top_k = 5;
  double tau = 0.5;
  std::size_t folds = 5;
  double train_fraction = 0.8;
  bool split = false;
  std::size_t random_dag_trials = 20;
  std::string mode = "annotations";

  std::string corpus, model, out, spec, lagged_out, utterance, progress;
  std::vector<std::string> evidence;
  long long turn = 0;
  long long turns_total = 1;
  std::optional<std::size_t> dialogues;

  tbn::NotearsConfig notears() const {
    tbn::NotearsConfig c;
    c.lambda1 = lambda1;
    c.prune_threshold = prune_threshold;
    c.seed = seed;
    return c;
  }
};

void add_learning(CLI::App* cmd, Settings& s) {
  cmd->add_option("--seed", s.seed, "seed for every random stream")->capture_default_str();
  cmd->add_option("--lambda1", s.lambda1, "L1 penalty of the structure learner")->capture_default_str();
  cmd->add_option("--prune-threshold", s.prune_threshold, "keep edges with |w| above this")->capture_default_str();
}

void add_gating(CLI::App* cmd, Settings& s) {
  cmd->add_option("--top-k", s.top_k, "candidates kept before gating")->capture_default_str()->check(
      CLI::PositiveNumber);
  cmd->add_option("--tau", s.tau, "probability gate")->capture_default_str()->check(CLI::Range(0.0, 1.0));
}

void add_split(CLI::App* cmd, Settings& s) {
  cmd->add_flag("--split", s.split, "hold out part of the corpus by dialogue");
  cmd->add_option("--train-fraction", s.train_fraction, "share of dialogues used for training")
      ->capture_default_str();
}

json learning_config(const Settings& s) {
  return {{"notears", tbn::notears_config_to_json(s.notears())},
          {"ess", s.ess},
          {"seed", s.seed},
          {"split", s.split},
          {"train_fraction", s.train_fraction}};
}

std::vector<tbn::Dialogue> training_part(const std::vector<tbn::Dialogue>& all, const Settings& s) {
  return s.split ? tbn::split_dialogues(all, s.train_fraction, s.seed).train : all;
}

std::string fixed3(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", p);
  return buf;
}

void write_report(const Settings& s, const json& report) {
  if (s.out.empty() || s.out == "-") {
    std::cout << report.dump(2) << '\n';
  } else {
    tbn::save_json(s.out, report);
  }
}

int cmd_train(const Settings& s) {
  const auto corpus = tbn::load_corpus(s.corpus);
  const auto vocab = tbn::build_vocabulary(corpus);
  const auto train = training_part(corpus, s);
  const auto lagged = tbn::build_lagged(tbn::build_turn_matrix(train, vocab), vocab);
  const auto dag = tbn::learn_structure(lagged, tbn::build_tabu_mask(lagged.variable_names), s.notears());
  tbn::Model model{vocab, tbn::fit_cpds(dag, lagged, s.ess), learning_config(s)};
  model.config["training_pairs"] = lagged.size();
  tbn::save_model(s.out, model);
  std::cerr << "learned " << dag.edges.size() << " edges over " << lagged.size() << " pairs, "
            << tbn::backward_edge_count(dag) << " backward\n";
  return 0;
}

int cmd_predict(const Settings& s) {
  const auto model = tbn::load_model(s.model);
  tbn::Evidence evidence;
  for (const auto& raw : s.evidence) {
    const auto name = tbn::normalize_intent(raw);
    if (!name) continue;
    model.vocabulary.index(*name);
    evidence.set(tbn::current_name(*name), 1);
  }
  if (!s.progress.empty() && tbn::has_progress_variables(model.net)) {
    evidence.set_progress(tbn::parse_progress(s.progress));
  }
  const auto posterior = tbn::posterior_next_intents(model.net, evidence);
  const auto sorted = posterior.sorted();
  std::cout << "posterior:\n";
  for (const auto& [name, p] : sorted) std::cout << "  " << name << ' ' << fixed3(p) << '\n';
  std::cout << "gated:\n";
  for (std::size_t i = 0; i < sorted.size() && i < s.top_k; ++i) {
    if (sorted[i].second > s.tau) std::cout << "  " << sorted[i].first << ' ' << fixed3(sorted[i].second) << '\n';
  }
  return 0;
}

int cmd_insight(const Settings& s) {
  const auto model = tbn::load_model(s.model);
  const tbn::TrigramEmbedder embedder;
  const auto block =
      tbn::guide(s.utterance, s.turn, s.turns_total, model.net, model.vocabulary, embedder, {s.top_k, s.tau});
  if (!block.text.empty()) std::cout << block.text << '\n';
  return 0;
}

int cmd_eval_rank(const Settings& s) {
  const auto model = tbn::load_model(s.model);
  const auto corpus = tbn::load_corpus(s.corpus);
  const auto parts = tbn::split_dialogues(corpus, s.train_fraction, s.seed);
  const auto& vocab = model.vocabulary;
  const auto train = tbn::build_lagged(tbn::build_turn_matrix(parts.train, vocab), vocab);
  const auto test = tbn::build_lagged(tbn::build_turn_matrix(parts.test, vocab), vocab);
  auto net = std::make_shared<const tbn::DiscreteBayesNet>(model.net);

  json result = {{"temporal_bn", tbn::to_json(tbn::rank_eval(tbn::make_tbn_predictor(net), test))},
                 {"random", tbn::to_json(tbn::rank_eval(tbn::make_random_predictor(vocab, s.seed), test))},
                 {"marginal", tbn::to_json(tbn::rank_eval(tbn::make_marginal_predictor(train), test))},
                 {"bigram", tbn::to_json(tbn::rank_eval(tbn::make_bigram_predictor(train), test))},
                 {"average_degree", tbn::average_degree(model.net.dag)},
                 {"backward_edges", tbn::backward_edge_count(model.net.dag)},
                 {"edge_count", model.net.dag.edges.size()}};
  if (s.random_dag_trials > 0) {
    result["random_dag"] = tbn::to_json(
        tbn::random_dag_comparison(train, test, model.net.dag, model.net.ess, s.random_dag_trials, s.seed));
  }
  json config = {{"seed", s.seed},
                 {"train_fraction", s.train_fraction},
                 {"random_dag_trials", s.random_dag_trials},
                 {"model", s.model},
                 {"corpus", s.corpus},
                 {"model_config", model.config}};
  write_report(s, tbn::report_envelope("eval-rank", result, config));
  return 0;
}

int cmd_replay(const Settings& s) {
  const auto model = tbn::load_model(s.model);
  const auto corpus = tbn::load_corpus(s.corpus);
  const auto dialogues = s.split ? tbn::split_dialogues(corpus, s.train_fraction, s.seed).test : corpus;
  auto net = std::make_shared<const tbn::DiscreteBayesNet>(model.net);
  tbn::TurnPredictor predictor;
  if (s.mode == "annotations") {
    predictor = tbn::make_annotation_turn_predictor(net, s.top_k, s.tau);
  } else {
    predictor = tbn::make_utterance_turn_predictor(net, model.vocabulary, std::make_shared<tbn::TrigramEmbedder>(),
                                                   {s.top_k, s.tau});
  }
  const auto report = tbn::replay(dialogues, predictor);
  json config = {{"top_k", s.top_k},
                 {"tau", s.tau},
                 {"mode", s.mode},
                 {"split", s.split},
                 {"seed", s.seed},
                 {"train_fraction", s.train_fraction},
                 {"model", s.model},
                 {"corpus", s.corpus},
                 {"model_config", model.config}};
  write_report(s, tbn::report_envelope("replay", tbn::to_json(report), config));
  return 0;
}

int cmd_stability(const Settings& s) {
  const auto corpus = tbn::load_corpus(s.corpus);
  const auto report = tbn::edge_stability(corpus, s.folds, s.notears(), s.seed);
  json config = {{"folds", s.folds},
                 {"seed", s.seed},
                 {"corpus", s.corpus},
                 {"notears", tbn::notears_config_to_json(s.notears())}};
  write_report(s, tbn::report_envelope("stability", tbn::to_json(report), config));
  return 0;
}

int cmd_synth(const Settings& s) {
  tbn::SynthSpec spec = s.spec.empty() ? tbn::planted_spec() : tbn::synth_spec_from_json(tbn::load_json(s.spec));
  if (s.dialogues) spec.dialogues = *s.dialogues;
  spec.seed = s.seed;
  spec.validate();
  const auto corpus = tbn::generate_corpus(spec);
  if (s.out.empty() || s.out == "-") {
    tbn::write_corpus(std::cout, corpus);
  } else {
    tbn::save_corpus(s.out, corpus);
  }
  std::cerr << "wrote " << corpus.size() << " dialogues\n";
  return 0;
}

int cmd_ingest(const Settings& s) {
  const auto corpus = tbn::load_corpus(s.corpus);
  const auto vocab = tbn::build_vocabulary(corpus);
  const auto matrix = tbn::build_turn_matrix(corpus, vocab);
  const auto lagged = tbn::build_lagged(matrix, vocab);
  if (!s.lagged_out.empty()) {
    std::ofstream out(s.lagged_out, std::ios::binary);
    if (!out) throw tbn::Error(tbn::ErrorKind::io, "cannot write '" + s.lagged_out + "'");
    tbn::write_lagged_csv(out, lagged);
  }
  json info_gain = json::object();
  if (lagged.size() > 0) {
    for (const auto& name : vocab.names()) info_gain[name] = tbn::info_gain(matrix, vocab, name);
  }
  json result = {{"dialogues", corpus.size()},
                 {"user_turns", matrix.rows()},
                 {"pairs", lagged.size()},
                 {"vocabulary", vocab.names()},
                 {"info_gain_bits", info_gain}};
  write_report(s, tbn::report_envelope("ingest", result, {{"corpus", s.corpus}}));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal Bayesian network over dialogue intents"};
  app.require_subcommand(1);
  Settings s;

  auto* train = app.add_subcommand("train", "learn structure and CPDs from a corpus");
  train->add_option("--corpus", s.corpus, "corpus JSONL")->required();
  train->add_option("--out", s.out, "model JSON")->required();
  add_learning(train, s);
  add_split(train, s);
  train->add_option("--ess", s.ess, "BDeu equivalent sample size")->capture_default_str();

  auto* predict = app.add_subcommand("predict", "posterior over next-turn intents");
  predict->add_option("--model", s.model)->required();
  predict->add_option("--evidence", s.evidence, "intents active at the current turn")->delimiter(',');
  predict->add_option("--progress", s.progress, "early, mid or late");
  add_gating(predict, s);

  auto* insight = app.add_subcommand("insight", "causal-insight block for one utterance");
  insight->add_option("--model", s.model)->required();
  insight->add_option("--utterance", s.utterance)->required();
  insight->add_option("--turn", s.turn, "0-based USER turn index")->capture_default_str();
  insight->add_option("--turns-total", s.turns_total, "USER turns in the dialogue")->capture_default_str();
  add_gating(insight, s);

  auto* eval_rank = app.add_subcommand("eval-rank", "ranking metrics for the model and baselines");
  eval_rank->add_option("--model", s.model)->required();
  eval_rank->add_option("--corpus", s.corpus, "corpus split into train (baselines) and test")->required();
  eval_rank->add_option("--out", s.out, "report JSON, '-' for stdout");
  eval_rank->add_option("--seed", s.seed)->capture_default_str();
  eval_rank->add_option("--train-fraction", s.train_fraction)->capture_default_str();
  eval_rank->add_option("--random-dag-trials", s.random_dag_trials)->capture_default_str();

  auto* replay = app.add_subcommand("replay", "ground-truth replay of gated predictions");
  replay->add_option("--model", s.model)->required();
  replay->add_option("--corpus", s.corpus)->required();
  replay->add_option("--out", s.out, "report JSON, '-' for stdout");
  replay->add_option("--mode", s.mode, "evidence source")
      ->check(CLI::IsMember({"annotations", "utterances"}))
      ->capture_default_str();
  replay->add_option("--seed", s.seed)->capture_default_str();
  add_split(replay, s);
  add_gating(replay, s);

  auto* stability = app.add_subcommand("stability", "k-fold edge stability");
  stability->add_option("--corpus", s.corpus)->required();
  stability->add_option("--out", s.out, "report JSON, '-' for stdout");
  stability->add_option("--folds", s.folds)->capture_default_str();
  add_learning(stability, s);

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--out", s.out, "corpus JSONL, '-' for stdout");
  synth->add_option("--spec", s.spec, "SynthSpec JSON; the planted preset otherwise");
  synth->add_option("--dialogues", s.dialogues);
  synth->add_option("--seed", s.seed)->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "validate a corpus and summarize it");
  ingest->add_option("--corpus", s.corpus)->required();
  ingest->add_option("--out", s.out, "summary JSON, '-' for stdout");
  ingest->add_option("--lagged-csv", s.lagged_out, "write the lagged design matrix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(s);
    if (*predict) return cmd_predict(s);
    if (*insight) return cmd_insight(s);
    if (*eval_rank) return cmd_eval_rank(s);
    if (*replay) return cmd_replay(s);
    if (*stability) return cmd_stability(s);
    if (*synth) return cmd_synth(s);
    if (*ingest) return cmd_ingest(s);
  } catch (const tbn::Error& e) {
    std::cerr << "tbn: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "tbn: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
