#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tbn/tbn.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / ("tbn_cli_" + std::to_string(::getpid())));
    fs::create_directories(*dir_);
    ASSERT_EQ(run("synth --dialogues 300 --seed 7 --out " + path("corpus.jsonl")).code, 0);
    ASSERT_EQ(run("train --corpus " + path("corpus.jsonl") + " --out " + path("model.json")).code, 0);
  }

  static void TearDownTestSuite() {
    std::error_code ec;
    fs::remove_all(*dir_, ec);
    delete dir_;
  }

  static std::string path(const std::string& name) { return (*dir_ / name).string(); }

  static Result run(const std::string& args) {
    const auto out = *dir_ / "stdout.txt", err = *dir_ / "stderr.txt";
    const std::string cmd =
        std::string(TBN_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  static tbn::json report(const std::string& args) {
    const auto r = run(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return tbn::json::parse(r.out);
  }

  static fs::path* dir_;
};

fs::path* Cli::dir_ = nullptr;

}  // namespace

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run("--help").code, 0); }

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("train --corpus x.jsonl").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("predict --model " + path("model.json") + " --tau 1.5").code, 2);
  EXPECT_EQ(run("replay --model m --corpus c --mode voice").code, 2);
}

TEST_F(Cli, RuntimeErrorsExitOne) {
  EXPECT_EQ(run("train --corpus " + path("missing.jsonl") + " --out " + path("m.json")).code, 1);
  const auto unknown = run("predict --model " + path("model.json") + " --evidence find-flight");
  EXPECT_EQ(unknown.code, 1);
  EXPECT_NE(unknown.err.find("find-flight"), std::string::npos);
  EXPECT_EQ(run("insight --model " + path("model.json") + " --utterance ' '").code, 1);
  std::ofstream(path("broken.json")) << "{\"format_version\": 1}";
  EXPECT_EQ(run("predict --model " + path("broken.json")).code, 1);
}

TEST_F(Cli, TrainIsByteIdentical) {
  ASSERT_EQ(run("train --corpus " + path("corpus.jsonl") + " --out " + path("again.json")).code, 0);
  EXPECT_EQ(slurp(path("model.json")), slurp(path("again.json")));
}

TEST_F(Cli, SynthIsByteIdentical) {
  ASSERT_EQ(run("synth --dialogues 300 --seed 7 --out " + path("corpus2.jsonl")).code, 0);
  EXPECT_EQ(slurp(path("corpus.jsonl")), slurp(path("corpus2.jsonl")));
  ASSERT_EQ(run("synth --dialogues 300 --seed 8 --out " + path("corpus3.jsonl")).code, 0);
  EXPECT_NE(slurp(path("corpus.jsonl")), slurp(path("corpus3.jsonl")));
}

TEST_F(Cli, ModelEmbedsConfig) {
  const auto model = tbn::json::parse(slurp(path("model.json")));
  EXPECT_EQ(model["format_version"], tbn::kFormatVersion);
  EXPECT_EQ(model["config"]["seed"], 42);
  EXPECT_TRUE(model["config"]["notears"].contains("lambda1"));
  EXPECT_GT(model["config"]["training_pairs"].get<int>(), 0);
}

TEST_F(Cli, PredictPlantedTransition) {
  const auto r = run("predict --model " + path("model.json") + " --evidence find-hotel");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("posterior:\n", 0), 0u);
  const auto gated = r.out.substr(r.out.find("gated:"));
  EXPECT_NE(gated.find("find-hotel"), std::string::npos);
  EXPECT_NE(gated.find("book-hotel"), std::string::npos);
  EXPECT_EQ(gated.find("train"), std::string::npos);
}

TEST_F(Cli, PredictTauOneGatesEverything) {
  const auto r = run("predict --model " + path("model.json") + " --evidence find-hotel --tau 1.0");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(r.out.find("gated:")), "gated:\n");
}

TEST_F(Cli, InsightBlock) {
  const auto r = run("insight --model " + path("model.json") +
                     " --utterance 'I want to find a hotel' --turn 0 --turns-total 4 --top-k 1");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("[CAUSAL INSIGHT]\nObserved intents: find-hotel\n", 0), 0u);
  EXPECT_NE(r.out.find("[/CAUSAL INSIGHT]"), std::string::npos);

  const auto empty = run("insight --model " + path("model.json") + " --utterance 'I want to find a hotel' --tau 1");
  ASSERT_EQ(empty.code, 0);
  EXPECT_TRUE(empty.out.empty());
}

TEST_F(Cli, EvalRankReport) {
  const auto j = report("eval-rank --model " + path("model.json") + " --corpus " + path("corpus.jsonl") +
                        " --random-dag-trials 3");
  EXPECT_EQ(j["format_version"], tbn::kFormatVersion);
  EXPECT_EQ(j["report"], "eval-rank");
  EXPECT_EQ(j["config"]["seed"], 42);
  EXPECT_EQ(j["config"]["random_dag_trials"], 3);
  const auto& r = j["result"];
  for (const char* method : {"temporal_bn", "random", "marginal", "bigram"}) {
    ASSERT_TRUE(r.contains(method)) << method;
    const auto& m = r[method];
    EXPECT_LE(m["recall_at"]["1"].get<double>(), m["recall_at"]["3"].get<double>());
    EXPECT_LE(m["recall_at"]["3"].get<double>(), m["recall_at"]["5"].get<double>());
    EXPECT_LE(m["mrr"].get<double>(), 1.0);
  }
  EXPECT_GT(r["temporal_bn"]["mrr"].get<double>(), r["random"]["mrr"].get<double>());
  EXPECT_EQ(r["backward_edges"], 0);
  EXPECT_EQ(r["random_dag"]["trial_recall5"].size(), 3u);
}

TEST_F(Cli, EvalRankWritesFile) {
  ASSERT_EQ(run("eval-rank --model " + path("model.json") + " --corpus " + path("corpus.jsonl") +
                " --random-dag-trials 0 --out " + path("rank.json"))
                .code,
            0);
  const auto j = tbn::json::parse(slurp(path("rank.json")));
  EXPECT_FALSE(j["result"].contains("random_dag"));
}

TEST_F(Cli, ReplayReportBothModes) {
  for (const char* mode : {"annotations", "utterances"}) {
    const auto j = report(std::string("replay --mode ") + mode + " --model " + path("model.json") + " --corpus " +
                          path("corpus.jsonl") + " --split");
    EXPECT_EQ(j["config"]["mode"], mode);
    EXPECT_EQ(j["config"]["split"], true);
    EXPECT_EQ(j["config"]["tau"], 0.5);
    const auto& r = j["result"];
    ASSERT_FALSE(r["dialogues"].empty());
    for (const auto& d : r["dialogues"]) {
      EXPECT_GE(d["guided_auc"].get<double>(), d["baseline_auc"].get<double>() - 1e-12);
    }
  }
}

TEST_F(Cli, StabilityReport) {
  const auto j = report("stability --corpus " + path("corpus.jsonl") + " --folds 3");
  EXPECT_EQ(j["config"]["folds"], 3);
  EXPECT_EQ(j["result"]["fold_edge_counts"].size(), 3u);
  EXPECT_EQ(j["result"]["backward_edges"], 0);
}

TEST_F(Cli, IngestSummaryAndLaggedCsv) {
  const auto j = report("ingest --corpus " + path("corpus.jsonl") + " --lagged-csv " + path("lagged.csv"));
  EXPECT_EQ(j["result"]["dialogues"], 300);
  EXPECT_EQ(j["result"]["vocabulary"].size(), 4u);
  EXPECT_EQ(j["result"]["info_gain_bits"].size(), 4u);
  const auto csv = slurp(path("lagged.csv"));
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  EXPECT_EQ(lines, j["result"]["pairs"].get<std::size_t>() + 1);
}

TEST_F(Cli, SynthFromSpecFile) {
  std::ofstream(path("spec.json")) << R"({"vocabulary": ["find-taxi", "book-taxi"],
    "persistence": {"find-taxi": 0.9}, "dialogues": 20, "min_turns": 2, "max_turns": 4})";
  const auto r = run("synth --spec " + path("spec.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  const auto corpus = tbn::read_corpus(in);
  EXPECT_EQ(corpus.size(), 20u);
}
