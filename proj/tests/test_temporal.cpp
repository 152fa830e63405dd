#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"

using namespace tbn;
using tbn::fixtures::dialogue;

TEST(Progress, Buckets) {
  EXPECT_EQ(progress_bucket(0, 10), ProgressBucket::early);
  EXPECT_EQ(progress_bucket(9, 10), ProgressBucket::late);
  EXPECT_EQ(progress_bucket(4, 10), ProgressBucket::mid);
  EXPECT_EQ(progress_bucket(0, 1), ProgressBucket::early);
  EXPECT_EQ(progress_bucket(1, 2), ProgressBucket::late);
}

TEST(Progress, BoundariesAtExactThirds) {
  // 7 turns: p = t / 6, so t = 2 is exactly 1/3 and t = 4 exactly 2/3.
  EXPECT_EQ(progress_bucket(1, 7), ProgressBucket::early);
  EXPECT_EQ(progress_bucket(2, 7), ProgressBucket::mid);
  EXPECT_EQ(progress_bucket(3, 7), ProgressBucket::mid);
  EXPECT_EQ(progress_bucket(4, 7), ProgressBucket::late);
}

TEST(Progress, MatchesRealThresholds) {
  for (long long n = 1; n <= 40; ++n) {
    for (long long t = 0; t < n; ++t) {
      const double p = static_cast<double>(t) / static_cast<double>(std::max(n - 1, 1LL));
      const auto expected = p < 1.0 / 3.0 - 1e-12  ? ProgressBucket::early
                            : p < 2.0 / 3.0 - 1e-12 ? ProgressBucket::mid
                                                    : ProgressBucket::late;
      EXPECT_EQ(progress_bucket(t, n), expected) << t << "/" << n;
    }
  }
}

TEST(Progress, OutOfRange) {
  try {
    progress_bucket(10, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::bounds);
  }
  EXPECT_THROW(progress_bucket(-1, 10), Error);
  EXPECT_THROW(progress_bucket(0, 0), Error);
}

TEST(Progress, ParseRoundTrip) {
  for (auto b : {ProgressBucket::early, ProgressBucket::mid, ProgressBucket::late}) {
    EXPECT_EQ(parse_progress(to_string(b)), b);
  }
  EXPECT_THROW(parse_progress("middle"), Error);
}

TEST(Lagged, VariableLayout) {
  const IntentVocabulary v({"book-hotel", "find-hotel"});
  EXPECT_EQ(lagged_variable_names(v),
            (std::vector<std::string>{"book-hotel__t", "find-hotel__t", "book-hotel__t1", "find-hotel__t1",
                                      "progress_early", "progress_mid", "progress_late"}));
}

TEST(Lagged, PairCounts) {
  const IntentVocabulary v({"find-hotel"});
  const auto one = build_lagged(build_turn_matrix({dialogue("a", {{"find-hotel"}, {}, {}, {"find-hotel"}})}, v), v);
  EXPECT_EQ(one.size(), 3u);
  const auto two = build_lagged(
      build_turn_matrix({dialogue("a", {{"find-hotel"}, {}, {}, {}}), dialogue("b", {{"find-hotel"}})}, v), v);
  EXPECT_EQ(two.size(), 3u);
}

TEST(Lagged, SlicesMatchMatrixRows) {
  const auto corpus = generate_corpus(planted_spec(60, 9));
  const auto v = build_vocabulary(corpus);
  const auto m = build_turn_matrix(corpus, v);
  const auto l = build_lagged(m, v);

  std::map<std::pair<std::string, std::size_t>, std::size_t> row_of;
  std::map<std::string, std::size_t> turns;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    row_of[{m.row_tags[r].dialogue_id, m.row_tags[r].turn}] = r;
    ++turns[m.row_tags[r].dialogue_id];
  }
  std::size_t expected_rows = 0;
  for (const auto& [id, n] : turns) expected_rows += n - 1;
  ASSERT_EQ(l.size(), expected_rows);

  const std::size_t k = v.size();
  for (std::size_t r = 0; r < l.size(); ++r) {
    const auto& tag = l.row_tags[r];
    const auto& cur = m.entries[row_of.at({tag.dialogue_id, tag.turn})];
    const auto& nxt = m.entries[row_of.at({tag.dialogue_id, tag.turn + 1})];
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_EQ(l.rows[r][l.current_column(j)], cur[j]);
      EXPECT_EQ(l.rows[r][l.next_column(j)], nxt[j]);
    }
    int hot = 0;
    for (std::size_t b = 0; b < 3; ++b) hot += l.rows[r][2 * k + b];
    EXPECT_EQ(hot, 1);
    const auto n = static_cast<long long>(turns[tag.dialogue_id]);
    EXPECT_EQ(l.progress(r), progress_bucket(static_cast<long long>(tag.turn), n));
  }
}

TEST(Lagged, CsvHeaderAndQuoting) {
  const IntentVocabulary v({"find-hotel"});
  const auto l = build_lagged(build_turn_matrix({dialogue("a,b", {{"find-hotel"}, {}})}, v), v);
  std::ostringstream out;
  write_lagged_csv(out, l);
  EXPECT_EQ(out.str(),
            "find-hotel__t,find-hotel__t1,progress_early,progress_mid,progress_late,__dialogue_id,__t\n"
            "1,0,1,0,0,\"a,b\",0\n");
}
