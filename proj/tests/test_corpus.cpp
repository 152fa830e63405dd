#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"

using namespace tbn;
using tbn::fixtures::dialogue;

TEST(NormalizeIntent, Canonicalizes) {
  EXPECT_EQ(normalize_intent("find_hotel"), "find-hotel");
  EXPECT_EQ(normalize_intent("book-train"), "book-train");
  EXPECT_EQ(normalize_intent("Find Restaurant"), "find-restaurant");
  EXPECT_EQ(normalize_intent("  book_taxi "), "book-taxi");
}

TEST(NormalizeIntent, NoneIsAbsent) {
  EXPECT_FALSE(normalize_intent("NONE").has_value());
  EXPECT_FALSE(normalize_intent("none").has_value());
  EXPECT_FALSE(normalize_intent("None").has_value());
}

TEST(NormalizeIntent, EmptyIsError) {
  try {
    normalize_intent("");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_label);
  }
  EXPECT_THROW(normalize_intent("   "), Error);
}

TEST(NormalizeIntent, Idempotent) {
  for (const char* raw : {"find_hotel", "Book Train", "FIND-taxi", "a_b c", "x"}) {
    const auto once = normalize_intent(raw);
    ASSERT_TRUE(once);
    EXPECT_EQ(normalize_intent(*once), once) << raw;
  }
}

TEST(Vocabulary, SortedUnionOfUserIntents) {
  Dialogue d{"d1", {fixtures::user({"find_hotel", "NONE"}), fixtures::user({"book_hotel"}),
                    {Speaker::system, "sure", {"find_train"}}}};
  const auto v = build_vocabulary({d});
  EXPECT_EQ(v.names(), (std::vector<std::string>{"book-hotel", "find-hotel"}));
  EXPECT_EQ(v.size(), 2u);
}

TEST(Vocabulary, SingleIntent) {
  const auto v = build_vocabulary({dialogue("a", {{"find_taxi"}})});
  EXPECT_EQ(v.names(), std::vector<std::string>{"find-taxi"});
}

TEST(Vocabulary, EmptyIsError) {
  try {
    build_vocabulary({dialogue("a", {{"NONE"}, {}})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_vocabulary);
  }
  EXPECT_THROW(build_vocabulary({}), Error);
}

TEST(Vocabulary, RejectsBadNames) {
  EXPECT_THROW(IntentVocabulary({"find-hotel", "find-hotel"}), Error);
  EXPECT_THROW(IntentVocabulary({"findhotel"}), Error);
  EXPECT_THROW(IntentVocabulary({"find-hotel-now"}), Error);
  EXPECT_THROW(IntentVocabulary({"Find-hotel"}), Error);
  EXPECT_NO_THROW(IntentVocabulary({"find-hotel", "book-hotel"}));
}

TEST(Vocabulary, IndexLookup) {
  const IntentVocabulary v({"find-hotel", "book-hotel"});
  EXPECT_EQ(v.index("book-hotel"), 0u);
  EXPECT_EQ(v.index("find-hotel"), 1u);
  EXPECT_FALSE(v.find("find-train"));
  try {
    v.index("find-train");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unknown_intent);
  }
}

TEST(TurnMatrix, IndicatorRows) {
  const IntentVocabulary v({"book-hotel", "find-hotel"});
  Dialogue d{"d", {fixtures::user({"find-hotel"}), fixtures::system_turn(), fixtures::user({}),
                   fixtures::user({"book_hotel"})}};
  const auto m = build_turn_matrix({d}, v);
  ASSERT_EQ(m.rows(), 3u);
  EXPECT_EQ(m.entries, (std::vector<std::vector<std::uint8_t>>{{0, 1}, {0, 0}, {1, 0}}));
  EXPECT_EQ(m.row_tags[0].dialogue_id, "d");
  EXPECT_EQ(m.row_tags[2].turn, 2u);
}

TEST(TurnMatrix, NoUserTurnsGivesEmptyMatrix) {
  const IntentVocabulary v({"book-hotel"});
  Dialogue d{"d", {fixtures::system_turn()}};
  EXPECT_EQ(build_turn_matrix({d}, v).rows(), 0u);
  EXPECT_EQ(build_turn_matrix({}, v).rows(), 0u);
}

TEST(TurnMatrix, UnknownIntentIsError) {
  const IntentVocabulary v({"book-hotel"});
  try {
    build_turn_matrix({dialogue("d", {{"find-hotel"}})}, v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unknown_intent);
  }
}

TEST(TurnMatrix, RoundTripsAnnotations) {
  const auto corpus = generate_corpus(planted_spec(40, 5));
  const auto v = build_vocabulary(corpus);
  const auto m = build_turn_matrix(corpus, v);
  std::size_t row = 0;
  for (const auto& d : corpus) {
    const auto sets = user_intent_sets(d);
    for (std::size_t t = 0; t < sets.size(); ++t, ++row) {
      ASSERT_EQ(m.row_tags[row].dialogue_id, d.dialogue_id);
      ASSERT_EQ(m.row_tags[row].turn, t);
      for (std::size_t j = 0; j < v.size(); ++j) EXPECT_EQ(m.entries[row][j] == 1, sets[t].count(v.name(j)) == 1);
    }
  }
  EXPECT_EQ(row, m.rows());
}

std::vector<Dialogue> numbered(std::size_t n) {
  std::vector<Dialogue> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(dialogue("d" + std::to_string(i), {{"find-hotel"}}));
  return out;
}

TEST(Split, CountsAndDisjointness) {
  const auto all = numbered(10);
  const auto s = split_dialogues(all, 0.8, 42);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.test.size(), 2u);
  std::set<std::string> ids;
  for (const auto& d : s.train) ids.insert(d.dialogue_id);
  for (const auto& d : s.test) EXPECT_FALSE(ids.count(d.dialogue_id));
  for (const auto& d : s.test) ids.insert(d.dialogue_id);
  EXPECT_EQ(ids.size(), 10u);
}

TEST(Split, Deterministic) {
  const auto all = numbered(30);
  const auto a = split_dialogues(all, 0.7, 42), b = split_dialogues(all, 0.7, 42), c = split_dialogues(all, 0.7, 43);
  auto ids = [](const std::vector<Dialogue>& ds) {
    std::vector<std::string> out;
    for (const auto& d : ds) out.push_back(d.dialogue_id);
    return out;
  };
  EXPECT_EQ(ids(a.test), ids(b.test));
  EXPECT_NE(ids(a.test), ids(c.test));
}

TEST(Split, Errors) {
  EXPECT_THROW(split_dialogues(numbered(1), 0.5, 1), Error);
  EXPECT_THROW(split_dialogues(numbered(5), 0.0, 1), Error);
  EXPECT_THROW(split_dialogues(numbered(5), 1.0, 1), Error);
  const auto tiny = split_dialogues(numbered(2), 0.99, 1);
  EXPECT_EQ(tiny.train.size(), 1u);
  EXPECT_EQ(tiny.test.size(), 1u);
}

TEST(CorpusJsonl, RoundTrip) {
  const auto corpus = generate_corpus(planted_spec(5, 1));
  std::stringstream ss;
  write_corpus(ss, corpus);
  const auto back = read_corpus(ss);
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back[i].dialogue_id, corpus[i].dialogue_id);
    ASSERT_EQ(back[i].turns.size(), corpus[i].turns.size());
    EXPECT_EQ(back[i].turns[0].utterance, corpus[i].turns[0].utterance);
    EXPECT_EQ(back[i].turns[0].active_intents, corpus[i].turns[0].active_intents);
  }
}

TEST(CorpusJsonl, IgnoresUnknownKeysAndBlankLines) {
  std::stringstream ss(
      R"({"dialogue_id":"x","extra":1,"turns":[{"speaker":"USER","utterance":"hi","active_intents":["find_hotel"]}]})"
      "\n\n");
  const auto c = read_corpus(ss);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].turns[0].active_intents, std::vector<std::string>{"find_hotel"});
}

TEST(CorpusJsonl, SchemaErrors) {
  auto parse = [](const std::string& text) {
    std::stringstream ss(text);
    return read_corpus(ss);
  };
  EXPECT_THROW(parse("{not json}\n"), Error);
  EXPECT_THROW(parse(R"({"turns":[]})"), Error);
  EXPECT_THROW(parse(R"({"dialogue_id":"a","turns":[{"speaker":"BOT"}]})"), Error);
  EXPECT_THROW(parse("{\"dialogue_id\":\"a\",\"turns\":[]}\n{\"dialogue_id\":\"a\",\"turns\":[]}\n"), Error);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), Error);
}
