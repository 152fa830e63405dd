#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tbn/error.hpp"
#include "tbn/random.hpp"

namespace tbn {

enum class Speaker { user, system };

struct Turn {
  Speaker speaker = Speaker::user;
  std::string utterance;
  std::vector<std::string> active_intents;  // raw labels, as annotated
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<Turn> turns;
};

/// Canonical Action-Object form of a raw label; absent for "NONE".
inline std::optional<std::string> normalize_intent(std::string_view raw) {
  auto first = raw.find_first_not_of(" \t\r\n");
  auto last = raw.find_last_not_of(" \t\r\n");
  if (raw.empty() || first == std::string_view::npos) {
    throw Error(ErrorKind::invalid_label, "empty intent label");
  }
  std::string out(raw.substr(first, last - first + 1));
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '_' || c == ' ') c = '-';
  }
  if (out == "none") return std::nullopt;
  return out;
}

inline bool is_action_object(std::string_view name) {
  const auto hyphen = name.find('-');
  if (hyphen == std::string_view::npos || hyphen == 0 || hyphen + 1 == name.size()) return false;
  if (name.find('-', hyphen + 1) != std::string_view::npos) return false;
  return std::none_of(name.begin(), name.end(), [](char c) {
    return std::isupper(static_cast<unsigned char>(c)) || std::isspace(static_cast<unsigned char>(c));
  });
}

/// Normalized, NONE-free intent set of one turn.
inline std::set<std::string> normalized_intents(const Turn& turn) {
  std::set<std::string> out;
  for (const auto& raw : turn.active_intents) {
    if (auto name = normalize_intent(raw)) out.insert(std::move(*name));
  }
  return out;
}

/// Per-USER-turn normalized intent sets of a dialogue, in order.
inline std::vector<std::set<std::string>> user_intent_sets(const Dialogue& dialogue) {
  std::vector<std::set<std::string>> out;
  for (const auto& turn : dialogue.turns) {
    if (turn.speaker == Speaker::user) out.push_back(normalized_intents(turn));
  }
  return out;
}

class IntentVocabulary {
 public:
  IntentVocabulary() = default;

  /// Sorts and validates; duplicates are rejected.
  explicit IntentVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
    std::sort(names_.begin(), names_.end());
    if (std::adjacent_find(names_.begin(), names_.end()) != names_.end()) {
      throw Error(ErrorKind::naming, "duplicate intent in vocabulary");
    }
    for (const auto& n : names_) {
      if (!is_action_object(n)) {
        throw Error(ErrorKind::naming, "intent '" + n + "' is not in action-object form");
      }
    }
  }

  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(std::size_t index) const { return names_.at(index); }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
  }

  std::size_t index(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw Error(ErrorKind::unknown_intent, "intent '" + std::string(name) + "' not in vocabulary");
  }

  bool operator==(const IntentVocabulary&) const = default;

 private:
  std::vector<std::string> names_;
};

inline IntentVocabulary build_vocabulary(const std::vector<Dialogue>& dialogues) {
  if (dialogues.empty()) throw Error(ErrorKind::input, "no dialogues");
  std::set<std::string> names;
  for (const auto& d : dialogues) {
    for (const auto& turn : d.turns) {
      if (turn.speaker != Speaker::user) continue;
      auto intents = normalized_intents(turn);
      names.insert(intents.begin(), intents.end());
    }
  }
  if (names.empty()) throw Error(ErrorKind::empty_vocabulary, "no USER turn carries an intent");
  return IntentVocabulary({names.begin(), names.end()});
}

struct RowTag {
  std::string dialogue_id;
  std::size_t turn = 0;  // USER-turn index within the dialogue, from 0

  bool operator==(const RowTag&) const = default;
};

/// Binary USER-turn x intent indicator matrix.
struct TurnIntentMatrix {
  std::vector<std::vector<std::uint8_t>> entries;
  std::vector<RowTag> row_tags;
  std::size_t cols = 0;

  std::size_t rows() const noexcept { return entries.size(); }
};

inline TurnIntentMatrix build_turn_matrix(const std::vector<Dialogue>& dialogues, const IntentVocabulary& vocab) {
  TurnIntentMatrix m;
  m.cols = vocab.size();
  for (const auto& d : dialogues) {
    std::size_t user_turn = 0;
    for (const auto& turn : d.turns) {
      if (turn.speaker != Speaker::user) continue;
      std::vector<std::uint8_t> row(vocab.size(), 0);
      for (const auto& name : normalized_intents(turn)) {
        auto j = vocab.find(name);
        if (!j) {
          throw Error(ErrorKind::unknown_intent,
                      "intent '" + name + "' in dialogue '" + d.dialogue_id + "' is not in the vocabulary");
        }
        row[*j] = 1;
      }
      m.entries.push_back(std::move(row));
      m.row_tags.push_back({d.dialogue_id, user_turn++});
    }
  }
  return m;
}

struct DialogueSplit {
  std::vector<Dialogue> train;
  std::vector<Dialogue> test;
};

/// Deterministic dialogue-level split. Each part keeps corpus order.
inline DialogueSplit split_dialogues(const std::vector<Dialogue>& dialogues, double train_fraction,
                                     std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::split, "train fraction must lie strictly between 0 and 1");
  }
  if (dialogues.size() < 2) throw Error(ErrorKind::split, "need at least 2 dialogues to split");

  std::vector<std::size_t> order(dialogues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed, "split");
  rng.shuffle(order);

  const auto n = static_cast<long long>(dialogues.size());
  long long n_train = std::llround(train_fraction * static_cast<double>(n));
  n_train = std::clamp(n_train, 1LL, n - 1);

  std::vector<bool> in_train(dialogues.size(), false);
  for (long long i = 0; i < n_train; ++i) in_train[order[static_cast<std::size_t>(i)]] = true;

  DialogueSplit out;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    (in_train[i] ? out.train : out.test).push_back(dialogues[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL corpus format

inline Dialogue dialogue_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::schema, "dialogue must be a JSON object");
  Dialogue d;
  if (!j.contains("dialogue_id") || !j["dialogue_id"].is_string()) {
    throw Error(ErrorKind::schema, "missing string field 'dialogue_id'");
  }
  d.dialogue_id = j["dialogue_id"].get<std::string>();
  if (d.dialogue_id.empty()) throw Error(ErrorKind::schema, "empty dialogue_id");
  if (!j.contains("turns") || !j["turns"].is_array()) {
    throw Error(ErrorKind::schema, "dialogue '" + d.dialogue_id + "' lacks a 'turns' array");
  }
  for (const auto& jt : j["turns"]) {
    Turn t;
    const auto speaker = jt.value("speaker", std::string{});
    if (speaker == "USER") {
      t.speaker = Speaker::user;
    } else if (speaker == "SYSTEM") {
      t.speaker = Speaker::system;
    } else {
      throw Error(ErrorKind::schema, "bad speaker '" + speaker + "' in dialogue '" + d.dialogue_id + "'");
    }
    t.utterance = jt.value("utterance", std::string{});
    if (jt.contains("active_intents")) {
      for (const auto& label : jt["active_intents"]) t.active_intents.push_back(label.get<std::string>());
    }
    d.turns.push_back(std::move(t));
  }
  return d;
}

inline nlohmann::json dialogue_to_json(const Dialogue& d) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : d.turns) {
    turns.push_back({{"speaker", t.speaker == Speaker::user ? "USER" : "SYSTEM"},
                     {"utterance", t.utterance},
                     {"active_intents", t.active_intents}});
  }
  return {{"dialogue_id", d.dialogue_id}, {"turns", std::move(turns)}};
}

inline std::vector<Dialogue> read_corpus(std::istream& in) {
  std::vector<Dialogue> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::schema, "line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      auto d = dialogue_from_json(j);
      if (!seen.insert(d.dialogue_id).second) {
        throw Error(ErrorKind::schema, "duplicate dialogue_id '" + d.dialogue_id + "'");
      }
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::schema, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<Dialogue> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open corpus '" + path + "'");
  return read_corpus(in);
}

inline void write_corpus(std::ostream& out, const std::vector<Dialogue>& dialogues) {
  for (const auto& d : dialogues) out << dialogue_to_json(d).dump() << '\n';
}

inline void save_corpus(const std::string& path, const std::vector<Dialogue>& dialogues) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write corpus '" + path + "'");
  write_corpus(out, dialogues);
}

}  // namespace tbn
