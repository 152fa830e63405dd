#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tbn/corpus.hpp"
#include "tbn/error.hpp"
#include "tbn/random.hpp"

namespace tbn {

struct SynthTransition {
  std::string from;
  std::string to;
  double probability = 0.0;
};

/// Ground-truth intent process for synthetic corpora.
struct SynthSpec {
  std::vector<std::string> vocabulary;
  std::map<std::string, double> persistence;
  std::vector<SynthTransition> transitions;
  double spawn = 0.0;
  std::size_t dialogues = 100;
  std::size_t min_turns = 2;
  std::size_t max_turns = 6;
  std::uint64_t seed = 42;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::configuration, what); };
    auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (vocabulary.empty()) bad("synthetic vocabulary is empty");
    std::set<std::string> names(vocabulary.begin(), vocabulary.end());
    if (names.size() != vocabulary.size()) bad("synthetic vocabulary has duplicates");
    for (const auto& n : vocabulary) {
      if (!is_action_object(n)) bad("synthetic intent '" + n + "' is not in action-object form");
    }
    for (const auto& [name, p] : persistence) {
      if (!names.count(name)) bad("persistence names unknown intent '" + name + "'");
      if (!in_unit(p)) bad("persistence probability outside [0,1]");
    }
    for (const auto& t : transitions) {
      if (!names.count(t.from) || !names.count(t.to)) bad("transition names an unknown intent");
      if (!in_unit(t.probability)) bad("transition probability outside [0,1]");
    }
    if (!in_unit(spawn)) bad("spawn probability outside [0,1]");
    if (min_turns < 2) bad("min_turns must be >= 2");
    if (max_turns < min_turns) bad("max_turns must be >= min_turns");
    if (dialogues == 0) bad("dialogue count must be positive");
  }
};

/// "find-hotel" -> "i want to find a hotel"
inline std::string synth_utterance(const std::set<std::string>& intents) {
  if (intents.empty()) return "nothing else for now";
  std::string out;
  for (const auto& name : intents) {
    const auto hyphen = name.find('-');
    if (!out.empty()) out += " and ";
    out += "i want to " + name.substr(0, hyphen) + " a " + name.substr(hyphen + 1);
  }
  return out;
}

/// Persistence first, then transitions out of the previous turn, then spawn.
inline std::vector<Dialogue> generate_corpus(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed, "synth");
  std::vector<std::string> vocab = spec.vocabulary;
  std::sort(vocab.begin(), vocab.end());

  std::vector<Dialogue> out;
  out.reserve(spec.dialogues);
  for (std::size_t n = 0; n < spec.dialogues; ++n) {
    char id[32];
    std::snprintf(id, sizeof id, "synth-%05zu", n);
    Dialogue d{id, {}};
    const auto span = spec.max_turns - spec.min_turns + 1;
    const auto turns = spec.min_turns + static_cast<std::size_t>(rng.index(span));

    std::set<std::string> current{vocab[static_cast<std::size_t>(rng.index(vocab.size()))]};
    for (std::size_t t = 0; t < turns; ++t) {
      if (t > 0) {
        std::set<std::string> next;
        for (const auto& name : current) {
          auto it = spec.persistence.find(name);
          if (it != spec.persistence.end() && rng.bernoulli(it->second)) next.insert(name);
        }
        for (const auto& tr : spec.transitions) {
          if (current.count(tr.from) && rng.bernoulli(tr.probability)) next.insert(tr.to);
        }
        if (rng.bernoulli(spec.spawn)) next.insert(vocab[static_cast<std::size_t>(rng.index(vocab.size()))]);
        current = std::move(next);
      }
      d.turns.push_back({Speaker::user, synth_utterance(current), {current.begin(), current.end()}});
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace tbn
