#pragma once

#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include "tbn/tbn.hpp"

namespace tbn::fixtures {

inline Turn user(std::vector<std::string> intents, std::string utterance = "hello") {
  return {Speaker::user, std::move(utterance), std::move(intents)};
}

inline Turn system_turn(std::string utterance = "ok") { return {Speaker::system, std::move(utterance), {}}; }

/// Dialogue of USER turns only, one intent list per turn.
inline Dialogue dialogue(std::string id, std::initializer_list<std::vector<std::string>> turns) {
  Dialogue d{std::move(id), {}};
  for (const auto& t : turns) d.turns.push_back(user(t));
  return d;
}

/// Binary parentless table.
inline ConditionalTable root(std::size_t node, double p1) { return {node, {}, {2}, {1.0 - p1, p1}}; }

/// Binary node with one binary parent: P(1 | parent = 0), P(1 | parent = 1).
inline ConditionalTable child(std::size_t node, std::size_t parent, double p1_given0, double p1_given1) {
  return {node, {parent}, {2, 2}, {1.0 - p1_given0, p1_given0, 1.0 - p1_given1, p1_given1}};
}

}  // namespace tbn::fixtures
