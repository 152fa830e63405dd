#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tbn/corpus.hpp"
#include "tbn/error.hpp"

namespace tbn {

enum class ProgressBucket : std::uint8_t { early = 0, mid = 1, late = 2 };

inline constexpr std::array<std::string_view, 3> kProgressNames = {"progress_early", "progress_mid",
                                                                   "progress_late"};
inline constexpr std::string_view kCurrentSuffix = "__t";
inline constexpr std::string_view kNextSuffix = "__t1";

inline const char* to_string(ProgressBucket b) {
  switch (b) {
    case ProgressBucket::early: return "early";
    case ProgressBucket::mid: return "mid";
    case ProgressBucket::late: return "late";
  }
  return "?";
}

inline ProgressBucket parse_progress(std::string_view s) {
  if (s == "early") return ProgressBucket::early;
  if (s == "mid") return ProgressBucket::mid;
  if (s == "late") return ProgressBucket::late;
  throw Error(ErrorKind::input, "unknown progress bucket '" + std::string(s) + "'");
}

/// Thirds of turn_index / max(turn_count - 1, 1); the last turn maps to 1.0.
inline ProgressBucket progress_bucket(long long turn_index, long long dialogue_turn_count) {
  if (dialogue_turn_count < 1 || turn_index < 0 || turn_index >= dialogue_turn_count) {
    throw Error(ErrorKind::bounds, "turn " + std::to_string(turn_index) + " outside dialogue of " +
                                       std::to_string(dialogue_turn_count) + " turns");
  }
  const long long denom = std::max(dialogue_turn_count - 1, 1LL);
  if (3 * turn_index < denom) return ProgressBucket::early;
  if (3 * turn_index < 2 * denom) return ProgressBucket::mid;
  return ProgressBucket::late;
}

inline std::string current_name(std::string_view intent) { return std::string(intent) + std::string(kCurrentSuffix); }
inline std::string next_name(std::string_view intent) { return std::string(intent) + std::string(kNextSuffix); }

/// Variable layout: K current copies, K next copies, then the three progress indicators.
inline std::vector<std::string> lagged_variable_names(const IntentVocabulary& vocab) {
  std::vector<std::string> names;
  names.reserve(2 * vocab.size() + 3);
  for (const auto& n : vocab.names()) names.push_back(current_name(n));
  for (const auto& n : vocab.names()) names.push_back(next_name(n));
  for (auto p : kProgressNames) names.emplace_back(p);
  return names;
}

struct LaggedDataset {
  std::size_t intent_count = 0;  // K
  std::vector<std::string> variable_names;
  std::vector<std::vector<std::uint8_t>> rows;
  std::vector<RowTag> row_tags;  // (dialogue_id, t) of the x_t side

  std::size_t variable_count() const noexcept { return variable_names.size(); }
  std::size_t size() const noexcept { return rows.size(); }

  std::size_t current_column(std::size_t intent) const { return intent; }
  std::size_t next_column(std::size_t intent) const { return intent_count + intent; }
  std::size_t progress_column(ProgressBucket b) const { return 2 * intent_count + static_cast<std::size_t>(b); }

  ProgressBucket progress(std::size_t row) const {
    const auto& r = rows.at(row);
    for (std::size_t b = 0; b < 3; ++b) {
      if (r[2 * intent_count + b]) return static_cast<ProgressBucket>(b);
    }
    throw Error(ErrorKind::schema, "lagged row without a progress indicator");
  }

  /// Intent names of vocabulary order recovered from the "__t" columns.
  std::vector<std::string> intent_names() const {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < intent_count; ++j) {
      const auto& v = variable_names[j];
      out.push_back(v.substr(0, v.size() - kCurrentSuffix.size()));
    }
    return out;
  }
};

inline LaggedDataset build_lagged(const TurnIntentMatrix& matrix, const IntentVocabulary& vocab) {
  if (matrix.cols != vocab.size()) throw Error(ErrorKind::schema, "matrix width differs from vocabulary size");
  LaggedDataset out;
  out.intent_count = vocab.size();
  out.variable_names = lagged_variable_names(vocab);

  // Group row indices by dialogue in order of first appearance.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto& id = matrix.row_tags[r].dialogue_id;
    auto [it, inserted] = groups.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(r);
  }

  const std::size_t k = vocab.size();
  for (const auto& id : order) {
    const auto& idx = groups[id];
    const auto n = static_cast<long long>(idx.size());
    for (std::size_t p = 0; p + 1 < idx.size(); ++p) {
      const auto& cur = matrix.entries[idx[p]];
      const auto& nxt = matrix.entries[idx[p + 1]];
      std::vector<std::uint8_t> row(2 * k + 3, 0);
      std::copy(cur.begin(), cur.end(), row.begin());
      std::copy(nxt.begin(), nxt.end(), row.begin() + static_cast<std::ptrdiff_t>(k));
      const auto bucket = progress_bucket(static_cast<long long>(p), n);
      row[2 * k + static_cast<std::size_t>(bucket)] = 1;
      out.rows.push_back(std::move(row));
      out.row_tags.push_back({id, matrix.row_tags[idx[p]].turn});
    }
  }
  return out;
}

/// CSV with the variable header plus `__dialogue_id`, `__t` metadata columns.
inline void write_lagged_csv(std::ostream& out, const LaggedDataset& data) {
  for (const auto& name : data.variable_names) out << name << ',';
  out << "__dialogue_id,__t\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (auto v : data.rows[r]) out << static_cast<int>(v) << ',';
    const auto& id = data.row_tags[r].dialogue_id;
    if (id.find_first_of(",\"\n") != std::string::npos) {
      out << '"';
      for (char c : id) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << id;
    }
    out << ',' << data.row_tags[r].turn << '\n';
  }
}

}  // namespace tbn
