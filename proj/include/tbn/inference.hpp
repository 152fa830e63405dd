#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tbn/error.hpp"
#include "tbn/parameters.hpp"
#include "tbn/structure.hpp"
#include "tbn/temporal.hpp"

namespace tbn {

/// Dense non-negative table over the joint states of `scope`, last variable fastest.
struct Factor {
  std::vector<std::size_t> scope;
  std::vector<std::size_t> cardinalities;
  std::vector<double> values;

  std::vector<std::size_t> strides() const {
    std::vector<std::size_t> s(scope.size(), 1);
    for (std::size_t i = scope.size(); i-- > 1;) s[i - 1] = s[i] * cardinalities[i];
    return s;
  }

  bool contains(std::size_t var) const { return std::find(scope.begin(), scope.end(), var) != scope.end(); }
};

inline Factor factor_from_table(const ConditionalTable& t) {
  Factor f;
  f.scope = t.parents;
  f.scope.push_back(t.node);
  for (std::size_t p = 0; p < t.parents.size(); ++p) f.cardinalities.push_back(t.cardinalities[p + 1]);
  f.cardinalities.push_back(t.node_cardinality());
  f.values = t.probabilities;
  return f;
}

inline Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  out.scope = a.scope;
  out.cardinalities = a.cardinalities;
  for (std::size_t i = 0; i < b.scope.size(); ++i) {
    if (!a.contains(b.scope[i])) {
      out.scope.push_back(b.scope[i]);
      out.cardinalities.push_back(b.cardinalities[i]);
    }
  }
  std::size_t size = 1;
  for (auto c : out.cardinalities) size *= c;
  out.values.assign(size, 0.0);

  // Stride of each output variable inside a and b (0 when absent).
  const auto sa = a.strides(), sb = b.strides();
  const std::size_t n = out.scope.size();
  std::vector<std::size_t> in_a(n, 0), in_b(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < a.scope.size(); ++j) {
      if (a.scope[j] == out.scope[i]) in_a[i] = sa[j];
    }
    for (std::size_t j = 0; j < b.scope.size(); ++j) {
      if (b.scope[j] == out.scope[i]) in_b[i] = sb[j];
    }
  }
  std::vector<std::size_t> state(n, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t idx = 0; idx < size; ++idx) {
    out.values[idx] = a.values[ia] * b.values[ib];
    for (std::size_t i = n; i-- > 0;) {
      if (++state[i] < out.cardinalities[i]) {
        ia += in_a[i];
        ib += in_b[i];
        break;
      }
      ia -= in_a[i] * (out.cardinalities[i] - 1);
      ib -= in_b[i] * (out.cardinalities[i] - 1);
      state[i] = 0;
    }
  }
  return out;
}

inline Factor sum_out(const Factor& f, std::size_t var) {
  const auto pos = static_cast<std::size_t>(std::find(f.scope.begin(), f.scope.end(), var) - f.scope.begin());
  if (pos == f.scope.size()) return f;
  const auto strides = f.strides();
  const std::size_t card = f.cardinalities[pos];
  const std::size_t inner = strides[pos];
  const std::size_t outer = f.values.size() / (inner * card);

  Factor out;
  out.scope = f.scope;
  out.cardinalities = f.cardinalities;
  out.scope.erase(out.scope.begin() + static_cast<std::ptrdiff_t>(pos));
  out.cardinalities.erase(out.cardinalities.begin() + static_cast<std::ptrdiff_t>(pos));
  out.values.assign(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t s = 0; s < card; ++s) {
      for (std::size_t i = 0; i < inner; ++i) out.values[o * inner + i] += f.values[(o * card + s) * inner + i];
    }
  }
  return out;
}

/// Restricts `var` to `state` and drops it from the scope.
inline Factor reduce(const Factor& f, std::size_t var, std::size_t state) {
  const auto pos = static_cast<std::size_t>(std::find(f.scope.begin(), f.scope.end(), var) - f.scope.begin());
  if (pos == f.scope.size()) return f;
  const auto strides = f.strides();
  const std::size_t card = f.cardinalities[pos];
  const std::size_t inner = strides[pos];
  const std::size_t outer = f.values.size() / (inner * card);

  Factor out;
  out.scope = f.scope;
  out.cardinalities = f.cardinalities;
  out.scope.erase(out.scope.begin() + static_cast<std::ptrdiff_t>(pos));
  out.cardinalities.erase(out.cardinalities.begin() + static_cast<std::ptrdiff_t>(pos));
  out.values.resize(outer * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) out.values[o * inner + i] = f.values[(o * card + state) * inner + i];
  }
  return out;
}

struct Evidence {
  std::map<std::string, std::size_t> assignments;

  Evidence& set(const std::string& name, std::size_t state) {
    assignments[name] = state;
    return *this;
  }

  /// One-hot progress indicators for the turn's bucket.
  Evidence& set_progress(ProgressBucket bucket) {
    for (std::size_t b = 0; b < kProgressNames.size(); ++b) {
      assignments[std::string(kProgressNames[b])] = b == static_cast<std::size_t>(bucket) ? 1 : 0;
    }
    return *this;
  }
};

inline bool has_progress_variables(const DiscreteBayesNet& bn) {
  const auto& names = bn.variable_names();
  return std::all_of(kProgressNames.begin(), kProgressNames.end(), [&](std::string_view p) {
    return std::find(names.begin(), names.end(), p) != names.end();
  });
}

using IndexedEvidence = std::vector<std::pair<std::size_t, std::size_t>>;

inline IndexedEvidence index_evidence(const DiscreteBayesNet& bn, const Evidence& evidence) {
  IndexedEvidence out;
  for (const auto& [name, state] : evidence.assignments) {
    const auto v = bn.index(name);
    if (state >= bn.cardinality(v)) {
      throw Error(ErrorKind::input, "state " + std::to_string(state) + " out of range for '" + name + "'");
    }
    out.emplace_back(v, state);
  }
  return out;
}

/// Greedy min-fill over the interaction graph of `factors`; ties by variable name.
inline std::vector<std::size_t> min_fill_order(const std::vector<Factor>& factors, std::set<std::size_t> to_eliminate,
                                               const std::vector<std::string>& names) {
  std::map<std::size_t, std::set<std::size_t>> adj;
  for (auto v : to_eliminate) adj[v];
  for (const auto& f : factors) {
    for (auto a : f.scope) {
      for (auto b : f.scope) {
        if (a != b) adj[a].insert(b);
      }
    }
  }
  std::vector<std::size_t> order;
  while (!to_eliminate.empty()) {
    std::size_t best = *to_eliminate.begin();
    std::size_t best_fill = SIZE_MAX;
    for (auto v : to_eliminate) {
      std::vector<std::size_t> nb(adj[v].begin(), adj[v].end());
      std::size_t fill = 0;
      for (std::size_t i = 0; i < nb.size(); ++i) {
        for (std::size_t j = i + 1; j < nb.size(); ++j) {
          if (!adj[nb[i]].count(nb[j])) ++fill;
        }
      }
      if (fill < best_fill || (fill == best_fill && names[v] < names[best])) {
        best = v;
        best_fill = fill;
      }
    }
    const std::vector<std::size_t> nb(adj[best].begin(), adj[best].end());
    for (auto a : nb) {
      for (auto b : nb) {
        if (a != b) adj[a].insert(b);
      }
      adj[a].erase(best);
    }
    adj.erase(best);
    to_eliminate.erase(best);
    order.push_back(best);
  }
  return order;
}

/// Exact P(query | evidence) by variable elimination. When `order` is given it
/// must list exactly the variables to sum out; otherwise min-fill is used.
/// Variables that are not ancestors of the query or the evidence are dropped first.
inline std::vector<double> eliminate(const DiscreteBayesNet& bn, std::size_t query, const IndexedEvidence& evidence,
                                     const std::vector<std::size_t>* order = nullptr) {
  const std::size_t d = bn.size();
  if (query >= d) throw Error(ErrorKind::input, "query variable out of range");
  std::vector<int> observed(d, -1);
  for (const auto& [v, s] : evidence) {
    if (v == query) throw Error(ErrorKind::input, "query '" + bn.variable_names()[v] + "' is also evidence");
    observed[v] = static_cast<int>(s);
  }

  std::vector<bool> relevant(d, false);
  std::vector<std::size_t> stack{query};
  for (const auto& e : evidence) stack.push_back(e.first);
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (relevant[v]) continue;
    relevant[v] = true;
    for (auto p : bn.tables[v].parents) stack.push_back(p);
  }

  std::vector<Factor> factors;
  std::set<std::size_t> hidden;
  for (std::size_t v = 0; v < d; ++v) {
    if (!relevant[v]) continue;
    Factor f = factor_from_table(bn.tables[v]);
    for (auto u : std::vector<std::size_t>(f.scope)) {
      if (observed[u] >= 0) f = reduce(f, u, static_cast<std::size_t>(observed[u]));
    }
    factors.push_back(std::move(f));
    if (v != query && observed[v] < 0) hidden.insert(v);
  }

  std::vector<std::size_t> elimination;
  if (order) {
    for (auto v : *order) {
      if (hidden.count(v)) elimination.push_back(v);
    }
    if (elimination.size() != hidden.size()) {
      throw Error(ErrorKind::input, "elimination order does not cover every hidden variable");
    }
  } else {
    elimination = min_fill_order(factors, hidden, bn.variable_names());
  }

  for (auto v : elimination) {
    std::optional<Factor> product;
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (f.contains(v)) {
        product = product ? multiply(*product, f) : std::move(f);
      } else {
        rest.push_back(std::move(f));
      }
    }
    if (product) rest.push_back(sum_out(*product, v));
    factors = std::move(rest);
  }

  Factor result{{}, {}, {1.0}};
  for (const auto& f : factors) result = multiply(result, f);
  if (result.scope.size() != 1 || result.scope[0] != query) {
    throw Error(ErrorKind::contract, "elimination left an unexpected scope");
  }
  double total = 0.0;
  for (double x : result.values) total += x;
  if (!(total > 0.0)) throw Error(ErrorKind::inconsistent_evidence, "evidence has zero probability");
  for (double& x : result.values) x /= total;
  return result.values;
}

inline std::vector<double> eliminate(const DiscreteBayesNet& bn, const std::string& query, const Evidence& evidence) {
  return eliminate(bn, bn.index(query), index_evidence(bn, evidence));
}

/// P(intent__t1 = 1 | evidence) for every intent of the net, keyed by intent name.
struct NextIntentPosterior {
  std::map<std::string, double> probabilities;

  /// Intents by descending probability, ties by name.
  std::vector<std::pair<std::string, double>> sorted() const {
    std::vector<std::pair<std::string, double>> out(probabilities.begin(), probabilities.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
  }
};

inline NextIntentPosterior posterior_next_intents(const DiscreteBayesNet& bn, const Evidence& evidence) {
  for (const auto& [name, state] : evidence.assignments) {
    if (slice_of(name) == Slice::next) {
      throw Error(ErrorKind::evidence_scope, "evidence on next-turn variable '" + name + "'");
    }
  }
  const auto indexed = index_evidence(bn, evidence);
  NextIntentPosterior out;
  for (std::size_t v = 0; v < bn.size(); ++v) {
    const auto& name = bn.variable_names()[v];
    if (slice_of(name) != Slice::next) continue;
    const auto dist = eliminate(bn, v, indexed);
    out.probabilities[name.substr(0, name.size() - kNextSuffix.size())] = dist.at(1);
  }
  return out;
}

}  // namespace tbn
