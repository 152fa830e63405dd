#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "tbn/error.hpp"
#include "tbn/random.hpp"
#include "tbn/structure.hpp"
#include "tbn/temporal.hpp"

namespace tbn {

/// P(node | parents) as a dense table. Rows enumerate parent assignments in
/// the listed parent order with the last parent varying fastest; each row
/// holds the node's states in order.
struct ConditionalTable {
  std::size_t node = 0;
  std::vector<std::size_t> parents;
  std::vector<std::size_t> cardinalities;  // node first, then parents
  std::vector<double> probabilities;

  std::size_t node_cardinality() const { return cardinalities.front(); }

  std::size_t parent_configurations() const {
    return std::accumulate(cardinalities.begin() + 1, cardinalities.end(), std::size_t{1}, std::multiplies<>());
  }

  /// Row index of a full assignment indexed by variable id.
  template <typename Assignment>
  std::size_t configuration(const Assignment& values) const {
    std::size_t config = 0;
    for (std::size_t p = 0; p < parents.size(); ++p) {
      config = config * cardinalities[p + 1] + static_cast<std::size_t>(values[parents[p]]);
    }
    return config;
  }

  double probability(std::size_t config, std::size_t state) const {
    return probabilities[config * node_cardinality() + state];
  }
};

struct DiscreteBayesNet {
  WeightedDag dag;
  std::vector<ConditionalTable> tables;  // indexed by variable id
  double ess = 1.0;

  const std::vector<std::string>& variable_names() const { return dag.variable_names; }
  std::size_t size() const { return dag.size(); }
  std::size_t cardinality(std::size_t v) const { return tables[v].node_cardinality(); }
  std::size_t index(const std::string& name) const { return dag.index(name); }

  /// Parents-before-children order, ties by variable id.
  std::vector<std::size_t> topological_order() const {
    const std::size_t d = size();
    std::vector<std::size_t> indegree(d, 0);
    for (const auto& t : tables) indegree[t.node] = t.parents.size();
    std::vector<std::vector<std::size_t>> children(d);
    for (const auto& t : tables) {
      for (auto p : t.parents) children[p].push_back(t.node);
    }
    std::vector<std::size_t> order;
    std::vector<bool> done(d, false);
    while (order.size() < d) {
      bool progressed = false;
      for (std::size_t v = 0; v < d; ++v) {
        if (done[v] || indegree[v] != 0) continue;
        done[v] = true;
        order.push_back(v);
        for (auto c : children[v]) --indegree[c];
        progressed = true;
        break;
      }
      if (!progressed) throw Error(ErrorKind::schema, "network structure has a cycle");
    }
    return order;
  }
};

/// BDeu posterior mean: (N_ijk + ess/(q r)) / (N_ij + ess/q).
inline DiscreteBayesNet fit_cpds(const WeightedDag& dag, const LaggedDataset& data, double ess) {
  if (!(ess > 0.0)) throw Error(ErrorKind::configuration, "equivalent sample size must be positive");
  if (dag.variable_names != data.variable_names) {
    throw Error(ErrorKind::schema, "dag variables do not match dataset variables");
  }
  if (!is_acyclic(dag.edges, dag.size())) throw Error(ErrorKind::schema, "pruned edge set is cyclic");

  DiscreteBayesNet bn;
  bn.dag = dag;
  bn.ess = ess;
  const std::size_t d = dag.size();
  constexpr std::size_t r = 2;
  for (std::size_t v = 0; v < d; ++v) {
    ConditionalTable t;
    t.node = v;
    t.parents = dag.parents(v);
    t.cardinalities.assign(t.parents.size() + 1, r);
    const std::size_t q = t.parent_configurations();

    std::vector<double> counts(q * r, 0.0);
    for (const auto& row : data.rows) {
      counts[t.configuration(row) * r + row[v]] += 1.0;
    }
    t.probabilities.resize(q * r);
    const double cell_prior = ess / static_cast<double>(q * r);
    const double row_prior = ess / static_cast<double>(q);
    for (std::size_t c = 0; c < q; ++c) {
      double n = 0.0;
      for (std::size_t s = 0; s < r; ++s) n += counts[c * r + s];
      for (std::size_t s = 0; s < r; ++s) {
        t.probabilities[c * r + s] = (counts[c * r + s] + cell_prior) / (n + row_prior);
      }
    }
    bn.tables.push_back(std::move(t));
  }
  return bn;
}

/// Hand-assembled net; edges are derived from the table parent lists.
inline DiscreteBayesNet make_bayes_net(std::vector<std::string> variable_names, std::vector<ConditionalTable> tables,
                                       double ess = 1.0) {
  const std::size_t d = variable_names.size();
  if (tables.size() != d) throw Error(ErrorKind::schema, "need exactly one table per variable");
  std::sort(tables.begin(), tables.end(), [](const auto& a, const auto& b) { return a.node < b.node; });

  DiscreteBayesNet bn;
  bn.ess = ess;
  bn.dag.variable_names = std::move(variable_names);
  bn.dag.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t v = 0; v < d; ++v) {
    auto& t = tables[v];
    if (t.node != v) throw Error(ErrorKind::schema, "tables must cover every variable once");
    if (t.cardinalities.size() != t.parents.size() + 1) throw Error(ErrorKind::schema, "cardinality list mismatch");
    if (t.probabilities.size() != t.parent_configurations() * t.node_cardinality()) {
      throw Error(ErrorKind::schema, "table size mismatch for '" + bn.dag.variable_names[v] + "'");
    }
    for (auto p : t.parents) {
      if (p >= d || p == v) throw Error(ErrorKind::schema, "bad parent index");
      bn.dag.edges.push_back({p, v, 1.0});
      bn.dag.weights(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(v)) = 1.0;
    }
  }
  if (!is_acyclic(bn.dag.edges, d)) throw Error(ErrorKind::schema, "network structure has a cycle");
  for (std::size_t v = 0; v < d; ++v) {
    for (std::size_t p = 0; p < tables[v].parents.size(); ++p) {
      if (tables[v].cardinalities[p + 1] != tables[tables[v].parents[p]].node_cardinality()) {
        throw Error(ErrorKind::schema, "parent cardinality disagrees with the parent's own table");
      }
    }
  }
  bn.tables = std::move(tables);
  return bn;
}

inline double joint_log_likelihood(const DiscreteBayesNet& bn, const LaggedDataset& data) {
  if (bn.variable_names() != data.variable_names) throw Error(ErrorKind::schema, "net/data variable mismatch");
  double ll = 0.0;
  for (const auto& row : data.rows) {
    for (const auto& t : bn.tables) ll += std::log(t.probability(t.configuration(row), row[t.node]));
  }
  return ll;
}

/// Ancestral sampling of `count` rows; progress columns are sampled like any other node.
inline LaggedDataset sample(const DiscreteBayesNet& bn, std::size_t count, std::uint64_t seed) {
  LaggedDataset out;
  out.variable_names = bn.variable_names();
  std::size_t k = 0;
  for (const auto& n : out.variable_names) {
    if (n.size() > kCurrentSuffix.size() && n.ends_with(kCurrentSuffix)) ++k;
  }
  out.intent_count = k;
  const auto order = bn.topological_order();
  Rng rng(seed, "sample");
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::uint8_t> row(bn.size(), 0);
    for (auto v : order) {
      const auto& t = bn.tables[v];
      const auto config = t.configuration(row);
      double u = rng.uniform();
      std::size_t s = 0;
      for (; s + 1 < t.node_cardinality(); ++s) {
        u -= t.probability(config, s);
        if (u < 0.0) break;
      }
      row[v] = static_cast<std::uint8_t>(s);
    }
    out.rows.push_back(std::move(row));
    out.row_tags.push_back({"sample", i});
  }
  return out;
}

}  // namespace tbn
