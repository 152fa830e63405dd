#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tbn/error.hpp"
#include "tbn/lbfgs.hpp"
#include "tbn/temporal.hpp"

namespace tbn {

// ---------------------------------------------------------------------------
// Acyclicity

/// exp(A) by scaling and squaring around a truncated Taylor series.
inline Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::shape, "matrix exponential needs a square matrix");
  const Eigen::Index d = a.rows();
  if (d == 0) return a;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);

  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);
  for (int k = 1; k <= 30; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-18 * result.cwiseAbs().maxCoeff()) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

/// h(W) = tr(exp(W o W)) - d; zero exactly when the support of W is acyclic.
inline double acyclicity(const Eigen::MatrixXd& w) {
  if (w.rows() != w.cols()) throw Error(ErrorKind::shape, "acyclicity needs a square matrix");
  const Eigen::MatrixXd e = matrix_exponential(w.cwiseProduct(w));
  return e.trace() - static_cast<double>(w.rows());
}

/// h(W) together with its gradient exp(W o W)^T o 2W.
inline double acyclicity(const Eigen::MatrixXd& w, Eigen::MatrixXd& gradient) {
  if (w.rows() != w.cols()) throw Error(ErrorKind::shape, "acyclicity needs a square matrix");
  const Eigen::MatrixXd e = matrix_exponential(w.cwiseProduct(w));
  gradient = e.transpose().cwiseProduct(2.0 * w);
  return e.trace() - static_cast<double>(w.rows());
}

// ---------------------------------------------------------------------------
// Tabu mask

enum class Slice : std::uint8_t { current, next, progress };

inline Slice slice_of(const std::string& name) {
  auto ends_with = [&](std::string_view suffix) {
    return name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (std::find(kProgressNames.begin(), kProgressNames.end(), name) != kProgressNames.end()) return Slice::progress;
  if (ends_with(kNextSuffix)) return Slice::next;
  if (ends_with(kCurrentSuffix)) return Slice::current;
  throw Error(ErrorKind::naming, "variable '" + name + "' carries no temporal suffix");
}

struct TabuMask {
  std::vector<std::string> variable_names;
  std::vector<std::uint8_t> forbidden;  // row-major d x d, 1 = source->target forbidden

  std::size_t size() const noexcept { return variable_names.size(); }
  bool is_forbidden(std::size_t source, std::size_t target) const { return forbidden[source * size() + target] != 0; }
  std::size_t forbidden_count() const {
    return static_cast<std::size_t>(std::count(forbidden.begin(), forbidden.end(), std::uint8_t{1}));
  }
};

/// Forbids self-loops, next->current back-steps, and every edge into a progress indicator.
inline TabuMask build_tabu_mask(const std::vector<std::string>& variable_names) {
  const std::size_t d = variable_names.size();
  std::vector<Slice> slices;
  slices.reserve(d);
  for (const auto& n : variable_names) slices.push_back(slice_of(n));

  TabuMask mask{variable_names, std::vector<std::uint8_t>(d * d, 0)};
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const bool forbid = i == j || (slices[i] == Slice::next && slices[j] == Slice::current) ||
                          slices[j] == Slice::progress;
      mask.forbidden[i * d + j] = forbid ? 1 : 0;
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Weighted DAG

struct NotearsConfig {
  double lambda1 = 0.01;
  double h_tolerance = 1e-8;
  int max_outer_iterations = 100;
  double penalty_init = 1.0;
  double penalty_multiplier = 10.0;
  double penalty_max = 1e16;
  double prune_threshold = 0.5;
  std::uint64_t seed = 42;  // unused by the solver

  void validate() const {
    if (!(lambda1 >= 0.0)) throw Error(ErrorKind::configuration, "lambda1 must be >= 0");
    if (!(h_tolerance > 0.0)) throw Error(ErrorKind::configuration, "h_tolerance must be > 0");
    if (!(penalty_multiplier > 1.0)) throw Error(ErrorKind::configuration, "penalty_multiplier must be > 1");
    if (!(penalty_init > 0.0)) throw Error(ErrorKind::configuration, "penalty_init must be > 0");
    if (max_outer_iterations < 1) throw Error(ErrorKind::configuration, "max_outer_iterations must be >= 1");
    if (!(prune_threshold >= 0.0)) throw Error(ErrorKind::configuration, "prune_threshold must be >= 0");
  }
};

struct Edge {
  std::size_t source = 0;
  std::size_t target = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

struct WeightedDag {
  std::vector<std::string> variable_names;
  Eigen::MatrixXd weights;
  std::vector<Edge> edges;
  double prune_threshold = 0.0;

  std::size_t size() const noexcept { return variable_names.size(); }

  std::vector<std::size_t> parents(std::size_t node) const {
    std::vector<std::size_t> out;
    for (const auto& e : edges) {
      if (e.target == node) out.push_back(e.source);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t index(const std::string& name) const {
    auto it = std::find(variable_names.begin(), variable_names.end(), name);
    if (it == variable_names.end()) throw Error(ErrorKind::schema, "unknown variable '" + name + "'");
    return static_cast<std::size_t>(it - variable_names.begin());
  }
};

/// Edges with |w| > threshold, strongest first; ties by (source, target) name.
inline std::vector<Edge> prune(const Eigen::MatrixXd& w, double threshold, const std::vector<std::string>& names) {
  if (w.rows() != w.cols() || static_cast<std::size_t>(w.rows()) != names.size()) {
    throw Error(ErrorKind::shape, "weight matrix does not match variable names");
  }
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (std::abs(w(i, j)) > threshold) {
        edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), w(i, j)});
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    const double wa = std::abs(a.weight), wb = std::abs(b.weight);
    if (wa != wb) return wa > wb;
    if (names[a.source] != names[b.source]) return names[a.source] < names[b.source];
    return names[a.target] < names[b.target];
  });
  return edges;
}

inline std::size_t backward_edge_count(const std::vector<Edge>& edges, const std::vector<std::string>& names) {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [&](const Edge& e) {
    return slice_of(names[e.source]) == Slice::next && slice_of(names[e.target]) == Slice::current;
  }));
}

inline std::size_t backward_edge_count(const WeightedDag& dag) {
  return backward_edge_count(dag.edges, dag.variable_names);
}

/// Kahn's algorithm over the edge list.
inline bool is_acyclic(const std::vector<Edge>& edges, std::size_t node_count) {
  std::vector<std::size_t> indegree(node_count, 0);
  std::vector<std::vector<std::size_t>> children(node_count);
  for (const auto& e : edges) {
    ++indegree[e.target];
    children[e.source].push_back(e.target);
  }
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < node_count; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const auto v = ready.back();
    ready.pop_back();
    ++visited;
    for (auto c : children[v]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  return visited == node_count;
}

// ---------------------------------------------------------------------------
// NOTEARS

namespace detail {

inline Eigen::MatrixXd design_matrix(const LaggedDataset& data) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.variable_count()));
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t c = 0; c < data.variable_count(); ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data.rows[r][c];
    }
  }
  return x;
}

}  // namespace detail

/// Least-squares NOTEARS with L1 penalty, solved by the augmented Lagrangian
/// method. Forbidden coordinates are not optimization variables at all, so
/// they stay exactly zero.
inline WeightedDag learn_structure(const LaggedDataset& data, const TabuMask& mask, const NotearsConfig& config) {
  config.validate();
  if (data.size() == 0) throw Error(ErrorKind::input, "structure learning needs at least one row");
  const std::size_t d = data.variable_count();
  if (mask.size() != d || mask.variable_names != data.variable_names) {
    throw Error(ErrorKind::shape, "tabu mask does not match the dataset variables");
  }

  const Eigen::MatrixXd x = detail::design_matrix(data);
  const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(data.size());
  const double cov_trace = cov.trace();

  std::vector<std::pair<Eigen::Index, Eigen::Index>> free;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!mask.is_forbidden(i, j)) free.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  const auto m = static_cast<Eigen::Index>(free.size());
  const auto dd = static_cast<Eigen::Index>(d);

  auto to_matrix = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(dd, dd);
    for (Eigen::Index k = 0; k < m; ++k) w(free[k].first, free[k].second) = v[k] - v[m + k];
    return w;
  };

  double rho = config.penalty_init;
  double alpha = 0.0;
  double h = std::numeric_limits<double>::infinity();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * m);

  auto objective = [&](const Eigen::VectorXd& vv, Eigen::VectorXd& grad) {
    const Eigen::MatrixXd w = to_matrix(vv);
    const Eigen::MatrixXd cw = cov * w;
    // 0.5 tr((I - W)^T C (I - W))
    const double loss = 0.5 * (cov_trace - 2.0 * cw.trace() + w.cwiseProduct(cw).sum());
    const Eigen::MatrixXd g_loss = cw - cov;
    Eigen::MatrixXd g_h;
    const double hv = acyclicity(w, g_h);
    const Eigen::MatrixXd g_smooth = g_loss + (rho * hv + alpha) * g_h;
    grad.resize(2 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double gs = g_smooth(free[k].first, free[k].second);
      grad[k] = gs + config.lambda1;
      grad[m + k] = -gs + config.lambda1;
    }
    return loss + 0.5 * rho * hv * hv + alpha * hv + config.lambda1 * vv.sum();
  };

  for (int outer = 0; outer < config.max_outer_iterations; ++outer) {
    Eigen::VectorXd v_new = v;
    double h_new = h;
    while (rho < config.penalty_max) {
      v_new = minimize_nonnegative(objective, v).x;
      h_new = acyclicity(to_matrix(v_new));
      if (h_new > 0.25 * h) {
        rho *= config.penalty_multiplier;
      } else {
        break;
      }
    }
    v = v_new;
    h = h_new;
    alpha += rho * h;
    if (h <= config.h_tolerance) break;
    if (rho >= config.penalty_max) break;
  }
  if (!(h <= config.h_tolerance)) {
    throw ConvergenceError("acyclicity residual " + std::to_string(h) + " above tolerance", h);
  }

  WeightedDag dag;
  dag.variable_names = data.variable_names;
  dag.weights = to_matrix(v);
  dag.prune_threshold = config.prune_threshold;
  dag.edges = prune(dag.weights, config.prune_threshold, dag.variable_names);
  return dag;
}

}  // namespace tbn
