#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace tbn {

struct BoundedLbfgsOptions {
  int memory = 10;
  int max_iterations = 15000;
  int max_line_search = 60;
  double pg_tolerance = 1e-5;      // on the infinity norm of the projected gradient
  double f_rel_tolerance = 2.2e-9;  // relative objective decrease
};

struct BoundedLbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Objective callback: returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Projected limited-memory quasi-Newton for min f(x) subject to x >= 0.
///
/// Variables sitting on the bound with a gradient pointing outward are frozen
/// for the step; the two-loop direction is computed on the rest and the line
/// search runs along the projected path with an Armijo test.
inline BoundedLbfgsResult minimize_nonnegative(const Objective& f, Eigen::VectorXd x0,
                                               const BoundedLbfgsOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  BoundedLbfgsResult res;
  Eigen::VectorXd x = x0.cwiseMax(0.0);
  Eigen::VectorXd g(n);
  double fx = f(x, g);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  auto projected_gradient_norm = [&](const Eigen::VectorXd& xv, const Eigen::VectorXd& gv) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pg = xv[i] <= 0.0 ? std::min(gv[i], 0.0) : gv[i];
      m = std::max(m, std::abs(pg));
    }
    return m;
  };

  Eigen::VectorXd g_new(n), x_new(n), d(n), q(n);
  std::vector<double> alpha_hist;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    res.iterations = iter;
    if (projected_gradient_norm(x, g) < opt.pg_tolerance) {
      res.converged = true;
      break;
    }

    std::vector<bool> active(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = x[i] <= 0.0 && g[i] > 0.0;
    auto mask_active = [&](Eigen::VectorXd& v) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (active[static_cast<std::size_t>(i)]) v[i] = 0.0;
      }
    };

    bool took_step = false;
    for (int attempt = 0; attempt < 2 && !took_step; ++attempt) {
      q = g;
      mask_active(q);
      const std::size_t m = s_hist.size();
      alpha_hist.assign(m, 0.0);
      for (std::size_t k = m; k-- > 0;) {
        alpha_hist[k] = rho_hist[k] * s_hist[k].dot(q);
        q -= alpha_hist[k] * y_hist[k];
      }
      if (m > 0) {
        q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      } else {
        const double gn = q.norm();
        if (gn > 0.0) q *= std::min(1.0, 1.0 / gn);
      }
      for (std::size_t k = 0; k < m; ++k) {
        const double beta = rho_hist[k] * y_hist[k].dot(q);
        q += (alpha_hist[k] - beta) * s_hist[k];
      }
      d = -q;
      mask_active(d);
      if (g.dot(d) >= 0.0) {
        d = -g;
        mask_active(d);
        const double gn = d.norm();
        if (s_hist.empty() && gn > 0.0) d *= std::min(1.0, 1.0 / gn);
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
      }

      double step = 1.0;
      for (int ls = 0; ls < opt.max_line_search; ++ls) {
        x_new = (x + step * d).cwiseMax(0.0);
        const double f_new = f(x_new, g_new);
        const double decrease = g.dot(x_new - x);
        if (std::isfinite(f_new) && f_new <= fx + 1e-4 * decrease) {
          Eigen::VectorXd s = x_new - x;
          Eigen::VectorXd y = g_new - g;
          const double sy = s.dot(y);
          if (sy > 1e-10 * y.squaredNorm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opt.memory) {
              s_hist.pop_front();
              y_hist.pop_front();
              rho_hist.pop_front();
            }
          }
          const double rel = (fx - f_new) / std::max({std::abs(fx), std::abs(f_new), 1.0});
          x = x_new;
          g = g_new;
          fx = f_new;
          took_step = true;
          if (rel <= opt.f_rel_tolerance) {
            res.converged = true;
            res.x = x;
            res.value = fx;
            res.iterations = iter + 1;
            return res;
          }
          break;
        }
        step *= 0.5;
      }
      if (!took_step) {
        if (s_hist.empty()) break;
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
      }
    }
    if (!took_step) {
      // No descent along the projected steepest direction: treat as stationary.
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace tbn
