#include "aot/weak_ot.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "aot/process.hpp"
#include "aot/rational.hpp"

namespace aot {

namespace {

void require_pair(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  if (mu.dim() != nu.dim())
    throw std::invalid_argument("weak transport: marginals live in different dimensions");
  if (!(p >= 1.0) || !std::isfinite(p))
    throw std::invalid_argument("weak transport: p must be finite and >= 1");
}

// barycenter mass sent by row i: b_i = sum_j plan(i,j) * y_j
std::vector<Vec> row_barycenters(const Mat& plan, const std::vector<Vec>& atoms_y,
                                 std::size_t dim) {
  std::vector<Vec> b(plan.rows(), Vec(dim, 0.0));
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      double w = plan(i, j);
      if (w == 0.0) continue;
      for (std::size_t k = 0; k < dim; ++k) b[i][k] += w * atoms_y[j][k];
    }
  return b;
}

double pow_p(double base, double p) {
  if (p == 1.0) return base;
  if (p == 2.0) return base * base;
  return std::pow(base, p);
}

}  // namespace

Objective weak_objective(DiscreteMeasure mu, DiscreteMeasure nu, double p) {
  require_pair(mu, nu, p);
  return [mu = std::move(mu), nu = std::move(nu), p](const Mat& plan) {
    const std::size_t d = mu.dim();
    auto b = row_barycenters(plan, nu.atoms, d);
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      double w = mu.weights[i];
      double norm2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        double r = w * mu.atoms[i][k] - b[i][k];
        norm2 += r * r;
      }
      total += std::pow(w, 1.0 - p) * pow_p(std::sqrt(norm2), p);
    }
    return total;
  };
}

Gradient weak_gradient(DiscreteMeasure mu, DiscreteMeasure nu, double p) {
  require_pair(mu, nu, p);
  return [mu = std::move(mu), nu = std::move(nu), p](const Mat& plan) {
    const std::size_t d = mu.dim();
    auto b = row_barycenters(plan, nu.atoms, d);
    Mat g(plan.rows(), plan.cols());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      double w = mu.weights[i];
      Vec r(d);
      double norm2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        r[k] = w * mu.atoms[i][k] - b[i][k];
        norm2 += r[k] * r[k];
      }
      double norm = std::sqrt(norm2);
      if (norm <= 1e-15) continue;  // zero subgradient at the kink
      double coef = std::pow(w, 1.0 - p) * p * std::pow(norm, p - 2.0);
      for (std::size_t j = 0; j < nu.size(); ++j) {
        double dr = 0.0;  // d/dplan(i,j) acts on b_i with weight y_j
        for (std::size_t k = 0; k < d; ++k) dr += r[k] * nu.atoms[j][k];
        g(i, j) = -coef * dr;
      }
    }
    return g;
  };
}

WeakOTReport v_dist(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                    const FrankWolfeOptions& opts) {
  require_pair(mu, nu, p);
  Objective f = weak_objective(mu, nu, p);
  Gradient grad = weak_gradient(mu, nu, p);

  FrankWolfeOptions run = opts;
  if (p == 2.0 && run.line_search == LineSearch::Golden && !run.exact_step) {
    // the objective is quadratic along any segment: minimize exactly
    run.line_search = LineSearch::ClosedForm;
    run.exact_step = [mu, nu](const Mat& point, const Mat& direction) {
      const std::size_t d = mu.dim();
      auto b = row_barycenters(point, nu.atoms, d);
      auto db = row_barycenters(direction, nu.atoms, d);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i) {
        double inv_w = 1.0 / mu.weights[i];
        for (std::size_t k = 0; k < d; ++k) {
          double r = mu.weights[i] * mu.atoms[i][k] - b[i][k];
          num += inv_w * r * db[i][k];
          den += inv_w * db[i][k] * db[i][k];
        }
      }
      if (den <= 0.0) return num < 0.0 ? 0.0 : 1e30;
      return -num / den;
    };
  }

  FrankWolfeResult res = frank_wolfe(f, grad, mu.weights, nu.weights, run);

  WeakOTReport report;
  report.gap = res.gap;
  report.iterations = res.iterations;
  report.value = res.value <= 0.0 ? 0.0 : std::pow(res.value, 1.0 / p);

  auto b = row_barycenters(res.plan, nu.atoms, mu.dim());
  std::vector<Vec> means(mu.size(), Vec(mu.dim(), 0.0));
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t k = 0; k < mu.dim(); ++k) means[i][k] = b[i][k] / mu.weights[i];
  report.pushforward = make_measure(std::move(means), mu.weights);

  report.coupling = {share(measure_tree(mu)), share(measure_tree(nu)), std::move(res.plan),
                     false, false};
  return report;
}

double v_sym(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
             const FrankWolfeOptions& opts) {
  return std::max(v_dist(mu, nu, p, opts).value, v_dist(nu, mu, p, opts).value);
}

bool martingale_coupling_exists(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                double tol, ArithmeticMode mode) {
  require_pair(mu, nu, 1.0);
  const std::size_t m = mu.size(), n = nu.size(), d = mu.dim();

  // variables: plan entries, then violation slacks s+ and s- per (atom, axis);
  // minimize the total slack subject to marginals and
  //   sum_j plan(i,j) (y_j - x_i) + s+_(i,k) - s-_(i,k) = 0.
  const std::size_t nplan = m * n, nscols = m * d;
  LinearProgram lp;
  lp.objective.assign(nplan + 2 * nscols, 0.0);
  for (std::size_t s = 0; s < 2 * nscols; ++s) lp.objective[nplan + s] = 1.0;

  const std::size_t rows = m + n + m * d;
  lp.eq_lhs = Mat(rows, nplan + 2 * nscols);
  lp.eq_rhs.assign(rows, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) lp.eq_lhs(i, i * n + j) = 1.0;
    lp.eq_rhs[i] = mu.weights[i];
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) lp.eq_lhs(m + j, i * n + j) = 1.0;
    lp.eq_rhs[m + j] = nu.weights[j];
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t row = m + n + i * d + k;
      for (std::size_t j = 0; j < n; ++j)
        lp.eq_lhs(row, i * n + j) = nu.atoms[j][k] - mu.atoms[i][k];
      lp.eq_lhs(row, nplan + i * d + k) = 1.0;
      lp.eq_lhs(row, nplan + nscols + i * d + k) = -1.0;
    }

  LpSolution sol = solve_lp(lp, mode);
  if (sol.status != LpStatus::Optimal)
    throw LpError("martingale feasibility: slack LP unsolved (internal)");
  return sol.value <= tol;
}

ConvexProjectionReport convex_projection_check(const DiscreteMeasure& mu,
                                               const DiscreteMeasure& target, double p,
                                               const FrankWolfeOptions& opts) {
  WeakOTReport v = v_dist(mu, target, p, opts);

  ConvexProjectionReport rep;
  rep.projection = v.pushforward;
  rep.v_value = v.value;
  // Any feasible coupling's conditional means are a martingale projection, so
  // this holds regardless of optimality; it certifies the construction.
  rep.convex_order_ok = martingale_coupling_exists(rep.projection, target, 1e-7);
  rep.w_value = wasserstein(mu, rep.projection, p);
  rep.tolerance = std::max(v.gap, 0.0) + 1e-9;
  rep.projection_ok =
      std::abs(pow_p(rep.w_value, p) - pow_p(rep.v_value, p)) <= rep.tolerance;
  return rep;
}

}  // namespace aot
