#include "aot/adapted_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "aot/lp.hpp"
#include "aot/measures.hpp"

namespace aot {

namespace {

void require_compatible(const ProcessTree& x, const ProcessTree& y, double p) {
  if (x.horizon() != y.horizon() || x.dim() != y.dim())
    throw std::invalid_argument("process distance: trees must share horizon and dimension");
  if (!(p >= 1.0) || !std::isfinite(p))
    throw std::invalid_argument("process distance: p must be finite and >= 1");
}

double proot(double v, double p) {
  v = std::max(v, 0.0);  // clip solver noise before the root
  if (p == 1.0) return v;
  if (p == 2.0) return std::sqrt(v);
  return std::pow(v, 1.0 / p);
}

Mat leaf_cost_matrix(const ProcessTree& x, const ProcessTree& y, double p) {
  GroundMetric g{GroundMetric::PerTimeSum, static_cast<std::size_t>(x.dim())};
  const auto& lx = x.leaves();
  const auto& ly = y.leaves();
  Mat c(lx.size(), ly.size());
  for (std::size_t i = 0; i < lx.size(); ++i)
    for (std::size_t j = 0; j < ly.size(); ++j)
      c(i, j) = ground_cost_pow(x.path_values(lx[i]), y.path_values(ly[j]), p, g);
  return c;
}

Vec leaf_weights(const ProcessTree& x) {
  Vec w;
  w.reserve(x.leaves().size());
  for (int l : x.leaves()) w.push_back(x.absolute_prob(l));
  return w;
}

Mat plan_from_primal(const Vec& primal, std::size_t nx, std::size_t ny) {
  Mat plan(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      double v = primal[i * ny + j];
      plan(i, j) = (v < 0 && v > -1e-12) ? 0.0 : v;
    }
  return plan;
}

DistanceReport causal_lp_report(const ProcessTree& x, const ProcessTree& y, double p,
                                CouplingMode lp_mode, ArithmeticMode mode) {
  Mat cost = leaf_cost_matrix(x, y, p);
  LinearProgram lp = coupling_lp(x, y, cost, lp_mode);
  LpSolution sol = solve_lp(lp, mode);
  if (sol.status != LpStatus::Optimal)
    throw LpError("process distance: coupling LP unsolved (internal)");

  DistanceReport report;
  report.method = DistanceMethod::Lp;
  report.iterations = sol.iterations;
  report.subproblems = 1;
  report.value = proot(sol.value, p);
  report.coupling = {share(x), share(y),
                     plan_from_primal(sol.primal, x.leaves().size(), y.leaves().size()),
                     false, false};
  report.coupling.causal_verified = check_coupling(report.coupling, CouplingMode::Causal);
  if (lp_mode == CouplingMode::Bicausal)
    report.coupling.bicausal_verified = check_coupling(report.coupling, CouplingMode::Bicausal);
  return report;
}

}  // namespace

DistanceReport w_dist(const ProcessTree& x, const ProcessTree& y, double p,
                      ArithmeticMode mode) {
  require_compatible(x, y, p);
  Mat cost = leaf_cost_matrix(x, y, p);
  TransportResult res = solve_transport(cost, leaf_weights(x), leaf_weights(y), mode);
  DistanceReport report;
  report.method = DistanceMethod::Lp;
  report.iterations = res.iterations;
  report.subproblems = 1;
  report.value = proot(res.value, p);
  report.coupling = {share(x), share(y), std::move(res.plan), false, false};
  return report;
}

DistanceReport cw_dist(const ProcessTree& x, const ProcessTree& y, double p,
                       ArithmeticMode mode) {
  require_compatible(x, y, p);
  return causal_lp_report(x, y, p, CouplingMode::Causal, mode);
}

double scw_dist(const ProcessTree& x, const ProcessTree& y, double p, ArithmeticMode mode) {
  return std::max(cw_dist(x, y, p, mode).value, cw_dist(y, x, p, mode).value);
}

DistanceReport aw_dist(const ProcessTree& x, const ProcessTree& y, double p,
                       ArithmeticMode mode) {
  require_compatible(x, y, p);
  const int n = x.horizon();
  const GroundMetric step{GroundMetric::Euclidean, 1};

  // rank of a node within its time slice
  auto ranks = [](const ProcessTree& t) {
    std::vector<int> r(t.size(), -1);
    for (int time = 0; time <= t.horizon(); ++time) {
      const auto& ids = t.at_time(time);
      for (std::size_t k = 0; k < ids.size(); ++k) r[static_cast<std::size_t>(ids[k])] =
          static_cast<int>(k);
    }
    return r;
  };
  const std::vector<int> rx = ranks(x), ry = ranks(y);

  DistanceReport report;
  report.method = DistanceMethod::Dp;
  report.iterations = 0;
  report.subproblems = 0;

  // backward sweep: values and conditional child plans per time-t node pair
  std::vector<Vec> value(static_cast<std::size_t>(n) + 1);
  std::vector<std::vector<Mat>> plans(static_cast<std::size_t>(n));
  value[static_cast<std::size_t>(n)].assign(
      x.at_time(n).size() * y.at_time(n).size(), 0.0);
  for (int t = n - 1; t >= 0; --t) {
    const auto& xs = x.at_time(t);
    const auto& ys = y.at_time(t);
    const std::size_t wy = ys.size();
    value[static_cast<std::size_t>(t)].assign(xs.size() * wy, 0.0);
    plans[static_cast<std::size_t>(t)].assign(xs.size() * wy, Mat());
    const std::size_t wy_next = y.at_time(t + 1).size();
    for (std::size_t a = 0; a < xs.size(); ++a) {
      const auto& cu = x.node(xs[a]).children;
      for (std::size_t b = 0; b < wy; ++b) {
        const auto& cv = y.node(ys[b]).children;
        Mat cost(cu.size(), cv.size());
        Vec mu(cu.size()), nu(cv.size());
        for (std::size_t i = 0; i < cu.size(); ++i) {
          mu[i] = x.node(cu[i]).prob;
          for (std::size_t j = 0; j < cv.size(); ++j) {
            cost(i, j) =
                ground_cost_pow(x.node(cu[i]).value, y.node(cv[j]).value, p, step) +
                value[static_cast<std::size_t>(t) + 1]
                     [static_cast<std::size_t>(rx[static_cast<std::size_t>(cu[i])]) * wy_next +
                      static_cast<std::size_t>(ry[static_cast<std::size_t>(cv[j])])];
          }
        }
        for (std::size_t j = 0; j < cv.size(); ++j) nu[j] = y.node(cv[j]).prob;
        TransportResult res = solve_transport(cost, mu, nu, mode);
        value[static_cast<std::size_t>(t)][a * wy + b] = res.value;
        plans[static_cast<std::size_t>(t)][a * wy + b] = std::move(res.plan);
        report.iterations += res.iterations;
        ++report.subproblems;
      }
    }
  }

  report.value = proot(value[0][0], p);

  // compose the coupling: push mass down through the conditional plans
  std::vector<Vec> mass(static_cast<std::size_t>(n) + 1);
  mass[0].assign(1, 1.0);
  for (int t = 0; t < n; ++t) {
    const auto& xs = x.at_time(t);
    const auto& ys = y.at_time(t);
    const std::size_t wy = ys.size();
    const std::size_t wy_next = y.at_time(t + 1).size();
    mass[static_cast<std::size_t>(t) + 1].assign(
        x.at_time(t + 1).size() * wy_next, 0.0);
    for (std::size_t a = 0; a < xs.size(); ++a) {
      const auto& cu = x.node(xs[a]).children;
      for (std::size_t b = 0; b < wy; ++b) {
        double m = mass[static_cast<std::size_t>(t)][a * wy + b];
        if (m <= 0.0) continue;
        const auto& cv = y.node(ys[b]).children;
        const Mat& q = plans[static_cast<std::size_t>(t)][a * wy + b];
        for (std::size_t i = 0; i < cu.size(); ++i)
          for (std::size_t j = 0; j < cv.size(); ++j)
            mass[static_cast<std::size_t>(t) + 1]
                [static_cast<std::size_t>(rx[static_cast<std::size_t>(cu[i])]) * wy_next +
                 static_cast<std::size_t>(ry[static_cast<std::size_t>(cv[j])])] +=
                m * q(i, j);
      }
    }
  }

  const std::size_t nx = x.leaves().size(), ny = y.leaves().size();
  Mat plan(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      plan(i, j) = mass[static_cast<std::size_t>(n)][i * ny + j];
  report.coupling = {share(x), share(y), std::move(plan), false, false};
  report.coupling.bicausal_verified = check_coupling(report.coupling, CouplingMode::Bicausal);
  report.coupling.causal_verified = report.coupling.bicausal_verified ||
                                    check_coupling(report.coupling, CouplingMode::Causal);
  return report;
}

DistanceReport aw_dist_lp_oracle(const ProcessTree& x, const ProcessTree& y, double p,
                                 std::size_t max_pairs, ArithmeticMode mode) {
  require_compatible(x, y, p);
  if (x.leaves().size() * y.leaves().size() > max_pairs)
    throw std::invalid_argument("aw_dist_lp_oracle: leaf-pair count exceeds the cap");
  return causal_lp_report(x, y, p, CouplingMode::Bicausal, mode);
}

namespace {

template <class T>
T snell_value(const ProcessTree& x, const std::vector<T>& costs) {
  if (costs.size() != x.size())
    throw std::invalid_argument("optimal stopping: need one cost entry per node");
  std::vector<T> s(x.size(), T(0));
  for (int t = x.horizon(); t >= 1; --t) {
    for (int id : x.at_time(t)) {
      const TreeNode& node = x.node(id);
      T v = costs[static_cast<std::size_t>(id)];
      if (t < x.horizon()) {
        T cont(0);
        for (int c : node.children) cont += T(x.node(c).prob) * s[static_cast<std::size_t>(c)];
        v = std::min(v, cont);
      }
      s[static_cast<std::size_t>(id)] = v;
    }
  }
  T root(0);
  for (int c : x.node(ProcessTree::root_id).children)
    root += T(x.node(c).prob) * s[static_cast<std::size_t>(c)];
  return root;
}

}  // namespace

double optimal_stopping_value(const ProcessTree& x, const Vec& node_costs) {
  for (std::size_t id = 1; id < node_costs.size(); ++id)
    if (!std::isfinite(node_costs[id]))
      throw std::invalid_argument("optimal stopping: cost entries must be finite");
  return snell_value<double>(x, node_costs);
}

Rational optimal_stopping_value_exact(const ProcessTree& x,
                                      const std::vector<Rational>& node_costs) {
  return snell_value<Rational>(x, node_costs);
}

Vec node_costs_from_function(const ProcessTree& x,
                             const std::function<double(int, const Vec&)>& cost) {
  Vec out(x.size(), 0.0);
  for (std::size_t id = 1; id < x.size(); ++id) {
    const TreeNode& node = x.node(static_cast<int>(id));
    out[id] = cost(node.time, x.history(static_cast<int>(id)));
  }
  return out;
}

}  // namespace aot
