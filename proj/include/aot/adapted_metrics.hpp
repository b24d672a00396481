// Distances between filtered processes: plain Wasserstein on path laws,
// causal and symmetrized-causal Wasserstein, adapted Wasserstein (nested
// backward recursion plus an independent LP oracle), and the optimal
// stopping value.  Every recursion carries p-th-power costs; the single
// p-th root is taken at the end.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "aot/couplings.hpp"
#include "aot/process.hpp"
#include "aot/rational.hpp"

namespace aot {

enum class DistanceMethod { Dp, Lp };

struct DistanceReport {
  double value = 0.0;
  Coupling coupling;
  DistanceMethod method = DistanceMethod::Lp;
  std::int64_t iterations = 0;   // simplex iterations, summed over subproblems
  std::size_t subproblems = 1;   // transport solves behind the value
};

/// Wasserstein distance between the path laws under the per-time path cost
/// sum_t |x_t - y_t|^p; the coupling lives on leaf pairs.
DistanceReport w_dist(const ProcessTree& x, const ProcessTree& y, double p,
                      ArithmeticMode mode = default_arithmetic_mode());

/// Causal Wasserstein: the same objective minimized over couplings causal
/// from x to y.  Asymmetric; cw_dist(x, y) and cw_dist(y, x) both make sense.
DistanceReport cw_dist(const ProcessTree& x, const ProcessTree& y, double p,
                       ArithmeticMode mode = default_arithmetic_mode());

/// max(cw_dist(x, y), cw_dist(y, x)).
double scw_dist(const ProcessTree& x, const ProcessTree& y, double p,
                ArithmeticMode mode = default_arithmetic_mode());

/// Adapted Wasserstein via the backward recursion over node pairs:
/// V_N = 0 on leaf pairs, and at a time-t pair (u, v)
///   V_t(u, v) = OT(children(u), children(v))
/// with cost |value(u') - value(v')|^p + V_{t+1}(u', v').  The value is the
/// p-th root of V_0(root, root); the returned coupling composes the nodewise
/// plans top-down and is bicausal.
DistanceReport aw_dist(const ProcessTree& x, const ProcessTree& y, double p,
                       ArithmeticMode mode = default_arithmetic_mode());

/// Independent reference for aw_dist: one LP over the bicausal polytope
/// (marginals plus both causality directions).  Exponential in tree size, so
/// the leaf-pair count is capped.
DistanceReport aw_dist_lp_oracle(const ProcessTree& x, const ProcessTree& y, double p,
                                 std::size_t max_pairs = 400,
                                 ArithmeticMode mode = default_arithmetic_mode());

/// Smallest expected cost over stopping times with values in {1..N}:
/// Snell recursion S = cost at the horizon, S = min(cost, E[S(children)])
/// inside, plain expectation at the root.  `node_costs` holds c(t, x_{1:t})
/// per node id (the root entry is ignored); non-anticipativity is structural.
double optimal_stopping_value(const ProcessTree& x, const Vec& node_costs);

/// Same recursion in exact arithmetic.
Rational optimal_stopping_value_exact(const ProcessTree& x,
                                      const std::vector<Rational>& node_costs);

/// Evaluate a closed-form cost c(t, x_{1:t}) on every non-root node; the
/// second argument receives the flattened value history.
Vec node_costs_from_function(const ProcessTree& x,
                             const std::function<double(int, const Vec&)>& cost);

}  // namespace aot
