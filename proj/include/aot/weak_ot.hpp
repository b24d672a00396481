// Barycentric weak transport: the directed functional V_p penalizing the
// conditional-mean displacement, its symmetrization, martingale-coupling
// feasibility (convex order), and the projection identity relating V_p to a
// plain Wasserstein distance onto the convex-order cone.
#pragma once

#include <cstdint>

#include "aot/couplings.hpp"
#include "aot/lp.hpp"
#include "aot/measures.hpp"

namespace aot {

struct WeakOTReport {
  double value = 0.0;
  Coupling coupling;           // over one-period trees carrying the marginals
  DiscreteMeasure pushforward; // conditional mean of Y per atom of the first
                               // marginal; weights equal the first marginal's
  double gap = 0.0;            // Frank-Wolfe duality gap at the final iterate
  std::int64_t iterations = 0;
};

/// Directed weak transport value
///   V_p(mu, nu)^p = min over couplings of sum_i mu_i^(1-p) |mu_i x_i - b_i|^p,
/// b_i the nu-mass barycenter row i sends, minimized by Frank-Wolfe (away
/// steps; closed-form line search when p = 2).  The reported value is the
/// p-th root; the pushforward collects the conditional means b_i / mu_i.
WeakOTReport v_dist(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                    const FrankWolfeOptions& opts = {});

/// Symmetrized value: p-th root of max(V_p(mu,nu)^p, V_p(nu,mu)^p), i.e. the
/// larger of the two directed values.
double v_sym(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
             const FrankWolfeOptions& opts = {});

/// True iff some coupling of (mu, nu) has conditional Y-mean x at every atom
/// x of mu (equivalently mu is dominated by nu in convex order).  Decided by
/// minimizing the total constraint violation over the coupling polytope, so
/// `tol` bounds the accepted violation; rational mode decides exactly.
bool martingale_coupling_exists(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                double tol = 1e-9,
                                ArithmeticMode mode = default_arithmetic_mode());

/// The projection identity behind V_p: the optimizer's pushforward Q* must be
/// dominated by the target in convex order, and W_p(mu, Q*) must reproduce
/// V_p(mu, target) up to the duality gap.
struct ConvexProjectionReport {
  DiscreteMeasure projection;   // Q*
  bool convex_order_ok = false; // martingale coupling Q* -> target exists
  bool projection_ok = false;   // |W_p(mu,Q*)^p - V_p^p| within tolerance
  double v_value = 0.0;
  double w_value = 0.0;
  double tolerance = 0.0;       // duality gap plus rounding slack
};

ConvexProjectionReport convex_projection_check(const DiscreteMeasure& mu,
                                               const DiscreteMeasure& target, double p,
                                               const FrankWolfeOptions& opts = {});

/// The Frank-Wolfe objective and gradient for V_p at fixed marginals, exposed
/// for direct verification.  At p < 2 kinks (zero residual) the gradient picks
/// the zero subgradient.
Objective weak_objective(DiscreteMeasure mu, DiscreteMeasure nu, double p);
Gradient weak_gradient(DiscreteMeasure mu, DiscreteMeasure nu, double p);

}  // namespace aot
