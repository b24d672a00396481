// Couplings of two process trees: plans over leaf pairs, the linear
// equalities that make a plan causal, conditionally independent products,
// and causal gluing.
#pragma once

#include <memory>
#include <vector>

#include "aot/lp.hpp"
#include "aot/process.hpp"

namespace aot {

using TreePtr = std::shared_ptr<const ProcessTree>;

inline TreePtr share(ProcessTree x) { return std::make_shared<const ProcessTree>(std::move(x)); }

/// Transport plan between the leaves of two trees (rows: left leaves, columns:
/// right leaves, both in leaves() order).  The flags record which checks the
/// producer has actually verified; they are advisory, not load-bearing.
struct Coupling {
  TreePtr left;
  TreePtr right;
  Mat plan;
  bool causal_verified = false;
  bool bicausal_verified = false;
};

Coupling product_coupling(TreePtr x, TreePtr y);
Coupling identity_coupling(TreePtr x);

enum class CausalDirection { LeftToRight, RightToLeft };
enum class CouplingMode { Marginal, Causal, Bicausal };

/// One linear equality sum(coeff * plan(left_leaf, right_leaf)) = 0 over the
/// plan entries; leaf indices refer to positions in leaves() order.
struct CouplingConstraint {
  struct Term {
    int left_leaf;
    int right_leaf;
    double coeff;
  };
  std::vector<Term> terms;
};

/// Equalities making a plan causal left-to-right (reverse swaps the roles):
/// for every split time t, x-leaf w with time-t ancestor u, and time-t y-node
/// v, the mass pi(w, cyl(v)) * P(u) must equal pi(cyl(u), cyl(v)) * P(w).
/// Identically satisfied cases are skipped: times where the conditioning side
/// has a single node, and (w, u) pairs where cyl(u) = {w}.
std::vector<CouplingConstraint> causal_constraints(
    const ProcessTree& x, const ProcessTree& y,
    CausalDirection direction = CausalDirection::LeftToRight);

/// Largest absolute violation among the checks of `mode`: marginal errors and
/// negativity always, plus the causality equalities for Causal/Bicausal.
double coupling_violation(const Coupling& pi, CouplingMode mode);

bool check_coupling(const Coupling& pi, CouplingMode mode, double tol = 1e-8);

/// LP over the coupling polytope of (x, y) at the given mode, minimizing
/// sum(cost(i,j) * plan(i,j)); variables are plan entries in row-major order.
LinearProgram coupling_lp(const ProcessTree& x, const ProcessTree& y, const Mat& cost,
                          CouplingMode mode);

/// Joint law over leaf triples of three trees.
struct ThreeWayMeasure {
  TreePtr x;
  TreePtr y;
  TreePtr z;
  std::vector<double> weights;  // indexed (i * ny + j) * nz + k

  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return weights[(i * y->leaves().size() + j) * z->leaves().size() + k];
  }
};

/// Conditionally independent product: w(i,j,k) = gamma(i,j) * eta(j,k) / P(j)
/// where P(j) is the probability of the j-th shared-tree leaf.  Given the
/// middle coordinate, the outer coordinates are independent, and both pairwise
/// projections recover the inputs.
ThreeWayMeasure ci_product(const Coupling& gamma, const Coupling& eta);

Coupling project_xy(const ThreeWayMeasure& w);
Coupling project_yz(const ThreeWayMeasure& w);
Coupling project_xz(const ThreeWayMeasure& w);

/// Composition of causal couplings through the shared middle tree: the (X,Z)
/// projection of ci_product.  Inputs must pass check_coupling causal; the
/// result is causal again and is returned with its flag set accordingly.
Coupling glue_causal(const Coupling& gamma, const Coupling& eta);

}  // namespace aot
