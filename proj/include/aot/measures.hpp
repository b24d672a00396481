#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "aot/lp.hpp"
#include "aot/matrix.hpp"

namespace aot {

/// Finitely supported probability measure on R^d. Atoms are flat coordinate
/// vectors; weights are strictly positive and sum to 1 within 1e-12.
struct DiscreteMeasure {
  std::vector<Vec> atoms;
  Vec weights;

  std::size_t size() const { return atoms.size(); }
  std::size_t dim() const { return atoms.empty() ? 0 : atoms.front().size(); }
  Vec mean() const;
};

/// Validates and returns the measure (atom count >= 1, equal dimensions,
/// weights positive and normalized).
DiscreteMeasure make_measure(std::vector<Vec> atoms, Vec weights);

/// Merge atoms within euclidean distance tol (weights added, first atom in the
/// canonical order is kept as representative) and sort lexicographically.
/// Idempotent for any fixed tol.
DiscreteMeasure canonicalize(const DiscreteMeasure& mu, double tol = 1e-9);

/// Ground cost for transport between flat atoms.
///  Euclidean:  d(x,y) = |x-y|_2, raised to p.
///  PerTimeSum: atoms are paths of `block`-dimensional values;
///              cost = sum_t |x_t - y_t|_2^p  (the path metric used by the
///              process distances).
struct GroundMetric {
  enum Kind { Euclidean, PerTimeSum } kind = Euclidean;
  std::size_t block = 1;  // coordinates per time step for PerTimeSum
};

double ground_cost_pow(const Vec& a, const Vec& b, double p, const GroundMetric& g);

/// p-Wasserstein distance; returns the p-th root of the optimal total cost.
double wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                   const GroundMetric& g = {},
                   ArithmeticMode mode = default_arithmetic_mode());

/// Same solve, exposing the plan between the (uncanonicalized) atom lists.
TransportResult wasserstein_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                                 const GroundMetric& g = {},
                                 ArithmeticMode mode = default_arithmetic_mode());

// ---------------------------------------------------------------------------
// Nested laws: measures whose atoms are tuples mixing points and laws.

class NestedLaw;
using NestedLawPtr = std::shared_ptr<const NestedLaw>;
using NestedComponent = std::variant<Vec, NestedLawPtr>;
using NestedAtom = std::vector<NestedComponent>;

class NestedLaw {
 public:
  NestedLaw() = default;
  /// Validates: nonempty, uniform atom shape (same component count, matching
  /// kinds and depths slot by slot), weights positive summing to 1.
  NestedLaw(std::vector<NestedAtom> atoms, Vec weights);

  const std::vector<NestedAtom>& atoms() const { return atoms_; }
  const Vec& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  /// 0 for pure-point atoms; 1 + max component depth otherwise.
  int depth() const { return depth_; }

 private:
  std::vector<NestedAtom> atoms_;
  Vec weights_;
  int depth_ = 0;
};

NestedLaw nested_from_measure(const DiscreteMeasure& mu);
NestedLawPtr nested_ptr(NestedLaw law);

/// Recursive Wasserstein-1 distance between equal-depth nested laws: atom
/// distance is the sum over tuple slots of euclidean distance for points and
/// the recursive distance for nested laws.
double nested_distance(const NestedLaw& a, const NestedLaw& b);

bool nested_equal(const NestedLaw& a, const NestedLaw& b, double tol = 1e-9);

/// Canonical form: components canonicalized recursively, atoms sorted by a
/// deterministic total order, atoms within tol (nested distance) merged.
NestedLaw canonicalize(const NestedLaw& law, double tol = 1e-9);

}  // namespace aot
