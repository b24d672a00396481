#include "aot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace aot {

Vec DiscreteMeasure::mean() const {
  Vec m(dim(), 0.0);
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += weights[i] * atoms[i][k];
  return m;
}

DiscreteMeasure make_measure(std::vector<Vec> atoms, Vec weights) {
  if (atoms.empty()) throw std::invalid_argument("measure: needs at least one atom");
  if (atoms.size() != weights.size())
    throw std::invalid_argument("measure: atom/weight count mismatch");
  const std::size_t d = atoms.front().size();
  double sum = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != d) throw std::invalid_argument("measure: mixed atom dimensions");
    for (double x : atoms[i])
      if (!std::isfinite(x)) throw std::invalid_argument("measure: non-finite atom");
    if (!(weights[i] > 0) || !std::isfinite(weights[i]))
      throw std::invalid_argument("measure: weights must be positive");
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("measure: weights must sum to 1");
  return DiscreteMeasure{std::move(atoms), std::move(weights)};
}

DiscreteMeasure canonicalize(const DiscreteMeasure& mu, double tol) {
  if (tol < 0) throw std::invalid_argument("canonicalize: negative tolerance");
  std::vector<std::size_t> order(mu.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return lex_less(mu.atoms[a], mu.atoms[b]); });

  DiscreteMeasure out;
  for (std::size_t idx : order) {
    if (!out.atoms.empty() && euclidean(out.atoms.back(), mu.atoms[idx]) <= tol) {
      out.weights.back() += mu.weights[idx];
    } else {
      out.atoms.push_back(mu.atoms[idx]);
      out.weights.push_back(mu.weights[idx]);
    }
  }
  return out;
}

namespace {

double proot(double v, double p) {
  if (v <= 0) return 0;
  if (p == 1.0) return v;
  if (p == 2.0) return std::sqrt(v);
  return std::pow(v, 1.0 / p);
}

double pow_p(double base, double p) {
  if (p == 1.0) return base;
  if (p == 2.0) return base * base;
  return std::pow(base, p);
}

}  // namespace

double ground_cost_pow(const Vec& a, const Vec& b, double p, const GroundMetric& g) {
  if (a.size() != b.size()) throw std::invalid_argument("ground cost: dimension mismatch");
  if (g.kind == GroundMetric::Euclidean) return pow_p(euclidean(a, b), p);
  if (g.block == 0 || a.size() % g.block != 0)
    throw std::invalid_argument("ground cost: atom size not a multiple of the time block");
  double total = 0;
  for (std::size_t off = 0; off < a.size(); off += g.block) {
    double ss = 0;
    for (std::size_t k = 0; k < g.block; ++k) {
      double d = a[off + k] - b[off + k];
      ss += d * d;
    }
    total += pow_p(std::sqrt(ss), p);
  }
  return total;
}

TransportResult wasserstein_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                                 const GroundMetric& g, ArithmeticMode mode) {
  if (p < 1) throw std::invalid_argument("wasserstein: p must be >= 1");
  if (mu.dim() != nu.dim()) throw std::invalid_argument("wasserstein: dimension mismatch");
  Mat cost(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      cost(i, j) = ground_cost_pow(mu.atoms[i], nu.atoms[j], p, g);
  return solve_transport(cost, mu.weights, nu.weights, mode);
}

double wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                   const GroundMetric& g, ArithmeticMode mode) {
  return proot(wasserstein_plan(mu, nu, p, g, mode).value, p);
}

// ---------------------------------------------------------------------------
// Nested laws

namespace {

int component_depth(const NestedComponent& c) {
  if (std::holds_alternative<Vec>(c)) return -1;  // point slots carry no depth
  return std::get<NestedLawPtr>(c)->depth();
}

void require_same_shape(const NestedAtom& a, const NestedAtom& b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": tuple width varies");
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (a[s].index() != b[s].index())
      throw std::invalid_argument(std::string(what) + ": tuple slot kinds vary");
    if (component_depth(a[s]) != component_depth(b[s]))
      throw std::invalid_argument(std::string(what) + ": tuple slot depths vary");
  }
}

}  // namespace

NestedLaw::NestedLaw(std::vector<NestedAtom> atoms, Vec weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty()) throw std::invalid_argument("nested law: needs at least one atom");
  if (atoms_.size() != weights_.size())
    throw std::invalid_argument("nested law: atom/weight count mismatch");
  double sum = 0;
  for (double w : weights_) {
    if (!(w > 0) || !std::isfinite(w))
      throw std::invalid_argument("nested law: weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("nested law: weights must sum to 1");
  for (const auto& atom : atoms_) {
    if (atom.empty()) throw std::invalid_argument("nested law: empty atom tuple");
    for (const auto& comp : atom)
      if (std::holds_alternative<NestedLawPtr>(comp) && !std::get<NestedLawPtr>(comp))
        throw std::invalid_argument("nested law: null component");
    require_same_shape(atoms_.front(), atom, "nested law");
  }
  depth_ = 0;
  for (const auto& comp : atoms_.front()) {
    int cd = component_depth(comp);
    if (cd >= 0) depth_ = std::max(depth_, cd + 1);
  }
}

NestedLaw nested_from_measure(const DiscreteMeasure& mu) {
  std::vector<NestedAtom> atoms;
  atoms.reserve(mu.size());
  for (const auto& a : mu.atoms) atoms.push_back(NestedAtom{NestedComponent(a)});
  return NestedLaw(std::move(atoms), mu.weights);
}

NestedLawPtr nested_ptr(NestedLaw law) { return std::make_shared<const NestedLaw>(std::move(law)); }

namespace {

using DistCache = std::map<std::pair<const NestedLaw*, const NestedLaw*>, double>;

double nested_distance_impl(const NestedLaw& a, const NestedLaw& b, DistCache& cache);

double atom_distance(const NestedAtom& a, const NestedAtom& b, DistCache& cache) {
  double total = 0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (std::holds_alternative<Vec>(a[s])) {
      const Vec& va = std::get<Vec>(a[s]);
      const Vec& vb = std::get<Vec>(b[s]);
      if (va.size() != vb.size())
        throw std::invalid_argument("nested distance: point dimension mismatch");
      total += euclidean(va, vb);
    } else {
      total += nested_distance_impl(*std::get<NestedLawPtr>(a[s]),
                                    *std::get<NestedLawPtr>(b[s]), cache);
    }
  }
  return total;
}

double nested_distance_impl(const NestedLaw& a, const NestedLaw& b, DistCache& cache) {
  auto key = std::make_pair(&a, &b);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  require_same_shape(a.atoms().front(), b.atoms().front(), "nested distance");
  Mat cost(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      cost(i, j) = atom_distance(a.atoms()[i], b.atoms()[j], cache);
  double v = solve_transport(cost, a.weights(), b.weights(), ArithmeticMode::FloatingPoint).value;
  cache[key] = v;
  return v;
}

// deterministic total order for canonical sorting; exact comparisons only
bool law_less(const NestedLaw& a, const NestedLaw& b);

// -1 / 0 / +1 three-way for components
int component_cmp(const NestedComponent& a, const NestedComponent& b) {
  if (std::holds_alternative<Vec>(a)) {
    const Vec& va = std::get<Vec>(a);
    const Vec& vb = std::get<Vec>(b);
    if (lex_less(va, vb)) return -1;
    if (lex_less(vb, va)) return 1;
    return 0;
  }
  const NestedLaw& la = *std::get<NestedLawPtr>(a);
  const NestedLaw& lb = *std::get<NestedLawPtr>(b);
  if (law_less(la, lb)) return -1;
  if (law_less(lb, la)) return 1;
  return 0;
}

int atom_cmp(const NestedAtom& a, const NestedAtom& b) {
  for (std::size_t s = 0; s < a.size(); ++s) {
    int c = component_cmp(a[s], b[s]);
    if (c != 0) return c;
  }
  return 0;
}

bool law_less(const NestedLaw& a, const NestedLaw& b) {
  if (a.depth() != b.depth()) return a.depth() < b.depth();
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    int c = atom_cmp(a.atoms()[i], b.atoms()[i]);
    if (c != 0) return c < 0;
    if (a.weights()[i] != b.weights()[i]) return a.weights()[i] < b.weights()[i];
  }
  return false;
}

NestedComponent canonical_component(const NestedComponent& c, double tol) {
  if (std::holds_alternative<Vec>(c)) return c;
  return NestedComponent(nested_ptr(canonicalize(*std::get<NestedLawPtr>(c), tol)));
}

}  // namespace

double nested_distance(const NestedLaw& a, const NestedLaw& b) {
  if (a.depth() != b.depth()) throw std::invalid_argument("nested distance: depth mismatch");
  DistCache cache;
  return nested_distance_impl(a, b, cache);
}

bool nested_equal(const NestedLaw& a, const NestedLaw& b, double tol) {
  return nested_distance(a, b) <= tol;
}

NestedLaw canonicalize(const NestedLaw& law, double tol) {
  std::vector<NestedAtom> atoms;
  atoms.reserve(law.size());
  for (const auto& atom : law.atoms()) {
    NestedAtom out;
    out.reserve(atom.size());
    for (const auto& comp : atom) out.push_back(canonical_component(comp, tol));
    atoms.push_back(std::move(out));
  }
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return atom_cmp(atoms[x], atoms[y]) < 0; });

  DistCache cache;
  std::vector<NestedAtom> merged;
  Vec weights;
  for (std::size_t idx : order) {
    if (!merged.empty() && atom_distance(merged.back(), atoms[idx], cache) <= tol) {
      weights.back() += law.weights()[idx];
    } else {
      merged.push_back(atoms[idx]);
      weights.push_back(law.weights()[idx]);
    }
  }
  return NestedLaw(std::move(merged), std::move(weights));
}

}  // namespace aot
