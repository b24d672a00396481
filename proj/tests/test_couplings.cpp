#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "aot/couplings.hpp"
#include "aot/lp.hpp"
#include "aot/measures.hpp"
#include "aot/process.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aot;
namespace ts = testsupport;

namespace {

Mat path_cost_matrix(const ProcessTree& x, const ProcessTree& y, double p) {
  GroundMetric g{GroundMetric::PerTimeSum, static_cast<std::size_t>(x.dim())};
  const auto& lx = x.leaves();
  const auto& ly = y.leaves();
  Mat c(lx.size(), ly.size());
  for (std::size_t i = 0; i < lx.size(); ++i)
    for (std::size_t j = 0; j < ly.size(); ++j)
      c(i, j) = ground_cost_pow(x.path_values(lx[i]), y.path_values(ly[j]), p, g);
  return c;
}

// Vertex of the requested coupling polytope, found by minimizing a cost.
Coupling lp_coupling(TreePtr x, TreePtr y, const Mat& cost, CouplingMode mode) {
  LinearProgram lp = coupling_lp(*x, *y, cost, mode);
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  const std::size_t ny = y->leaves().size();
  Mat plan(x->leaves().size(), ny);
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < ny; ++j) plan(i, j) = sol.primal[i * ny + j];
  return {std::move(x), std::move(y), std::move(plan), false, false};
}

double plan_cost(const Coupling& pi, const Mat& cost) {
  double s = 0.0;
  for (std::size_t i = 0; i < cost.rows(); ++i)
    for (std::size_t j = 0; j < cost.cols(); ++j) s += pi.plan(i, j) * cost(i, j);
  return s;
}

double eval_terms(const CouplingConstraint& c, const Mat& plan) {
  double s = 0.0;
  for (const auto& t : c.terms)
    s += t.coeff *
         plan(static_cast<std::size_t>(t.left_leaf), static_cast<std::size_t>(t.right_leaf));
  return s;
}

// Direct conditional-independence residual: given the time-t atom u of the
// conditioning tree, its leaves must be independent of the other tree's time-t
// atoms, all masses taken from the plan itself.  This is the defining property
// the generated equalities linearize, so the two must agree on couplings with
// exact marginals.
double ci_violation(const Coupling& pi, CausalDirection dir) {
  const ProcessTree& a = dir == CausalDirection::LeftToRight ? *pi.left : *pi.right;
  const ProcessTree& b = dir == CausalDirection::LeftToRight ? *pi.right : *pi.left;
  auto entry = [&](int ap, int bp) {
    return dir == CausalDirection::LeftToRight
               ? pi.plan(static_cast<std::size_t>(ap), static_cast<std::size_t>(bp))
               : pi.plan(static_cast<std::size_t>(bp), static_cast<std::size_t>(ap));
  };
  const std::size_t na = a.leaves().size(), nb = b.leaves().size();
  double worst = 0.0;
  for (int t = 1; t < a.horizon(); ++t) {
    std::vector<std::vector<int>> under_a(a.size()), under_b(b.size());
    for (std::size_t p = 0; p < na; ++p)
      under_a[static_cast<std::size_t>(a.ancestor_at(a.leaves()[p], t))].push_back(
          static_cast<int>(p));
    for (std::size_t q = 0; q < nb; ++q)
      under_b[static_cast<std::size_t>(b.ancestor_at(b.leaves()[q], t))].push_back(
          static_cast<int>(q));
    for (int u : a.at_time(t)) {
      const auto& cu = under_a[static_cast<std::size_t>(u)];
      double mass_u = 0.0;
      for (int i : cu)
        for (std::size_t q = 0; q < nb; ++q) mass_u += entry(i, static_cast<int>(q));
      for (int v : b.at_time(t)) {
        const auto& cv = under_b[static_cast<std::size_t>(v)];
        double mass_uv = 0.0;
        for (int i : cu)
          for (int q : cv) mass_uv += entry(i, q);
        for (int i : cu) {
          double mass_w = 0.0, mass_wv = 0.0;
          for (std::size_t q = 0; q < nb; ++q) mass_w += entry(i, static_cast<int>(q));
          for (int q : cv) mass_wv += entry(i, q);
          worst = std::max(worst, std::abs(mass_wv * mass_u - mass_uv * mass_w));
        }
      }
    }
  }
  return worst;
}

// Mass .5 on (-1-path, -1-path) and on (+1-path, +1-path): monotone rearrangement
// of plain_bet onto informed_bet.  It leaks the time-2 coin into time 1.
Coupling comonotone_plain_to_informed() {
  auto x = share(plain_bet());
  auto y = share(informed_bet());
  Mat plan(2, 2);
  plan(0, 0) = 0.5;
  plan(1, 1) = 0.5;
  return {std::move(x), std::move(y), std::move(plan), false, false};
}

}  // namespace

TEST_CASE("causal constraint generation on the bet examples") {
  ProcessTree e1 = plain_bet();
  ProcessTree e2 = informed_bet();

  // Single time-1 node on the conditioning side of every pair involving e1 as
  // the split tree: all equalities are identities and are skipped.
  CHECK(causal_constraints(e1, e1).empty());
  CHECK(causal_constraints(e1, e1, CausalDirection::RightToLeft).empty());
  CHECK(causal_constraints(e2, e1).empty());
  CHECK(causal_constraints(e1, e2, CausalDirection::RightToLeft).empty());

  // plain_bet leaves share one time-1 ancestor, informed_bet has two time-1
  // nodes: 2 leaves x 2 nodes.
  auto fwd = causal_constraints(e1, e2);
  CHECK(fwd.size() == 4);
  auto rev = causal_constraints(e2, e1, CausalDirection::RightToLeft);
  CHECK(rev.size() == 4);

  std::mt19937_64 rng(7);
  ProcessTree deep = ts::random_tree(rng, 3, 2, 1);
  CHECK_THROWS_AS((void)causal_constraints(e1, deep), std::invalid_argument);
}

TEST_CASE("check_coupling classifies the canonical examples") {
  auto e1 = share(plain_bet());
  auto e2 = share(informed_bet());

  Coupling id = identity_coupling(e1);
  CHECK(check_coupling(id, CouplingMode::Marginal));
  CHECK(check_coupling(id, CouplingMode::Bicausal));

  Coupling prod = product_coupling(e1, e2);
  CHECK(check_coupling(prod, CouplingMode::Bicausal));

  Coupling mono = comonotone_plain_to_informed();
  CHECK(check_coupling(mono, CouplingMode::Marginal));
  CHECK_FALSE(check_coupling(mono, CouplingMode::Causal));
  CHECK(coupling_violation(mono, CouplingMode::Causal) == doctest::Approx(0.25));
  // The reverse direction alone is vacuous here, so only the forward
  // equalities separate the two modes.
  for (const auto& c : causal_constraints(*e1, *e2))
    CHECK(std::abs(eval_terms(c, prod.plan)) < 1e-15);

  Coupling bad{e1, e2, Mat(2, 3), false, false};
  CHECK_THROWS_AS((void)check_coupling(bad, CouplingMode::Marginal), std::invalid_argument);
}

TEST_CASE("product couplings are bicausal for random pairs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    int horizon = 2 + static_cast<int>(rng() % 2);
    auto x = share(ts::random_tree(rng, horizon, 3, 1));
    auto y = share(ts::random_tree(rng, horizon, 3, 1));
    Coupling prod = product_coupling(x, y);
    CHECK(coupling_violation(prod, CouplingMode::Bicausal) < 1e-9);
  }
}

TEST_CASE("generated equalities agree with direct conditional independence") {
  std::mt19937_64 rng(23);
  int causal_hits = 0, causal_misses = 0;
  for (int trial = 0; trial < 12; ++trial) {
    int horizon = 2 + static_cast<int>(rng() % 2);
    auto x = share(ts::random_tree(rng, horizon, 3, 1));
    auto y = share(ts::random_tree(rng, horizon, 3, 1));
    Mat cost = ts::random_cost(rng, static_cast<int>(x->leaves().size()),
                               static_cast<int>(y->leaves().size()));

    std::vector<Coupling> samples;
    samples.push_back(product_coupling(x, y));
    samples.push_back(lp_coupling(x, y, cost, CouplingMode::Marginal));
    samples.push_back(lp_coupling(x, y, cost, CouplingMode::Causal));

    for (const auto& pi : samples) {
      for (auto dir : {CausalDirection::LeftToRight, CausalDirection::RightToLeft}) {
        double generated = 0.0;
        for (const auto& c : causal_constraints(*x, *y, dir))
          generated = std::max(generated, std::abs(eval_terms(c, pi.plan)));
        double direct = ci_violation(pi, dir);
        CHECK(std::abs(generated - direct) < 1e-9);
        CHECK((generated <= 1e-8) == (direct <= 1e-8));
        if (dir == CausalDirection::LeftToRight) {
          (direct <= 1e-8 ? causal_hits : causal_misses)++;
        }
      }
    }
  }
  // The sample set must exercise both verdicts or the equivalence check is
  // vacuous; unconstrained vertices violate causality often enough.
  CHECK(causal_hits > 0);
  CHECK(causal_misses > 0);
}

TEST_CASE("coupling_lp marginal mode reproduces plain transport") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    int horizon = 2 + static_cast<int>(rng() % 2);
    auto x = share(ts::random_tree(rng, horizon, 2, 1));
    auto y = share(ts::random_tree(rng, horizon, 3, 1));
    Mat cost = ts::random_cost(rng, static_cast<int>(x->leaves().size()),
                               static_cast<int>(y->leaves().size()));

    Vec mu, nu;
    for (int l : x->leaves()) mu.push_back(x->absolute_prob(l));
    for (int l : y->leaves()) nu.push_back(y->absolute_prob(l));
    TransportResult direct = solve_transport(cost, mu, nu);

    LpSolution marginal = solve_lp(coupling_lp(*x, *y, cost, CouplingMode::Marginal));
    REQUIRE(marginal.status == LpStatus::Optimal);
    CHECK(marginal.value == doctest::Approx(direct.value).epsilon(1e-9));

    // Each extra constraint family can only raise the optimum.
    LpSolution causal = solve_lp(coupling_lp(*x, *y, cost, CouplingMode::Causal));
    LpSolution bicausal = solve_lp(coupling_lp(*x, *y, cost, CouplingMode::Bicausal));
    REQUIRE(causal.status == LpStatus::Optimal);
    REQUIRE(bicausal.status == LpStatus::Optimal);
    CHECK(causal.value >= marginal.value - 1e-9);
    CHECK(bicausal.value >= causal.value - 1e-9);
  }

  CHECK_THROWS_AS((void)coupling_lp(plain_bet(), informed_bet(), Mat(3, 2), CouplingMode::Marginal),
                  std::invalid_argument);
}

TEST_CASE("ci_product recovers its factors") {
  auto e1 = share(plain_bet());
  auto e2 = share(informed_bet());
  auto e3 = share(duplicated_bet());

  Coupling gamma = product_coupling(e1, e2);
  Coupling eta = product_coupling(e2, e3);
  ThreeWayMeasure w = ci_product(gamma, eta);

  double total = 0.0;
  for (double v : w.weights) {
    CHECK(v >= 0.0);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // Independent factors glue to the triple product.
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 4; ++k) {
        double expect = e1->absolute_prob(e1->leaves()[i]) *
                        e2->absolute_prob(e2->leaves()[j]) *
                        e3->absolute_prob(e3->leaves()[k]);
        CHECK(w.at(i, j, k) == doctest::Approx(expect).epsilon(1e-12));
      }

  Coupling back_xy = project_xy(w);
  Coupling back_yz = project_yz(w);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(std::abs(back_xy.plan(i, j) - gamma.plan(i, j)) < 1e-12);
    }
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(std::abs(back_yz.plan(j, k) - eta.plan(j, k)) < 1e-12);
    }

  // Identity middle: everything stays on the diagonal.
  ThreeWayMeasure diag = ci_product(identity_coupling(e1), identity_coupling(e1));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k) {
        double expect = (i == j && j == k) ? e1->absolute_prob(e1->leaves()[i]) : 0.0;
        CHECK(w.weights.size() == 16);  // anchors the indexing convention above
        CHECK(diag.at(i, j, k) == doctest::Approx(expect));
      }

  // Structurally equal middle trees are accepted even as distinct objects.
  auto e2_copy = share(informed_bet());
  CHECK_NOTHROW((void)ci_product(product_coupling(e1, e2), product_coupling(e2_copy, e3)));

  // Mismatched middles are contract errors.
  CHECK_THROWS_AS((void)ci_product(product_coupling(e1, e1), product_coupling(e2, e3)),
                  std::invalid_argument);
}

TEST_CASE("glue_causal on the bet examples") {
  auto e1 = share(plain_bet());
  auto e2 = share(informed_bet());
  auto e3 = share(duplicated_bet());

  Coupling glued_id = glue_causal(identity_coupling(e1), identity_coupling(e1));
  CHECK(glued_id.causal_verified);
  Coupling expect_id = identity_coupling(e1);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(std::abs(glued_id.plan(i, k) - expect_id.plan(i, k)) < 1e-12);

  Coupling glued_prod = glue_causal(product_coupling(e1, e2), product_coupling(e2, e3));
  CHECK(glued_prod.causal_verified);
  Coupling expect_prod = product_coupling(e1, e3);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 4; ++k)
      CHECK(std::abs(glued_prod.plan(i, k) - expect_prod.plan(i, k)) < 1e-12);

  CHECK_THROWS_AS((void)glue_causal(comonotone_plain_to_informed(), product_coupling(e2, e3)),
                  std::invalid_argument);
}

TEST_CASE("gluing preserves causality and path costs are subadditive") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    int horizon = 2 + static_cast<int>(rng() % 2);
    auto x = share(ts::random_tree(rng, horizon, 2, 1));
    auto y = share(ts::random_tree(rng, horizon, 2, 1));
    auto z = share(ts::random_tree(rng, horizon, 2, 1));

    double p = (trial % 2 == 0) ? 1.0 : 2.0;
    Mat cost_xy = path_cost_matrix(*x, *y, p);
    Mat cost_yz = path_cost_matrix(*y, *z, p);
    Mat cost_xz = path_cost_matrix(*x, *z, p);

    Coupling gamma = lp_coupling(x, y, cost_xy, CouplingMode::Causal);
    Coupling eta = lp_coupling(y, z, cost_yz, CouplingMode::Causal);
    REQUIRE(check_coupling(gamma, CouplingMode::Causal));
    REQUIRE(check_coupling(eta, CouplingMode::Causal));

    Coupling glued = glue_causal(gamma, eta);
    CHECK(glued.causal_verified);
    CHECK(coupling_violation(glued, CouplingMode::Causal) < 1e-8);

    double lhs = std::pow(plan_cost(glued, cost_xz), 1.0 / p);
    double rhs = std::pow(plan_cost(gamma, cost_xy), 1.0 / p) +
                 std::pow(plan_cost(eta, cost_yz), 1.0 / p);
    CHECK(lhs <= rhs + 1e-9);
  }
}
