#include "aot/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

#include "aot/measures.hpp"

namespace aot {

namespace {

// Positions (in leaves() order) of the leaves below each node, indexed by id.
std::vector<std::vector<int>> leaf_positions_under(const ProcessTree& x, int t) {
  std::vector<std::vector<int>> under(x.size());
  const auto& lv = x.leaves();
  for (std::size_t p = 0; p < lv.size(); ++p) {
    int anc = x.ancestor_at(lv[p], t);
    under[static_cast<std::size_t>(anc)].push_back(static_cast<int>(p));
  }
  return under;
}

// Generates the equalities conditioning on tree `a`; `a_is_left` says whether
// `a` indexes plan rows or columns.
void append_direction(const ProcessTree& a, const ProcessTree& b, bool a_is_left,
                      std::vector<CouplingConstraint>& out) {
  auto push = [a_is_left](CouplingConstraint& c, int ap, int bp, double coeff) {
    if (a_is_left)
      c.terms.push_back({ap, bp, coeff});
    else
      c.terms.push_back({bp, ap, coeff});
  };
  for (int t = 1; t < a.horizon(); ++t) {
    const auto& split_nodes = b.at_time(t);
    if (split_nodes.size() <= 1) continue;  // cyl(v) is everything: identity
    auto under_a = leaf_positions_under(a, t);
    auto under_b = leaf_positions_under(b, t);
    const auto& la = a.leaves();
    for (std::size_t ip = 0; ip < la.size(); ++ip) {
      int w = la[ip];
      int u = a.ancestor_at(w, t);
      const auto& cyl_u = under_a[static_cast<std::size_t>(u)];
      if (cyl_u.size() <= 1) continue;  // cyl(u) = {w}: identity
      double pw = a.absolute_prob(w);
      double pu = a.absolute_prob(u);
      for (int v : split_nodes) {
        const auto& cyl_v = under_b[static_cast<std::size_t>(v)];
        CouplingConstraint c;
        c.terms.reserve(cyl_v.size() * (1 + cyl_u.size()));
        for (int jq : cyl_v) push(c, static_cast<int>(ip), jq, pu);
        for (int i2 : cyl_u)
          for (int jq : cyl_v) push(c, i2, jq, -pw);
        out.push_back(std::move(c));
      }
    }
  }
}

double eval_constraint(const CouplingConstraint& c, const Mat& plan) {
  double s = 0.0;
  for (const auto& t : c.terms)
    s += t.coeff * plan(static_cast<std::size_t>(t.left_leaf), static_cast<std::size_t>(t.right_leaf));
  return s;
}

void require_dims(const Coupling& pi) {
  if (!pi.left || !pi.right) throw std::invalid_argument("coupling: missing tree");
  if (pi.plan.rows() != pi.left->leaves().size() ||
      pi.plan.cols() != pi.right->leaves().size())
    throw std::invalid_argument("coupling: plan shape does not match leaf counts");
}

// Node-by-node structural equality.  Leaf-level agreement is not enough for
// the middle tree of ci_product: processes can share every leaf path and
// probability yet carry different filtrations (plain vs informed bet), and the
// gluing lemma needs both couplings to condition on the same one.
bool same_filtration(const ProcessTree& a, const ProcessTree& b) {
  if (a.size() != b.size() || a.horizon() != b.horizon() || a.dim() != b.dim()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const TreeNode& na = a.node(static_cast<int>(i));
    const TreeNode& nb = b.node(static_cast<int>(i));
    if (na.time != nb.time || na.parent != nb.parent) return false;
    if (std::abs(na.prob - nb.prob) > 1e-10) return false;
    if (na.value.size() != nb.value.size()) return false;
    if (!na.value.empty() && euclidean(na.value, nb.value) > 1e-9) return false;
  }
  return true;
}

}  // namespace

Coupling product_coupling(TreePtr x, TreePtr y) {
  if (!x || !y) throw std::invalid_argument("product_coupling: null tree");
  const auto& lx = x->leaves();
  const auto& ly = y->leaves();
  Mat plan(lx.size(), ly.size());
  for (std::size_t i = 0; i < lx.size(); ++i)
    for (std::size_t j = 0; j < ly.size(); ++j)
      plan(i, j) = x->absolute_prob(lx[i]) * y->absolute_prob(ly[j]);
  return {std::move(x), std::move(y), std::move(plan), false, false};
}

Coupling identity_coupling(TreePtr x) {
  if (!x) throw std::invalid_argument("identity_coupling: null tree");
  const auto& lx = x->leaves();
  Mat plan(lx.size(), lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) plan(i, i) = x->absolute_prob(lx[i]);
  return {x, std::move(x), std::move(plan), false, false};
}

std::vector<CouplingConstraint> causal_constraints(const ProcessTree& x, const ProcessTree& y,
                                                   CausalDirection direction) {
  if (x.horizon() != y.horizon())
    throw std::invalid_argument("causal_constraints: horizons differ");
  std::vector<CouplingConstraint> out;
  if (direction == CausalDirection::LeftToRight)
    append_direction(x, y, /*a_is_left=*/true, out);
  else
    append_direction(y, x, /*a_is_left=*/false, out);
  return out;
}

double coupling_violation(const Coupling& pi, CouplingMode mode) {
  require_dims(pi);
  const auto& x = *pi.left;
  const auto& y = *pi.right;
  const auto& lx = x.leaves();
  const auto& ly = y.leaves();
  double worst = 0.0;
  Vec col(ly.size(), 0.0);
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ly.size(); ++j) {
      double v = pi.plan(i, j);
      worst = std::max(worst, -v);
      row += v;
      col[j] += v;
    }
    worst = std::max(worst, std::abs(row - x.absolute_prob(lx[i])));
  }
  for (std::size_t j = 0; j < ly.size(); ++j)
    worst = std::max(worst, std::abs(col[j] - y.absolute_prob(ly[j])));
  if (mode != CouplingMode::Marginal) {
    for (const auto& c : causal_constraints(x, y, CausalDirection::LeftToRight))
      worst = std::max(worst, std::abs(eval_constraint(c, pi.plan)));
    if (mode == CouplingMode::Bicausal)
      for (const auto& c : causal_constraints(x, y, CausalDirection::RightToLeft))
        worst = std::max(worst, std::abs(eval_constraint(c, pi.plan)));
  }
  return worst;
}

bool check_coupling(const Coupling& pi, CouplingMode mode, double tol) {
  return coupling_violation(pi, mode) <= tol;
}

LinearProgram coupling_lp(const ProcessTree& x, const ProcessTree& y, const Mat& cost,
                          CouplingMode mode) {
  const auto& lx = x.leaves();
  const auto& ly = y.leaves();
  const std::size_t nx = lx.size(), ny = ly.size();
  if (cost.rows() != nx || cost.cols() != ny)
    throw std::invalid_argument("coupling_lp: cost shape does not match leaf counts");

  std::vector<CouplingConstraint> cons;
  if (mode != CouplingMode::Marginal) {
    cons = causal_constraints(x, y, CausalDirection::LeftToRight);
    if (mode == CouplingMode::Bicausal) {
      auto rev = causal_constraints(x, y, CausalDirection::RightToLeft);
      cons.insert(cons.end(), std::make_move_iterator(rev.begin()),
                  std::make_move_iterator(rev.end()));
    }
  }

  LinearProgram lp;
  lp.objective.assign(nx * ny, 0.0);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) lp.objective[i * ny + j] = cost(i, j);

  const std::size_t rows = nx + ny + cons.size();
  lp.eq_lhs = Mat(rows, nx * ny);
  lp.eq_rhs.assign(rows, 0.0);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) lp.eq_lhs(i, i * ny + j) = 1.0;
    lp.eq_rhs[i] = x.absolute_prob(lx[i]);
  }
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) lp.eq_lhs(nx + j, i * ny + j) = 1.0;
    lp.eq_rhs[nx + j] = y.absolute_prob(ly[j]);
  }
  for (std::size_t r = 0; r < cons.size(); ++r)
    for (const auto& t : cons[r].terms)
      lp.eq_lhs(nx + ny + r, static_cast<std::size_t>(t.left_leaf) * ny +
                                 static_cast<std::size_t>(t.right_leaf)) += t.coeff;
  return lp;
}

ThreeWayMeasure ci_product(const Coupling& gamma, const Coupling& eta) {
  require_dims(gamma);
  require_dims(eta);
  const auto& ym = *gamma.right;  // middle tree as gamma sees it
  const auto& ye = *eta.left;
  const auto& lym = ym.leaves();
  if (gamma.right != eta.left && !same_filtration(ym, ye))
    throw std::invalid_argument("ci_product: middle trees do not match");
  const std::size_t nx = gamma.plan.rows(), ny = lym.size(), nz = eta.plan.cols();
  for (std::size_t j = 0; j < ny; ++j) {
    double csum = 0.0, rsum = 0.0;
    for (std::size_t i = 0; i < nx; ++i) csum += gamma.plan(i, j);
    for (std::size_t k = 0; k < nz; ++k) rsum += eta.plan(j, k);
    if (std::abs(csum - rsum) > 1e-10)
      throw std::invalid_argument("ci_product: middle marginals differ");
  }

  ThreeWayMeasure w{gamma.left, gamma.right, eta.right,
                    std::vector<double>(nx * ny * nz, 0.0)};
  for (std::size_t j = 0; j < ny; ++j) {
    double pj = ym.absolute_prob(lym[j]);
    for (std::size_t i = 0; i < nx; ++i) {
      double gij = gamma.plan(i, j);
      if (gij == 0.0) continue;
      for (std::size_t k = 0; k < nz; ++k)
        w.weights[(i * ny + j) * nz + k] = gij * eta.plan(j, k) / pj;
    }
  }
  return w;
}

Coupling project_xy(const ThreeWayMeasure& w) {
  const std::size_t nx = w.x->leaves().size(), ny = w.y->leaves().size(),
                    nz = w.z->leaves().size();
  Mat plan(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t k = 0; k < nz; ++k) plan(i, j) += w.weights[(i * ny + j) * nz + k];
  return {w.x, w.y, std::move(plan), false, false};
}

Coupling project_yz(const ThreeWayMeasure& w) {
  const std::size_t nx = w.x->leaves().size(), ny = w.y->leaves().size(),
                    nz = w.z->leaves().size();
  Mat plan(ny, nz);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t k = 0; k < nz; ++k) plan(j, k) += w.weights[(i * ny + j) * nz + k];
  return {w.y, w.z, std::move(plan), false, false};
}

Coupling project_xz(const ThreeWayMeasure& w) {
  const std::size_t nx = w.x->leaves().size(), ny = w.y->leaves().size(),
                    nz = w.z->leaves().size();
  Mat plan(nx, nz);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t k = 0; k < nz; ++k) plan(i, k) += w.weights[(i * ny + j) * nz + k];
  return {w.x, w.z, std::move(plan), false, false};
}

Coupling glue_causal(const Coupling& gamma, const Coupling& eta) {
  if (!check_coupling(gamma, CouplingMode::Causal))
    throw std::invalid_argument("glue_causal: left input is not a causal coupling");
  if (!check_coupling(eta, CouplingMode::Causal))
    throw std::invalid_argument("glue_causal: right input is not a causal coupling");
  Coupling out = project_xz(ci_product(gamma, eta));
  out.causal_verified = check_coupling(out, CouplingMode::Causal);
  return out;
}

}  // namespace aot
