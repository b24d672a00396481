// Shared helpers for the test suite: an exact rational LP oracle based on
// basis enumeration, plus small random-instance generators.  The oracle is
// deliberately brute force -- it is the reference the fast code is checked
// against, so it must be simple enough to trust by inspection.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "aot/matrix.hpp"
#include "aot/process.hpp"
#include "aot/rational.hpp"

namespace testsupport {

using aot::Matrix;
using aot::Rational;
using aot::Vec;

struct OracleResult {
  bool feasible = false;
  Rational value;
  std::vector<Rational> x;  // full-length primal, zeros off the optimal basis
};

namespace detail {

// Row-reduce [A | b] in place, returning the pivot column per row (-1 none).
inline int row_reduce(Matrix<Rational>& m) {
  int rank = 0;
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  for (int col = 0; col < cols && rank < rows; ++col) {
    int piv = -1;
    for (int r = rank; r < rows; ++r)
      if (m(r, col) != 0) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    if (piv != rank)
      for (int c = 0; c < cols; ++c) std::swap(m(piv, c), m(rank, c));
    Rational d = m(rank, col);
    for (int c = 0; c < cols; ++c) m(rank, c) /= d;
    for (int r = 0; r < rows; ++r) {
      if (r == rank || m(r, col) == 0) continue;
      Rational f = m(r, col);
      for (int c = 0; c < cols; ++c) m(r, c) -= f * m(rank, c);
    }
    ++rank;
  }
  return rank;
}

inline int matrix_rank(const Matrix<Rational>& a) {
  Matrix<Rational> work = a;
  return row_reduce(work);
}

}  // namespace detail

// Exact minimum of c.x over {A x = b, x >= 0} by enumerating every basis of
// size rank(A).  Assumes the feasible region is bounded (always true for the
// transport and coupling polytopes this backs).  feasible=false when no basic
// feasible solution exists.
inline OracleResult oracle_solve_standard(const Matrix<Rational>& a,
                                          const std::vector<Rational>& b,
                                          const std::vector<Rational>& c) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  OracleResult best;

  const int rank = detail::matrix_rank(a);
  std::vector<int> pick(rank);
  for (int i = 0; i < rank; ++i) pick[i] = i;

  auto try_basis = [&](const std::vector<int>& cols) {
    // Solve A_B y = b exactly; skip unless the solution is unique and >= 0.
    Matrix<Rational> sys(m, rank + 1);
    for (int r = 0; r < m; ++r) {
      for (int k = 0; k < rank; ++k) sys(r, k) = a(r, cols[k]);
      sys(r, rank) = b[r];
    }
    const int sys_rank = detail::row_reduce(sys);
    if (sys_rank < rank) return;  // singular basis or inconsistent handled below
    for (int r = 0; r < m; ++r) {
      bool all_zero = true;
      for (int k = 0; k < rank; ++k)
        if (sys(r, k) != 0) all_zero = false;
      if (all_zero && sys(r, rank) != 0) return;  // inconsistent
    }
    // After full reduction row k holds the identity pivot for variable k.
    std::vector<Rational> y(rank);
    for (int k = 0; k < rank; ++k) y[k] = sys(k, rank);
    for (const Rational& v : y)
      if (v < 0) return;
    Rational val = 0;
    for (int k = 0; k < rank; ++k) val += c[cols[k]] * y[k];
    if (!best.feasible || val < best.value) {
      best.feasible = true;
      best.value = val;
      best.x.assign(n, Rational(0));
      for (int k = 0; k < rank; ++k) best.x[cols[k]] = y[k];
    }
  };

  if (rank == 0) {
    bool zero_b = true;
    for (const Rational& v : b)
      if (v != 0) zero_b = false;
    if (zero_b) {
      best.feasible = true;
      best.value = 0;
      best.x.assign(n, Rational(0));
    }
    return best;
  }

  while (true) {
    try_basis(pick);
    int i = rank - 1;
    while (i >= 0 && pick[i] == n - rank + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < rank; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

// Exact transport oracle: row sums then column sums as equality rows.
inline OracleResult oracle_transport(const Matrix<Rational>& cost,
                                     const std::vector<Rational>& mu,
                                     const std::vector<Rational>& nu) {
  const int m = static_cast<int>(mu.size());
  const int n = static_cast<int>(nu.size());
  Matrix<Rational> a(m + n, m * n);
  std::vector<Rational> b(m + n);
  std::vector<Rational> c(m * n);
  for (int i = 0; i < m; ++i) {
    b[i] = mu[i];
    for (int j = 0; j < n; ++j) a(i, i * n + j) = 1;
  }
  for (int j = 0; j < n; ++j) {
    b[m + j] = nu[j];
    for (int i = 0; i < m; ++i) a(m + j, i * n + j) = 1;
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c[i * n + j] = cost(i, j);
  return oracle_solve_standard(a, b, c);
}

inline Matrix<Rational> to_rational(const aot::Mat& m) {
  Matrix<Rational> out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = Rational(m(r, c));
  return out;
}

inline std::vector<Rational> to_rational(const Vec& v) {
  std::vector<Rational> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = Rational(v[i]);
  return out;
}

// Random probability vector with dyadic entries u_i / 2^bits, every u_i >= 1.
// Dyadic weights make double-precision sums exact, so tests can assert exact
// equalities against the rational oracle.
inline Vec dyadic_weights(std::mt19937_64& rng, int n, int bits = 10) {
  const std::int64_t total = std::int64_t(1) << bits;
  std::vector<std::int64_t> cuts{0, total};
  std::uniform_int_distribution<std::int64_t> pick(1, total - 1);
  while (static_cast<int>(cuts.size()) < n + 1) {
    std::int64_t c = pick(rng);
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  Vec w(n);
  for (int i = 0; i < n; ++i)
    w[i] = static_cast<double>(cuts[i + 1] - cuts[i]) / static_cast<double>(total);
  return w;
}

// Atoms on a coarse grid: coordinates k/8 with |k| <= 40.
inline std::vector<Vec> grid_atoms(std::mt19937_64& rng, int count, int dim) {
  std::uniform_int_distribution<int> coord(-40, 40);
  std::vector<Vec> atoms(count, Vec(dim));
  for (auto& a : atoms)
    for (double& x : a) x = coord(rng) / 8.0;
  return atoms;
}

inline aot::Mat random_cost(std::mt19937_64& rng, int m, int n) {
  std::uniform_int_distribution<int> entry(0, 64);
  aot::Mat c(m, n);
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) = entry(rng) / 4.0;
  return c;
}

// Random process tree with integer-grid values and dyadic transition
// probabilities, so path probabilities are exact in double precision.
inline aot::ProcessTree random_tree(std::mt19937_64& rng, int horizon, int max_branch, int dim,
                                    int value_span = 3) {
  aot::TreeBuilder builder(horizon, dim);
  std::uniform_int_distribution<int> branch(1, max_branch);
  std::uniform_int_distribution<int> coord(-value_span, value_span);
  std::function<void(int, int)> grow = [&](int parent, int t) {
    if (t == horizon) return;
    const int k = branch(rng);
    aot::Vec probs = dyadic_weights(rng, k, 6);
    for (int i = 0; i < k; ++i) {
      aot::Vec value(static_cast<std::size_t>(dim));
      for (double& v : value) v = coord(rng);
      int id = builder.add(parent, std::move(value), probs[static_cast<std::size_t>(i)]);
      grow(id, t + 1);
    }
  };
  grow(0, 0);
  return builder.build();
}

// Information-preserving padding: one interior node is split into two copies
// with halved probabilities and duplicated subtrees.  The result has the same
// path law and the same quotient, so it is equivalent to the input for every
// filtration-sensitive comparison.
inline aot::ProcessTree split_pad(const aot::ProcessTree& x, std::mt19937_64& rng) {
  std::vector<int> interior;
  for (int t = 1; t < x.horizon(); ++t)
    for (int id : x.at_time(t)) interior.push_back(id);
  if (interior.empty()) return x;
  std::uniform_int_distribution<std::size_t> pick(0, interior.size() - 1);
  const int target = interior[pick(rng)];

  aot::TreeBuilder builder(x.horizon(), x.dim());
  std::function<void(int, int)> copy = [&](int orig, int parent) {
    for (int c : x.node(orig).children) {
      const int copies = (c == target) ? 2 : 1;
      for (int rep = 0; rep < copies; ++rep) {
        int id = builder.add(parent, x.node(c).value, x.node(c).prob / copies);
        copy(c, id);
      }
    }
  };
  copy(aot::ProcessTree::root_id, 0);
  return builder.build();
}

// Rebuild with every child list shuffled; the process is unchanged.
inline aot::ProcessTree shuffle_children(const aot::ProcessTree& x, std::mt19937_64& rng) {
  aot::TreeBuilder builder(x.horizon(), x.dim());
  std::function<void(int, int)> copy = [&](int orig, int parent) {
    std::vector<int> kids = x.node(orig).children;
    std::shuffle(kids.begin(), kids.end(), rng);
    for (int c : kids) {
      int id = builder.add(parent, x.node(c).value, x.node(c).prob);
      copy(c, id);
    }
  };
  copy(aot::ProcessTree::root_id, 0);
  return builder.build();
}

}  // namespace testsupport
