#pragma once

// Dense two-phase primal simplex over a templated scalar (double or Rational).
// Standard computational form: minimize c.x subject to A x = b, x >= 0.
//
// Pivoting starts with a most-negative-reduced-cost rule under deterministic
// tie-breaks and switches permanently to Bland's rule once a degenerate streak
// is detected, so the solve is deterministic and cannot cycle.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "aot/matrix.hpp"
#include "aot/rational.hpp"

namespace aot {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
struct SimplexTraits {
  // reduced-cost / feasibility tolerance and minimum usable pivot magnitude
  static T cost_tol() { return T(1e-9); }
  static T pivot_tol() { return T(1e-11); }
  static bool is_improving(const T& reduced) { return reduced < -cost_tol(); }
  static bool usable_pivot(const T& v) { return v > pivot_tol(); }
  static T nonneg(const T& v) { return v < T(0) ? T(0) : v; }
};

template <>
struct SimplexTraits<Rational> {
  static Rational cost_tol() { return Rational(0); }
  static Rational pivot_tol() { return Rational(0); }
  static bool is_improving(const Rational& reduced) { return reduced < 0; }
  static bool usable_pivot(const Rational& v) { return v > 0; }
  static Rational nonneg(const Rational& v) { return v < 0 ? Rational(0) : v; }
};

template <class T>
struct StandardResult {
  LpStatus status = LpStatus::Infeasible;
  T value{};
  std::vector<T> x;
  std::int64_t iterations = 0;
};

template <class T>
class StandardSimplex {
 public:
  StandardSimplex(const Matrix<T>& a, std::vector<T> b, std::vector<T> c)
      : m_(a.rows()), n_(a.cols()), tab_(a), rhs_(std::move(b)), cost_(std::move(c)) {
    if (rhs_.size() != m_ || cost_.size() != n_)
      throw LpError("simplex: inconsistent dimensions");
  }

  StandardResult<T> run() {
    setup();
    phase_one();
    if (result_.status == LpStatus::Infeasible) return finish();
    purge_artificials();
    phase_two();
    return finish();
  }

 private:
  using Traits = SimplexTraits<T>;

  std::size_t m_, n_;       // constraint rows, structural columns
  Matrix<T> tab_;           // m x (n + m): structural then artificial columns
  std::vector<T> rhs_;
  std::vector<T> cost_;     // structural phase-2 costs
  std::vector<T> z1_, z2_;  // reduced-cost rows for both phases
  T val1_{};                // current phase-1 objective (sum of artificials)
  std::vector<std::size_t> basis_;
  std::vector<char> allowed_;  // artificial columns are locked out once nonbasic
  bool bland_ = false;
  int degenerate_streak_ = 0;
  std::int64_t iterations_ = 0;
  StandardResult<T> result_;

  std::size_t width() const { return n_ + m_; }

  void setup() {
    // widen the tableau with an artificial identity block
    Matrix<T> wide(m_, width(), T(0));
    for (std::size_t i = 0; i < m_; ++i) {
      bool flip = rhs_[i] < T(0);
      for (std::size_t j = 0; j < n_; ++j) wide(i, j) = flip ? T(-tab_(i, j)) : tab_(i, j);
      if (flip) rhs_[i] = -rhs_[i];
      wide(i, n_ + i) = T(1);
    }
    tab_ = std::move(wide);
    basis_.resize(m_);
    allowed_.assign(width(), 1);
    for (std::size_t i = 0; i < m_; ++i) basis_[i] = n_ + i;

    z1_.assign(width(), T(0));
    z2_.assign(width(), T(0));
    val1_ = T(0);
    for (std::size_t j = 0; j < n_; ++j) {
      T s(0);
      for (std::size_t i = 0; i < m_; ++i) s += tab_(i, j);
      z1_[j] = -s;
      z2_[j] = cost_[j];
    }
    for (std::size_t i = 0; i < m_; ++i) val1_ += rhs_[i];
  }

  void pivot(std::size_t row, std::size_t col) {
    const T piv = tab_(row, col);
    T* pr = tab_.row(row);
    const std::size_t w = width();
    for (std::size_t j = 0; j < w; ++j) pr[j] /= piv;
    rhs_[row] /= piv;
    pr[col] = T(1);

    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row) continue;
      T f = tab_(i, col);
      if (f == T(0)) continue;
      T* ri = tab_.row(i);
      for (std::size_t j = 0; j < w; ++j) ri[j] -= f * pr[j];
      ri[col] = T(0);
      rhs_[i] -= f * rhs_[row];
      rhs_[i] = Traits::nonneg(rhs_[i]);
    }
    auto fold = [&](std::vector<T>& z, T* val) {
      T f = z[col];
      if (f == T(0)) return;
      for (std::size_t j = 0; j < w; ++j) z[j] -= f * pr[j];
      z[col] = T(0);
      if (val) *val += f * rhs_[row];
    };
    // objective change is f * theta where theta is the post-division rhs
    fold(z1_, &val1_);
    fold(z2_, nullptr);

    std::size_t leaving = basis_[row];
    if (leaving >= n_) allowed_[leaving] = 0;  // artificials never come back
    basis_[row] = col;
    ++iterations_;
    if (iterations_ > iteration_cap()) throw LpError("simplex: iteration limit exceeded");
  }

  std::int64_t iteration_cap() const {
    return 50000 + 100 * static_cast<std::int64_t>(m_ + width());
  }

  // entering column with reduced cost < -tol under the active rule;
  // width() if the current basis is optimal for this phase
  std::size_t pick_entering(const std::vector<T>& z, bool structural_only) {
    const std::size_t limit = structural_only ? n_ : width();
    std::size_t best = width();
    if (bland_) {
      for (std::size_t j = 0; j < limit; ++j)
        if (allowed_[j] && Traits::is_improving(z[j])) return j;
      return best;
    }
    T best_val(0);
    for (std::size_t j = 0; j < limit; ++j) {
      if (!allowed_[j] || !Traits::is_improving(z[j])) continue;
      if (best == width() || z[j] < best_val) {
        best = j;
        best_val = z[j];
      }
    }
    return best;
  }

  // min-ratio row; ties broken by smallest basic variable index
  std::size_t pick_leaving(std::size_t col) {
    std::size_t row = m_;
    T best_ratio(0);
    for (std::size_t i = 0; i < m_; ++i) {
      const T& a = tab_(i, col);
      if (!Traits::usable_pivot(a)) continue;
      T ratio = rhs_[i] / a;
      if (row == m_ || ratio < best_ratio ||
          (ratio == best_ratio && basis_[i] < basis_[row])) {
        row = i;
        best_ratio = ratio;
      }
    }
    return row;
  }

  void note_progress(bool degenerate) {
    if (degenerate)
      ++degenerate_streak_;
    else
      degenerate_streak_ = 0;
    if (!bland_ && degenerate_streak_ > 100) bland_ = true;
  }

  void phase_one() {
    while (true) {
      std::size_t e = pick_entering(z1_, /*structural_only=*/false);
      if (e == width()) break;
      std::size_t r = pick_leaving(e);
      if (r == m_) break;  // phase-1 objective bounded below by 0; defensive
      note_progress(rhs_[r] == T(0));
      pivot(r, e);
    }
    if (val1_ > feasibility_threshold()) {
      result_.status = LpStatus::Infeasible;
      result_.iterations = iterations_;
    } else {
      result_.status = LpStatus::Optimal;
    }
  }

  T feasibility_threshold() const {
    if constexpr (std::is_same_v<T, Rational>) {
      return Rational(0);
    } else {
      T scale(1);
      for (std::size_t i = 0; i < m_; ++i) scale += rhs_[i] < T(0) ? T(-rhs_[i]) : rhs_[i];
      return T(1e-8) * scale;
    }
  }

  // pivot basic artificials out; rows with no structural support are redundant
  // and stay inert with their artificial basic at level zero
  void purge_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      std::size_t col = n_;
      for (std::size_t j = 0; j < n_; ++j) {
        T a = tab_(i, j) < T(0) ? T(-tab_(i, j)) : tab_(i, j);
        if (Traits::usable_pivot(a)) {
          col = j;
          break;
        }
      }
      if (col < n_) pivot(i, col);
    }
    for (std::size_t j = n_; j < width(); ++j) allowed_[j] = 0;
  }

  void phase_two() {
    while (true) {
      std::size_t e = pick_entering(z2_, /*structural_only=*/true);
      if (e == width()) {
        result_.status = LpStatus::Optimal;
        return;
      }
      std::size_t r = pick_leaving(e);
      if (r == m_) {
        result_.status = LpStatus::Unbounded;
        return;
      }
      note_progress(rhs_[r] == T(0));
      pivot(r, e);
    }
  }

  StandardResult<T> finish() {
    result_.iterations = iterations_;
    if (result_.status != LpStatus::Optimal && result_.status != LpStatus::Unbounded) {
      return result_;
    }
    if (result_.status == LpStatus::Unbounded) return result_;
    result_.x.assign(n_, T(0));
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) result_.x[basis_[i]] = Traits::nonneg(rhs_[i]);
    T v(0);
    for (std::size_t j = 0; j < n_; ++j) v += cost_[j] * result_.x[j];
    result_.value = v;
    return result_;
  }
};

template <class T>
StandardResult<T> simplex_solve(const Matrix<T>& a, std::vector<T> b, std::vector<T> c) {
  StandardSimplex<T> s(a, std::move(b), std::move(c));
  return s.run();
}

}  // namespace detail
}  // namespace aot
