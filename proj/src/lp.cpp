#include "aot/lp.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace aot {

ArithmeticMode default_arithmetic_mode() {
  static const ArithmeticMode mode = [] {
    const char* v = std::getenv("ADAPTED_OT_RATIONAL");
    return (v && v[0] == '1') ? ArithmeticMode::Rational : ArithmeticMode::FloatingPoint;
  }();
  return mode;
}

namespace {

void require_finite(const Vec& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite entry in ") + what);
}

void require_finite(const Mat& m, const char* what) {
  for (double x : m.data())
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite entry in ") + what);
}

struct StandardForm {
  // minimize cost.x over lhs x = rhs, x >= 0; maps back to the user's frame
  Mat lhs;
  Vec rhs;
  Vec cost;
  std::size_t n_user = 0;  // leading columns that correspond to shifted user vars
};

StandardForm build_standard(const LinearProgram& lp) {
  const std::size_t n = lp.objective.size();
  if (n == 0) throw std::invalid_argument("lp: empty objective");
  auto check_block = [&](const Mat& a, const Vec& b, const char* what) {
    if (a.rows() != b.size() || (a.rows() > 0 && a.cols() != n))
      throw std::invalid_argument(std::string("lp: dimension mismatch in ") + what);
  };
  check_block(lp.eq_lhs, lp.eq_rhs, "equalities");
  check_block(lp.ineq_lhs, lp.ineq_rhs, "inequalities");
  if (!lp.lower_bounds.empty() && lp.lower_bounds.size() != n)
    throw std::invalid_argument("lp: lower bound size mismatch");
  require_finite(lp.objective, "objective");
  require_finite(lp.eq_lhs, "equalities");
  require_finite(lp.eq_rhs, "equality rhs");
  require_finite(lp.ineq_lhs, "inequalities");
  require_finite(lp.ineq_rhs, "inequality rhs");
  if (!lp.lower_bounds.empty()) require_finite(lp.lower_bounds, "lower bounds");

  const std::size_t me = lp.eq_lhs.rows(), mi = lp.ineq_lhs.rows();
  StandardForm sf;
  sf.n_user = n;
  sf.lhs = Mat(me + mi, n + mi, 0.0);
  sf.rhs.assign(me + mi, 0.0);
  sf.cost.assign(n + mi, 0.0);

  Vec lb = lp.lower_bounds.empty() ? Vec(n, 0.0) : lp.lower_bounds;
  for (std::size_t j = 0; j < n; ++j) sf.cost[j] = lp.maximize ? -lp.objective[j] : lp.objective[j];

  for (std::size_t i = 0; i < me; ++i) {
    double shift = 0;
    for (std::size_t j = 0; j < n; ++j) {
      sf.lhs(i, j) = lp.eq_lhs(i, j);
      shift += lp.eq_lhs(i, j) * lb[j];
    }
    sf.rhs[i] = lp.eq_rhs[i] - shift;
  }
  for (std::size_t i = 0; i < mi; ++i) {
    double shift = 0;
    for (std::size_t j = 0; j < n; ++j) {
      sf.lhs(me + i, j) = lp.ineq_lhs(i, j);
      shift += lp.ineq_lhs(i, j) * lb[j];
    }
    sf.lhs(me + i, n + i) = 1.0;  // slack
    sf.rhs[me + i] = lp.ineq_rhs[i] - shift;
  }
  return sf;
}

template <class T>
Matrix<T> widen(const Mat& m) {
  Matrix<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = T(m(i, j));
  return out;
}

template <class T>
std::vector<T> widen(const Vec& v) {
  std::vector<T> out;
  out.reserve(v.size());
  for (double x : v) out.emplace_back(x);
  return out;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) { return solve_lp(lp, default_arithmetic_mode()); }

LpSolution solve_lp(const LinearProgram& lp, ArithmeticMode mode) {
  StandardForm sf = build_standard(lp);
  LpSolution out;
  Vec lb = lp.lower_bounds.empty() ? Vec(sf.n_user, 0.0) : lp.lower_bounds;
  if (mode == ArithmeticMode::Rational) {
    auto res = detail::simplex_solve<Rational>(widen<Rational>(sf.lhs), widen<Rational>(sf.rhs),
                                               widen<Rational>(sf.cost));
    out.status = res.status;
    out.iterations = res.iterations;
    if (res.status == LpStatus::Optimal) {
      // value and primal are exact rationals; round each once at the end
      out.primal.resize(sf.n_user);
      Rational value = 0;
      for (std::size_t j = 0; j < sf.n_user; ++j) {
        Rational xj = res.x[j] + Rational(lb[j]);
        out.primal[j] = to_double(xj);
        value += Rational(lp.objective[j]) * xj;
      }
      out.value = to_double(value);
    }
  } else {
    auto res = detail::simplex_solve<double>(sf.lhs, sf.rhs, sf.cost);
    out.status = res.status;
    out.iterations = res.iterations;
    if (res.status == LpStatus::Optimal) {
      out.primal.resize(sf.n_user);
      for (std::size_t j = 0; j < sf.n_user; ++j) out.primal[j] = res.x[j] + lb[j];
      out.value = dot(lp.objective, out.primal);
    }
  }
  return out;
}

detail::StandardResult<Rational> solve_standard_exact(const Matrix<Rational>& a,
                                                      std::vector<Rational> b,
                                                      std::vector<Rational> c) {
  return detail::simplex_solve<Rational>(a, std::move(b), std::move(c));
}

namespace {

void check_marginals(const Vec& mu, const Vec& nu) {
  if (mu.empty() || nu.empty()) throw std::invalid_argument("transport: empty marginal");
  auto check = [](const Vec& w, const char* side) {
    double s = 0;
    for (double x : w) {
      if (!std::isfinite(x) || x < 0)
        throw std::invalid_argument(std::string("transport: bad weight on ") + side);
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument(std::string("transport: weights on ") + side +
                                  " do not sum to 1");
  };
  check(mu, "left");
  check(nu, "right");
}

template <class T>
struct TransportProblem {
  Matrix<T> a;
  std::vector<T> b, c;
};

// rows = all row sums then all column sums; the rank deficiency is handled by
// the phase-1 redundant-row treatment
template <class T, class CostAt>
TransportProblem<T> transport_standard(std::size_t m, std::size_t n, CostAt cost_at,
                                       const std::vector<T>& mu, const std::vector<T>& nu) {
  TransportProblem<T> tp;
  tp.a = Matrix<T>(m + n, m * n, T(0));
  tp.b.resize(m + n);
  tp.c.resize(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    tp.b[i] = mu[i];
    for (std::size_t j = 0; j < n; ++j) {
      tp.a(i, i * n + j) = T(1);
      tp.c[i * n + j] = cost_at(i, j);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    tp.b[m + j] = nu[j];
    for (std::size_t i = 0; i < m; ++i) tp.a(m + j, i * n + j) = T(1);
  }
  return tp;
}

}  // namespace

TransportResult solve_transport(const Mat& cost, const Vec& mu, const Vec& nu,
                                ArithmeticMode mode) {
  check_marginals(mu, nu);
  const std::size_t m = mu.size(), n = nu.size();
  if (cost.rows() != m || cost.cols() != n)
    throw std::invalid_argument("transport: cost dimensions disagree with marginals");
  require_finite(cost, "cost");

  TransportResult out;
  out.plan = Mat(m, n, 0.0);

  // a single column (or row) forces the plan outright
  if (n == 1 || m == 1) {
    double v = 0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double w = (n == 1) ? mu[i] : nu[j];
        out.plan(i, j) = w;
        v += cost(i, j) * w;
      }
    out.value = v;
    return out;
  }

  if (mode == ArithmeticMode::Rational) {
    // Rebalance the column marginal exactly: the equality system is solvable
    // only when both sides sum to the same rational, and check_marginals only
    // guarantees agreement to 1e-9.  A no-op for exactly representable input.
    auto muR = widen<Rational>(mu);
    auto nuR = widen<Rational>(nu);
    Rational sm(0), sn(0);
    for (const auto& v : muR) sm += v;
    for (const auto& v : nuR) sn += v;
    if (sm != sn) {
      Rational scale = sm / sn;
      for (auto& v : nuR) v *= scale;
    }
    auto tp = transport_standard<Rational>(
        m, n, [&](std::size_t i, std::size_t j) { return Rational(cost(i, j)); },
        muR, nuR);
    auto res = detail::simplex_solve<Rational>(tp.a, tp.b, tp.c);
    if (res.status != LpStatus::Optimal) throw LpError("transport: solver failed");
    out.iterations = res.iterations;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out.plan(i, j) = to_double(res.x[i * n + j]);
    out.value = to_double(res.value);
  } else {
    auto tp = transport_standard<double>(
        m, n, [&](std::size_t i, std::size_t j) { return cost(i, j); }, mu, nu);
    auto res = detail::simplex_solve<double>(tp.a, tp.b, tp.c);
    if (res.status != LpStatus::Optimal) throw LpError("transport: solver failed");
    out.iterations = res.iterations;
    double v = 0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double x = res.x[i * n + j];
        if (x < 0 && x > -1e-12) x = 0;
        out.plan(i, j) = x;
        v += cost(i, j) * x;
      }
    out.value = v;
  }
  return out;
}

ExactTransportResult solve_transport_exact(const Matrix<Rational>& cost,
                                           const std::vector<Rational>& mu,
                                           const std::vector<Rational>& nu) {
  const std::size_t m = mu.size(), n = nu.size();
  if (cost.rows() != m || cost.cols() != n)
    throw std::invalid_argument("transport: cost dimensions disagree with marginals");
  auto tp = transport_standard<Rational>(
      m, n, [&](std::size_t i, std::size_t j) { return cost(i, j); }, mu, nu);
  auto res = detail::simplex_solve<Rational>(tp.a, tp.b, tp.c);
  if (res.status != LpStatus::Optimal) throw LpError("transport: solver failed");
  ExactTransportResult out;
  out.iterations = res.iterations;
  out.value = res.value;
  out.plan = Matrix<Rational>(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.plan(i, j) = res.x[i * n + j];
  return out;
}

// ---------------------------------------------------------------------------
// Frank-Wolfe

namespace {

Mat northwest_corner(const Vec& mu, const Vec& nu) {
  const std::size_t m = mu.size(), n = nu.size();
  Mat plan(m, n, 0.0);
  Vec ru = mu, rv = nu;
  std::size_t i = 0, j = 0;
  while (i < m && j < n) {
    double t = std::min(ru[i], rv[j]);
    plan(i, j) = t;
    ru[i] -= t;
    rv[j] -= t;
    if (ru[i] <= rv[j])
      ++i;
    else
      ++j;
  }
  return plan;
}

double inner(const Mat& a, const Mat& b) {
  double s = 0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t k = 0; k < da.size(); ++k) s += da[k] * db[k];
  return s;
}

double golden_section(const std::function<double(double)>& h, double lo, double hi) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = h(c), fd = h(d);
  for (int it = 0; it < 120 && (b - a) > 1e-15 * (1 + hi); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = h(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = h(d);
    }
  }
  // endpoints matter: the minimizer is often exactly 0 or the cap
  double mid = 0.5 * (a + b);
  double best = mid, fbest = h(mid);
  if (h(lo) <= fbest) {
    best = lo;
    fbest = h(lo);
  }
  if (h(hi) <= fbest) best = hi;
  return best;
}

}  // namespace

FrankWolfeResult frank_wolfe(const Objective& f, const Gradient& grad, const Vec& mu,
                             const Vec& nu, const FrankWolfeOptions& opts) {
  check_marginals(mu, nu);
  const std::size_t m = mu.size(), n = nu.size();
  if (opts.gap_tol <= 0) throw std::invalid_argument("frank_wolfe: tol must be positive");

  FrankWolfeResult out;
  Mat pi = northwest_corner(mu, nu);
  if (!std::isfinite(f(pi))) throw std::invalid_argument("frank_wolfe: objective not finite");

  std::vector<Mat> verts{pi};
  Vec lambda{1.0};

  auto rebuild = [&] {
    Mat acc(m, n, 0.0);
    for (std::size_t v = 0; v < verts.size(); ++v) {
      const auto& d = verts[v].data();
      for (std::size_t k = 0; k < d.size(); ++k) acc.data()[k] += lambda[v] * d[k];
    }
    pi = std::move(acc);
  };

  auto step_length = [&](const Mat& dir, double hi, std::int64_t k) {
    if (hi <= 0) return 0.0;
    switch (opts.line_search) {
      case LineSearch::ClosedForm: {
        double g = opts.exact_step ? opts.exact_step(pi, dir) : 0.0;
        if (!std::isfinite(g)) g = 0.0;
        return std::min(std::max(g, 0.0), hi);
      }
      case LineSearch::Schedule:
        return std::min(2.0 / (static_cast<double>(k) + 2.0), hi);
      case LineSearch::Golden:
      default:
        return golden_section(
            [&](double t) {
              Mat trial = pi;
              const auto& dd = dir.data();
              for (std::size_t q = 0; q < dd.size(); ++q) trial.data()[q] += t * dd[q];
              return f(trial);
            },
            0.0, hi);
    }
  };

  for (std::int64_t k = 0; k < opts.max_iters; ++k) {
    Mat g = grad(pi);
    if (g.rows() != m || g.cols() != n)
      throw std::invalid_argument("frank_wolfe: gradient dimension mismatch");
    Mat s = solve_transport(g, mu, nu, ArithmeticMode::FloatingPoint).plan;

    Mat d_fw(m, n, 0.0);
    for (std::size_t q = 0; q < d_fw.data().size(); ++q)
      d_fw.data()[q] = s.data()[q] - pi.data()[q];
    double gap = -inner(g, d_fw);
    out.gap = gap;
    out.iterations = k;
    if (gap <= opts.gap_tol) {
      out.converged = true;
      break;
    }

    bool use_away = false;
    std::size_t away = 0;
    double away_score = 0.0;
    if (opts.away_steps) {
      double best = -1e300;
      for (std::size_t v = 0; v < verts.size(); ++v) {
        double sc = inner(g, verts[v]);
        if (sc > best) {
          best = sc;
          away = v;
        }
      }
      away_score = best - inner(g, pi);  // <g, pi - v_a> negated
      if (away_score > gap && lambda[away] < 1.0 - 1e-13) use_away = true;
    }

    Mat dir(m, n, 0.0);
    double hi;
    if (use_away) {
      const auto& vd = verts[away].data();
      for (std::size_t q = 0; q < dir.data().size(); ++q)
        dir.data()[q] = pi.data()[q] - vd[q];
      hi = lambda[away] / (1.0 - lambda[away]);
    } else {
      dir = d_fw;
      hi = 1.0;
    }

    double gamma = step_length(dir, hi, k);
    if (gamma <= 0 && use_away) {
      // away direction gave nothing; fall back to the FW direction
      use_away = false;
      dir = d_fw;
      gamma = step_length(dir, 1.0, k);
    }
    if (gamma <= 0) break;  // stationary to line-search resolution

    for (std::size_t q = 0; q < pi.data().size(); ++q) pi.data()[q] += gamma * dir.data()[q];

    if (use_away) {
      for (double& l : lambda) l *= (1.0 + gamma);
      lambda[away] -= gamma;
    } else {
      for (double& l : lambda) l *= (1.0 - gamma);
      std::size_t hit = verts.size();
      for (std::size_t v = 0; v < verts.size(); ++v)
        if (verts[v].data() == s.data()) {
          hit = v;
          break;
        }
      if (hit == verts.size()) {
        verts.push_back(s);
        lambda.push_back(0.0);
        hit = verts.size() - 1;
      }
      lambda[hit] += gamma;
    }

    bool dropped = false;
    for (std::size_t v = lambda.size(); v-- > 0;) {
      if (lambda[v] <= 1e-15) {
        lambda.erase(lambda.begin() + v);
        verts.erase(verts.begin() + v);
        dropped = true;
      }
    }
    double sum = 0;
    for (double l : lambda) sum += l;
    if (sum > 0)
      for (double& l : lambda) l /= sum;
    if (dropped || (k & 255) == 255) rebuild();
  }

  out.plan = pi;
  out.value = f(pi);
  return out;
}

void dump_lp(const LinearProgram& lp, std::ostream& os) {
  auto row = [&](const Mat& a, const Vec& b, std::size_t i, const char* rel) {
    for (std::size_t j = 0; j < a.cols(); ++j) os << (j ? " " : "  ") << a(i, j);
    os << " " << rel << " " << b[i] << "\n";
  };
  os << (lp.maximize ? "max" : "min");
  for (double c : lp.objective) os << " " << c;
  os << "\n";
  for (std::size_t i = 0; i < lp.eq_lhs.rows(); ++i) row(lp.eq_lhs, lp.eq_rhs, i, "=");
  for (std::size_t i = 0; i < lp.ineq_lhs.rows(); ++i) row(lp.ineq_lhs, lp.ineq_rhs, i, "<=");
}

}  // namespace aot
