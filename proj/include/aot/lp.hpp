#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "aot/matrix.hpp"
#include "aot/rational.hpp"
#include "aot/simplex.hpp"

namespace aot {

/// Floating point by default; Rational runs every pivot in exact arithmetic.
/// The environment variable ADAPTED_OT_RATIONAL=1 flips the process default.
enum class ArithmeticMode { FloatingPoint, Rational };

ArithmeticMode default_arithmetic_mode();

struct LinearProgram {
  Vec objective;
  Mat eq_lhs;
  Vec eq_rhs;
  Mat ineq_lhs;  // rows a with a.x <= b
  Vec ineq_rhs;
  Vec lower_bounds;  // empty means all zeros
  bool maximize = false;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;
  Vec primal;
  std::int64_t iterations = 0;
};

LpSolution solve_lp(const LinearProgram& lp);
LpSolution solve_lp(const LinearProgram& lp, ArithmeticMode mode);

/// Exact variant of the standard-form solver for oracle tests and the
/// zero-distance acceptance checks. Minimizes c.x over A x = b, x >= 0.
detail::StandardResult<Rational> solve_standard_exact(const Matrix<Rational>& a,
                                                      std::vector<Rational> b,
                                                      std::vector<Rational> c);

struct TransportResult {
  double value = 0.0;
  Mat plan;
  std::int64_t iterations = 0;
};

/// Optimal transport between discrete weight vectors: minimizes sum of
/// cost(i,j)*plan(i,j) over the transportation polytope.
TransportResult solve_transport(const Mat& cost, const Vec& mu, const Vec& nu,
                                ArithmeticMode mode = default_arithmetic_mode());

struct ExactTransportResult {
  Rational value;
  Matrix<Rational> plan;
  std::int64_t iterations = 0;
};

ExactTransportResult solve_transport_exact(const Matrix<Rational>& cost,
                                           const std::vector<Rational>& mu,
                                           const std::vector<Rational>& nu);

// ---------------------------------------------------------------------------
// Frank-Wolfe driver over transportation polytopes

enum class LineSearch {
  ClosedForm,  // caller supplies the exact minimizer along a segment
  Golden,      // derivative-free search on the convex restriction
  Schedule,    // classic 2/(k+2), kept for reference experiments
};

struct FrankWolfeOptions {
  std::int64_t max_iters = 10000;
  double gap_tol = 1e-8;
  bool away_steps = true;  // needed for the tight gap targets on quadratics
  LineSearch line_search = LineSearch::Golden;
  /// Exact step for ClosedForm: returns the unclamped minimizer gamma of
  /// f(point + gamma*direction).
  std::function<double(const Mat& point, const Mat& direction)> exact_step;
};

struct FrankWolfeResult {
  double value = 0.0;
  Mat plan;
  double gap = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(const Mat&)>;
using Gradient = std::function<Mat(const Mat&)>;

FrankWolfeResult frank_wolfe(const Objective& f, const Gradient& grad, const Vec& mu,
                             const Vec& nu, const FrankWolfeOptions& opts = {});

/// Plain-text tableau dump for debugging failing solves.
void dump_lp(const LinearProgram& lp, std::ostream& os);

}  // namespace aot
