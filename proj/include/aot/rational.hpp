#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace aot {

/// Exact arithmetic scalar for the rational solver mode. Conversion from
/// double is exact (every finite double is a rational), so feeding the solver
/// double-typed inputs loses nothing.
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(double x) { return x; }

inline Rational rat_abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

/// |x|^p for integer p >= 1. The rational mode only supports integer orders;
/// callers validate before entering the exact path.
inline Rational rat_pow_abs(const Rational& x, int p) {
  Rational a = rat_abs(x);
  Rational out(1);
  for (int i = 0; i < p; ++i) out *= a;
  return out;
}

}  // namespace aot
