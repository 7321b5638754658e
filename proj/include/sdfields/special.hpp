#pragma once

// Special-function helpers built on Boost.Math.

namespace sdfields::special {

/// Integral of t^{a-1} e^{-t} over [x1, x2] for 0 <= x1 <= x2 <= inf and any
/// real a. Returns +inf when the integral diverges (a <= 0 with x1 = 0).
double incomplete_gamma_between(double a, double x1, double x2);

/// Exponential integral E1(x) for x > 0.
double expint_e1(double x);

/// Beta function B(a, b) computed symmetrically in its arguments.
double beta(double a, double b);

}  // namespace sdfields::special
