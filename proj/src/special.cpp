#include "sdfields/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace sdfields::special {

namespace {

// Upper incomplete gamma Gamma(a, x) for x > 0 and any real a, using the
// downward recurrence Gamma(a, x) = (Gamma(a + 1, x) - x^a e^{-x}) / a for a < 0.
double upper(double a, double x) {
  if (std::isinf(x)) return 0.0;
  if (a > 0.0) return boost::math::tgamma(a, x);
  if (a == 0.0) return boost::math::expint(1, x);
  return (upper(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
}

}  // namespace

double incomplete_gamma_between(double a, double x1, double x2) {
  if (!(x2 > x1)) return 0.0;
  if (a <= 0.0) {
    if (x1 <= 0.0) return std::numeric_limits<double>::infinity();
    return upper(a, x1) - upper(a, x2);
  }
  // The lower function keeps relative accuracy for small arguments, the
  // upper one for large arguments.
  if (x2 <= std::max(1.0, a)) {
    return boost::math::tgamma_lower(a, x2) - (x1 > 0.0 ? boost::math::tgamma_lower(a, x1) : 0.0);
  }
  return (x1 > 0.0 ? boost::math::tgamma(a, x1) : boost::math::tgamma(a)) - upper(a, x2);
}

double expint_e1(double x) { return boost::math::expint(1, x); }

double beta(double a, double b) {
  return boost::math::beta(std::min(a, b), std::max(a, b));
}

}  // namespace sdfields::special
