#include "sdfields/kernel.hpp"

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "sdfields/errors.hpp"
#include "sdfields/special.hpp"

namespace sdfields {

const char* to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::ou: return "ou";
    case KernelFamily::gamma: return "gamma";
    case KernelFamily::fractional: return "fractional";
    case KernelFamily::custom: return "custom";
  }
  return "unknown";
}

const char* to_string(Continuity c) {
  switch (c) {
    case Continuity::lower: return "lower";
    case Continuity::upper: return "upper";
    case Continuity::neither: return "neither";
  }
  return "unknown";
}

namespace {

double positive_power(double x, double alpha) { return x > 0.0 ? std::pow(x, alpha) : 0.0; }

}  // namespace

double KernelSpec::profile(double t) const {
  switch (family) {
    case KernelFamily::ou:
      return t >= 0.0 ? scale * std::exp(-t) : 0.0;
    case KernelFamily::gamma:
      if (t < 0.0) return 0.0;
      if (t == 0.0) return alpha == 0.0 ? scale : 0.0;
      return scale * std::exp(-t) * std::pow(t, alpha);
    case KernelFamily::custom:
      if (stationary) {
        Vars v;
        v.t = t;
        return scale * expr.eval(v);
      }
      break;
    case KernelFamily::fractional:
      break;
  }
  throw InvalidArgument(std::string("kernel '") + label + "' is not stationary");
}

double KernelSpec::eval(double u, SPos s) const {
  const double t = (u - s.base) - s.offset;
  switch (family) {
    case KernelFamily::ou:
    case KernelFamily::gamma:
      return profile(t);
    case KernelFamily::fractional: {
      const double minus_s = -s.base - s.offset;
      return scale * (positive_power(t, alpha) - positive_power(minus_s, alpha));
    }
    case KernelFamily::custom: {
      if (stationary) return (t < custom_support.lo || t > custom_support.hi) ? 0.0 : profile(t);
      const double sv = s.value();
      if (sv < custom_support.lo || sv > custom_support.hi) return 0.0;
      Vars v;
      v.u = u;
      v.s = sv;
      return scale * expr.eval(v);
    }
  }
  return 0.0;
}

std::optional<cplx> KernelSpec::fourier(double xi) const {
  switch (family) {
    case KernelFamily::ou: return scale * gamma_kernel_fourier(0.0, xi);
    case KernelFamily::gamma: return scale * gamma_kernel_fourier(alpha, xi);
    default: return std::nullopt;
  }
}

Interval KernelSpec::s_support(const std::vector<double>& us) const {
  double umax = -kInf;
  for (double u : us) umax = std::max(umax, u);
  switch (family) {
    case KernelFamily::ou:
    case KernelFamily::gamma:
      return {-kInf, umax};
    case KernelFamily::fractional:
      return {-kInf, std::max(umax, 0.0)};
    case KernelFamily::custom: {
      if (!stationary) return custom_support;
      double umin = kInf;
      for (double u : us) umin = std::min(umin, u);
      return {umin - custom_support.hi, umax - custom_support.lo};
    }
  }
  return {};
}

std::vector<double> KernelSpec::s_breaks(const std::vector<double>& us) const {
  std::vector<double> b(us.begin(), us.end());
  if (family == KernelFamily::fractional) b.push_back(0.0);
  if (family == KernelFamily::custom) {
    std::vector<double> pts = custom_breaks;
    for (double x : {custom_support.lo, custom_support.hi}) {
      if (std::isfinite(x)) pts.push_back(x);
    }
    if (stationary) {
      // Breaks are given in t = u - s.
      for (double u : us) {
        for (double t : pts) b.push_back(u - t);
      }
    } else {
      b.insert(b.end(), pts.begin(), pts.end());
    }
  }
  return b;
}

double KernelSpec::cell_average(double u, double a, double b) const {
  const double width = b - a;
  if (!(width > 0.0)) throw InvalidArgument("cell_average: empty cell");
  switch (family) {
    case KernelFamily::ou: {
      const double t1 = std::max(u - b, 0.0);
      const double t2 = std::max(u - a, 0.0);
      if (t2 <= t1) return 0.0;
      // e^{-t1} - e^{-t2} without cancellation.
      return scale * std::exp(-t1) * -std::expm1(-(t2 - t1)) / width;
    }
    case KernelFamily::gamma: {
      const double t1 = std::max(u - b, 0.0);
      const double t2 = std::max(u - a, 0.0);
      if (t2 <= t1) return 0.0;
      return scale * special::incomplete_gamma_between(alpha + 1.0, t1, t2) / width;
    }
    case KernelFamily::fractional: {
      const double p = alpha + 1.0;
      auto part = [&](double c) {
        return (positive_power(c - a, p) - positive_power(c - b, p)) / p;
      };
      return scale * (part(u) - part(0.0)) / width;
    }
    case KernelFamily::custom:
      return eval(u, 0.5 * (a + b));
  }
  return 0.0;
}

KernelSpec KernelSpec::scaled(double c) const {
  KernelSpec k = *this;
  k.scale *= c;
  return k;
}

KernelSpec ou_kernel() {
  KernelSpec k;
  k.family = KernelFamily::ou;
  k.continuity = Continuity::upper;
  k.stationary = true;
  k.label = "ou";
  return k;
}

KernelSpec gamma_kernel(double alpha) {
  if (!(alpha > -1.0)) throw InvalidArgument("gamma kernel needs alpha > -1");
  KernelSpec k;
  k.family = KernelFamily::gamma;
  k.alpha = alpha;
  // alpha > 0: continuous; alpha = 0: right-continuous jump at u = s;
  // alpha < 0: zero for u <= s and unbounded as u decreases to s.
  k.continuity = alpha < 0.0 ? Continuity::lower : Continuity::upper;
  k.stationary = true;
  k.label = "gamma";
  return k;
}

KernelSpec fractional_kernel(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw InvalidArgument("fractional kernel needs alpha in (0, 1/2)");
  KernelSpec k;
  k.family = KernelFamily::fractional;
  k.alpha = alpha;
  k.continuity = Continuity::upper;
  k.stationary = false;
  k.label = "fractional";
  return k;
}

KernelSpec custom_kernel(const Expression& expr, Continuity continuity, bool stationary,
                         Interval support, std::vector<double> breaks) {
  if (stationary && (expr.uses('u') || expr.uses('s')))
    throw ConfigParse("a stationary custom kernel must be written in t = u - s only");
  if (!stationary && expr.uses('t'))
    throw ConfigParse("a non-stationary custom kernel must be written in u and s");
  KernelSpec k;
  k.family = KernelFamily::custom;
  k.expr = expr;
  k.continuity = continuity;
  k.stationary = stationary;
  k.custom_support = support;
  k.custom_breaks = std::move(breaks);
  k.label = "custom";
  return k;
}

cplx gamma_kernel_fourier(double alpha, double xi) {
  if (!(alpha > -1.0)) throw InvalidArgument("gamma_kernel_fourier needs alpha > -1");
  return boost::math::tgamma(alpha + 1.0) / std::sqrt(2.0 * M_PI) *
         std::pow(cplx(1.0, -xi), -alpha - 1.0);
}

}  // namespace sdfields
