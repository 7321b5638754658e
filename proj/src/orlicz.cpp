#include "sdfields/orlicz.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "sdfields/errors.hpp"

namespace sdfields {

namespace {

double moment(const LevySeed& seed, int side, double k, double lo, double hi) {
  auto r = seed.rho.side_moment(side, k, lo, hi);
  if (r.status == quad::Status::diverged) return kInf;
  return r.value;
}

// Contribution of one side of rho to the integral of tau(y a) - a tau(y), a > 0.
double drift_side(const LevySeed& seed, int side, double a) {
  const double y1 = 1.0 / a;
  if (a <= 1.0) {
    return a * (moment(seed, side, 1.0, 1.0, y1) - moment(seed, side, 0.0, 1.0, y1)) +
           (1.0 - a) * moment(seed, side, 0.0, y1, kInf);
  }
  return moment(seed, side, 0.0, y1, 1.0) - a * moment(seed, side, 1.0, y1, 1.0) +
         (1.0 - a) * moment(seed, side, 0.0, 1.0, kInf);
}

bool drift_vanishes(const LevySeed& seed) {
  return seed.gamma == 0.0 && (seed.rho.is_zero() || seed.rho.symmetric);
}

Interval intersect_control(const OrliczContext& ctx, const SFunction& f) {
  if (ctx.basis.control.dim != 1)
    throw InvalidArgument("integrands on S require a one-dimensional control measure");
  return {std::max(f.support.lo, ctx.basis.control.lo[0]),
          std::min(f.support.hi, ctx.basis.control.hi[0])};
}

std::vector<double> control_breaks(const OrliczContext& ctx, const SFunction& f) {
  std::vector<double> b = f.breaks;
  for (double x : {ctx.basis.control.lo[0], ctx.basis.control.hi[0]}) {
    if (std::isfinite(x)) b.push_back(x);
  }
  return b;
}

}  // namespace

OrliczContext OrliczContext::make(LevyQuadruplet basis, int p) {
  if (p < 0 || p > 2) throw InvalidArgument("Orlicz order p must be 0, 1 or 2");
  if (p > 0) {
    std::vector<Point> samples;
    if (basis.factorizable) {
      samples.push_back(point1(0.0));
    } else {
      for (double s : {-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0}) {
        Point pt = point1(s);
        if (basis.control.contains(pt)) samples.push_back(pt);
      }
    }
    for (const Point& s : samples) {
      auto check = moment_check(basis.seed(s)->rho, [p](double y) { return std::pow(y, p); }, 1.0, kInf);
      if (check.verdict == MomentVerdict::fails)
        throw IntegrabilityFailure("rho(s, .) has an infinite absolute moment of order " + std::to_string(p));
    }
  }
  OrliczContext ctx;
  ctx.basis = std::move(basis);
  ctx.p = p;
  return ctx;
}

SFunction kernel_section(const KernelSpec& k, double u) {
  SFunction out;
  out.f = [k, u](SPos s) { return k.eval(u, s); };
  out.support = k.s_support({u});
  out.breaks = k.s_breaks({u});
  return out;
}

SFunction plain_function(std::function<double(double)> f, Interval support, std::vector<double> breaks) {
  SFunction out;
  out.f = [f = std::move(f)](SPos s) { return f(s.value()); };
  out.support = support;
  out.breaks = std::move(breaks);
  return out;
}

double drift_functional(const LevySeed& seed, double r) {
  if (r == 0.0) return 0.0;
  const double a = std::abs(r);
  double v = seed.gamma * a;
  if (!seed.rho.is_zero()) v += drift_side(seed, +1, a) - drift_side(seed, -1, a);
  return r > 0.0 ? v : -v;
}

double sup_drift(const LevySeed& seed, double r) {
  const double a = std::abs(r);
  if (a == 0.0 || drift_vanishes(seed)) return 0.0;
  if (seed.rho.is_zero()) return std::abs(seed.gamma) * a;
  // |h| is even, so the supremum runs over c in [0, 1]: a 65-point scan
  // followed by golden-section refinement around the best scan point.
  constexpr int kGrid = 64;
  auto value = [&](double c) { return std::abs(drift_functional(seed, c * a)); };
  double best = 0.0;
  int best_i = 0;
  for (int i = 1; i <= kGrid; ++i) {
    const double v = value(static_cast<double>(i) / kGrid);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  double lo = std::max(0.0, (best_i - 1.0) / kGrid);
  double hi = std::min(1.0, (best_i + 1.0) / kGrid);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  double f1 = value(x1);
  double f2 = value(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = value(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = value(x2);
    }
  }
  return std::max({best, f1, f2});
}

JumpTerms jump_terms(const LevySeed& seed, double r, int p) {
  const double a = std::abs(r);
  if (a == 0.0 || seed.rho.is_zero()) return {0.0, 0.0};
  const double y1 = 1.0 / a;
  auto origin = seed.rho.abs_moment(2.0, 0.0, y1);
  auto tail = seed.rho.abs_moment(static_cast<double>(p), y1, kInf);
  const double o = origin.status == quad::Status::diverged ? kInf : a * a * origin.value;
  const double t = tail.status == quad::Status::diverged ? kInf : std::pow(a, p) * tail.value;
  return {o, t};
}

double H_eval(const OrliczContext& ctx, double r, const Point& s) {
  if (!std::isfinite(r)) throw InvalidArgument("H_eval: r must be finite");
  return std::abs(drift_functional(*ctx.basis.seed(s), r));
}

double phi_p_eval(const OrliczContext& ctx, double r, const Point& s) {
  if (!(r >= 0.0)) throw InvalidArgument("phi_p_eval: r must be nonnegative");
  if (r == 0.0) return 0.0;
  const auto seed = ctx.basis.seed(s);
  const JumpTerms j = jump_terms(*seed, r, ctx.p);
  return sup_drift(*seed, r) + seed->b * seed->b * r * r + j.origin + j.tail;
}

const char* to_string(Member m) {
  switch (m) {
    case Member::yes: return "yes";
    case Member::no: return "no";
    case Member::inconclusive: return "inconclusive";
  }
  return "unknown";
}

const char* to_string(DivergingTerm t) {
  switch (t) {
    case DivergingTerm::drift_H: return "drift_H";
    case DivergingTerm::gaussian: return "gaussian";
    case DivergingTerm::jump_tail: return "jump_tail";
    case DivergingTerm::jump_origin: return "jump_origin";
  }
  return "unknown";
}

quad::Result<double> modular(const OrliczContext& ctx, const SFunction& f, double a) {
  const Interval dom = intersect_control(ctx, f);
  auto g = [&](SPos s) {
    const double fs = f(s);
    if (fs == 0.0) return 0.0;
    const Point pt = point1(s.value());
    const double c = ctx.basis.control.density_at(pt);
    if (c == 0.0) return 0.0;
    return c * phi_p_eval(ctx, std::abs(fs) / a, pt);
  };
  return integrate_s<double>(g, dom, control_breaks(ctx, f));
}

IntegrabilityReport phi_integral(const OrliczContext& ctx, const SFunction& f, bool with_norm) {
  IntegrabilityReport rep;
  const Interval dom = intersect_control(ctx, f);
  const auto breaks = control_breaks(ctx, f);

  // term: 0 drift, 1 gaussian, 2 jump origin, 3 jump tail
  auto term = [&](int which) {
    auto g = [&](SPos s) {
      const double fs = f(s);
      if (fs == 0.0) return 0.0;
      const Point pt = point1(s.value());
      const double c = ctx.basis.control.density_at(pt);
      if (c == 0.0) return 0.0;
      const auto seed = ctx.basis.seed(pt);
      const double r = std::abs(fs);
      switch (which) {
        case 0: return c * sup_drift(*seed, r);
        case 1: return c * seed->b * seed->b * r * r;
        case 2: return c * jump_terms(*seed, r, ctx.p).origin;
        default: return c * jump_terms(*seed, r, ctx.p).tail;
      }
    };
    return integrate_s<double>(g, dom, breaks);
  };

  const DivergingTerm tags[4] = {DivergingTerm::drift_H, DivergingTerm::gaussian,
                                 DivergingTerm::jump_origin, DivergingTerm::jump_tail};
  double* slots[4] = {&rep.drift_term, &rep.gaussian_term, &rep.jump_origin_term, &rep.jump_tail_term};
  bool inconclusive = false;
  // Report the Gaussian and jump terms ahead of the drift term: a divergent
  // drift is usually a consequence of a divergent jump integral.
  for (int which : {1, 2, 3, 0}) {
    auto r = term(which);
    *slots[which] = r.value;
    if (r.status == quad::Status::diverged || !std::isfinite(r.value)) {
      *slots[which] = kInf;
      if (!rep.diverging_term) rep.diverging_term = tags[which];
    } else if (r.status == quad::Status::inconclusive) {
      inconclusive = true;
    }
  }
  if (rep.diverging_term) {
    rep.member = Member::no;
    rep.phi_integral = kInf;
    rep.norm = kInf;
    return rep;
  }
  rep.phi_integral = rep.drift_term + rep.gaussian_term + rep.jump_origin_term + rep.jump_tail_term;
  rep.member = inconclusive ? Member::inconclusive : Member::yes;
  if (with_norm) rep.norm = luxemburg_norm(ctx, f);
  return rep;
}

double luxemburg_norm(const OrliczContext& ctx, const SFunction& f) {
  auto m = [&](double a) { return modular(ctx, f, a); };
  auto first = m(1.0);
  if (first.status == quad::Status::diverged || !std::isfinite(first.value)) return kInf;
  if (first.value == 0.0) return 0.0;

  // Bracket the unit-ball crossing on a logarithmic scale. Phi_p grows at
  // most quadratically, so the modular at a >= 1 is at least m(1) / a^2.
  double lo, hi, m_lo, m_hi;
  if (first.value > 1.0) {
    lo = std::max(1.0, std::sqrt(first.value) * 0.999);
    m_lo = lo == 1.0 ? first.value : m(lo).value;
    if (m_lo <= 1.0) {
      hi = lo;
      m_hi = m_lo;
      lo = 1.0;
      m_lo = first.value;
    } else {
      hi = lo * 2.0;
      m_hi = m(hi).value;
      while (m_hi > 1.0) {
        lo = hi;
        m_lo = m_hi;
        hi *= 2.0;
        if (hi > 1e300) return kInf;
        m_hi = m(hi).value;
      }
    }
  } else {
    hi = 1.0;
    m_hi = first.value;
    lo = 0.5;
    m_lo = m(lo).value;
    while (m_lo <= 1.0) {
      hi = lo;
      m_hi = m_lo;
      lo *= 0.5;
      if (lo < 1e-300) return 0.0;
      m_lo = m(lo).value;
    }
  }
  if (m_hi == 1.0) return hi;

  // Bracketing solve of m(e^x) = 1 on x = log a to relative accuracy 1e-9.
  auto g = [&](double x) { return m(std::exp(x)).value - 1.0; };
  auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-9; };
  std::uintmax_t iters = 200;
  auto [x0, x1] = boost::math::tools::toms748_solve(g, std::log(lo), std::log(hi), m_lo - 1.0,
                                                    m_hi - 1.0, tol, iters);
  return std::exp(0.5 * (x0 + x1));
}

// ---------------------------------------------------------------------------

GammaIntegrability gamma_kernel_integrable(const LevySeed& seed, double alpha) {
  if (!(alpha > -1.0)) throw InvalidArgument("gamma_kernel_integrable needs alpha > -1");
  GammaIntegrability out;
  const auto logm = log_moment_check(seed.rho);
  if (logm.verdict != MomentVerdict::holds) {
    out.criterion = "log_moment";
    out.reason = logm.verdict == MomentVerdict::fails
                     ? "the integral of log|x| over |x| > 1 diverges"
                     : "the integral of log|x| over |x| > 1 could not be shown finite";
    return out;
  }
  if (alpha > -0.5 + 1e-12) {
    out.yes = true;
    out.criterion = "alpha_above_half";
    out.reason = "alpha > -1/2 and the log-moment condition holds";
    return out;
  }
  const bool half = std::abs(alpha + 0.5) <= 1e-12;
  out.criterion = half ? "alpha_half_log" : "alpha_below_half_power";
  if (seed.b != 0.0) {
    out.reason = half ? "b != 0 at alpha = -1/2" : "b != 0 for alpha in (-1, -1/2)";
    return out;
  }
  MomentCheck mc;
  if (half) {
    mc = moment_check(seed.rho, [](double y) { return y * y * std::abs(std::log(y)); }, 0.0, 1.0);
  } else {
    const double e = -1.0 / alpha;
    mc = moment_check(seed.rho, [e](double y) { return std::pow(y, e); }, 0.0, 1.0);
  }
  if (mc.verdict == MomentVerdict::holds) {
    out.yes = true;
    out.reason = half ? "b = 0 and the integral of x^2 |log|x|| over |x| <= 1 is finite"
                      : "b = 0 and the integral of |x|^(-1/alpha) over |x| <= 1 is finite";
  } else {
    out.reason = half ? "the integral of x^2 |log|x|| over |x| <= 1 is not finite"
                      : "the integral of |x|^(-1/alpha) over |x| <= 1 is not finite";
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Interval profile_support(const KernelSpec& g) {
  if (!g.stationary) throw InvalidArgument("Fourier checks need a stationary kernel g(u - s)");
  switch (g.family) {
    case KernelFamily::ou:
    case KernelFamily::gamma:
      return {0.0, kInf};
    default:
      return g.custom_support;
  }
}

}  // namespace

cplx fourier_quadrature(const KernelSpec& g, double xi) {
  const Interval sup = profile_support(g);
  auto f = [&](double t) { return g.profile(t) * std::exp(cplx(0.0, t * xi)); };
  auto r = quad::integrate<cplx>(f, sup.lo, sup.hi, g.custom_breaks);
  if (r.status == quad::Status::diverged) throw NotL1("Fourier integral diverges");
  return r.value / std::sqrt(2.0 * M_PI);
}

FourierCheck fourier_nonvanishing_check(const KernelSpec& g, const std::vector<double>& xi_grid) {
  const Interval sup = profile_support(g);
  auto l1 = quad::integrate<double>([&](double t) { return std::abs(g.profile(t)); }, sup.lo, sup.hi,
                                    g.custom_breaks);
  if (l1.status == quad::Status::diverged || !std::isfinite(l1.value))
    throw NotL1("the kernel profile is not integrable");

  constexpr double kZero = 1e-12;
  auto transform = [&](double xi) {
    if (auto c = g.fourier(xi)) return *c;
    return fourier_quadrature(g, xi);
  };
  FourierCheck out;
  out.values.reserve(xi_grid.size());
  for (double xi : xi_grid) out.values.push_back(transform(xi));
  auto record = [&](double xi) {
    for (double v : out.vanishes_at) {
      if (std::abs(v - xi) <= 1e-6 * std::max(1.0, std::abs(xi))) return;
    }
    out.vanishes_at.push_back(xi);
  };
  for (std::size_t i = 0; i < xi_grid.size(); ++i) {
    if (std::abs(out.values[i]) < kZero) record(xi_grid[i]);
  }
  // Refine interior local minima of |g^| between grid points.
  for (std::size_t i = 1; i + 1 < xi_grid.size(); ++i) {
    const double m = std::abs(out.values[i]);
    if (m > std::abs(out.values[i - 1]) || m > std::abs(out.values[i + 1])) continue;
    const double a = xi_grid[i - 1];
    const double b = xi_grid[i + 1];
    auto sq = [&](double xi) { return std::norm(transform(xi)); };
    auto [xm, fm] = boost::math::tools::brent_find_minima(sq, a, b, 52);
    double best_xi = xm;
    double best = std::sqrt(fm);
    // A simple zero shows up as a sign change of the real or imaginary part.
    const double w = std::max(1e-3, 1e-3 * std::abs(xm));
    for (int part = 0; part < 2; ++part) {
      auto comp = [&](double xi) {
        const cplx v = transform(xi);
        return part == 0 ? v.real() : v.imag();
      };
      const double l = std::max(a, xm - w);
      const double r = std::min(b, xm + w);
      const double cl = comp(l);
      const double cr = comp(r);
      if (!(cl * cr < 0.0)) continue;
      std::uintmax_t iters = 100;
      auto tol = [](double x, double y) { return std::abs(x - y) <= 4e-16 * std::max(1.0, std::abs(x)); };
      auto [r0, r1] = boost::math::tools::toms748_solve(comp, l, r, cl, cr, tol, iters);
      const double root = 0.5 * (r0 + r1);
      const double v = std::abs(transform(root));
      if (v < best) {
        best = v;
        best_xi = root;
      }
    }
    if (best < kZero) record(best_xi);
  }
  std::sort(out.vanishes_at.begin(), out.vanishes_at.end());
  out.nonvanishing = out.vanishes_at.empty();
  return out;
}

}  // namespace sdfields
