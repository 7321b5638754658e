#include "sdfields/levy_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sdfields/errors.hpp"
#include "sdfields/special.hpp"

namespace sdfields {

Box Box::scaled(double q) const {
  Box b = *this;
  for (std::size_t i = 0; i < b.lo.size(); ++i) {
    b.lo[i] = q * lo[i];
    b.hi[i] = q * hi[i];
    if (b.lo[i] > b.hi[i]) std::swap(b.lo[i], b.hi[i]);
  }
  return b;
}

Region Region::scaled(double q) const {
  Region r;
  r.boxes.reserve(boxes.size());
  for (const Box& b : boxes) r.boxes.push_back(b.scaled(q));
  return r;
}

std::vector<double> truncate(std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = truncate(x[i]);
  return out;
}

// ---------------------------------------------------------------------------
// LevyMeasure1D

bool LevyMeasure1D::is_zero() const {
  if (density) return false;
  return std::all_of(atoms.begin(), atoms.end(), [](const Atom& a) { return a.mass == 0.0; });
}

double LevyMeasure1D::density_at(double x) const {
  if (!density || x == 0.0 || x < support.lo || x > support.hi) return 0.0;
  return density(x);
}

quad::Result<double> LevyMeasure1D::side_moment(int side, double k, double lo, double hi,
                                                const quad::Options& opt) const {
  quad::Result<double> out;
  if (!(hi > lo)) return out;
  const SideMoment& closed = side > 0 ? positive_moment : negative_moment;
  if (density) {
    // Part of the support on this side, in |y| coordinates.
    const double s_lo = side > 0 ? std::max(0.0, support.lo) : std::max(0.0, -support.hi);
    const double s_hi = side > 0 ? std::max(0.0, support.hi) : std::max(0.0, -support.lo);
    const double a = std::max(lo, s_lo);
    const double b = std::min(hi, s_hi);
    if (b > a) {
      if (closed) {
        out.value = closed(k, a, b);
        if (!std::isfinite(out.value)) out.status = quad::Status::diverged;
      } else {
        std::vector<double> cuts{1.0};
        for (double x : breaks) cuts.push_back(side * x);
        auto f = [&](double y) {
          const double d = density(side * y);
          return d == 0.0 ? 0.0 : std::pow(y, k) * d;
        };
        out = quad::integrate<double>(f, a, b, cuts, opt);
      }
    }
  }
  for (const Atom& at : atoms) {
    const double y = side * at.location;
    if (y > lo && y <= hi) out.value += std::pow(y, k) * at.mass;
  }
  return out;
}

quad::Result<double> LevyMeasure1D::abs_moment(double k, double lo, double hi,
                                               const quad::Options& opt) const {
  auto r = side_moment(+1, k, lo, hi, opt);
  auto n = side_moment(-1, k, lo, hi, opt);
  r.value += n.value;
  r.error += n.error;
  r.status = quad::worst(r.status, n.status);
  return r;
}

double LevyMeasure1D::mass(double a, double b) const {
  if (!(b >= a)) return 0.0;
  if (a <= 0.0 && b >= 0.0) throw InvalidArgument("mass: interval must not contain the origin");
  double total = 0.0;
  if (density && b > a) {
    const int side = a > 0.0 ? 1 : -1;
    const double lo = side > 0 ? a : -b;
    const double hi = side > 0 ? b : -a;
    const SideMoment& closed = side > 0 ? positive_moment : negative_moment;
    if (closed) {
      const double s_lo = side > 0 ? std::max(0.0, support.lo) : std::max(0.0, -support.hi);
      const double s_hi = side > 0 ? std::max(0.0, support.hi) : std::max(0.0, -support.lo);
      const double x = std::max(lo, s_lo);
      const double y = std::min(hi, s_hi);
      if (y > x) total += closed(0.0, x, y);
    } else {
      total += side_moment(side, 0.0, lo, hi).value;
    }
  }
  for (const Atom& at : atoms) {
    if (at.location >= a && at.location <= b) total += at.mass;
  }
  return total;
}

cplx LevyMeasure1D::jump_exponent(double theta, const quad::Options& opt) const {
  if (theta == 0.0) return {0.0, 0.0};
  if (jump_exponent_closed) {
    cplx v = jump_exponent_closed(theta);
    for (const Atom& a : atoms) {
      v += a.mass * (std::exp(cplx(0.0, theta * a.location)) - 1.0 -
                     cplx(0.0, theta * truncate(a.location)));
    }
    return v;
  }
  // Near the origin tau(x) = x and the integrand is O(x^2); it is evaluated
  // in a cancellation-free form there.
  std::function<cplx(double)> g = [theta](double x) -> cplx {
    const double tx = theta * x;
    if (std::abs(tx) < 1e-3) {
      const double t2 = tx * tx;
      const cplx series(-t2 / 2.0 + t2 * t2 / 24.0, -t2 * tx / 6.0 + t2 * t2 * tx / 120.0);
      return std::abs(x) <= 1.0 ? series : series + cplx(0.0, tx - theta * truncate(x));
    }
    return std::exp(cplx(0.0, tx)) - 1.0 - cplx(0.0, theta * truncate(x));
  };
  auto r = integrate<cplx>(g, opt);
  if (r.status == quad::Status::diverged) {
    throw QuadratureDivergence("jump integral diverges: the measure '" + label +
                               "' fails the 1 ^ x^2 integrability check");
  }
  return r.value;
}

// ---------------------------------------------------------------------------
// ControlMeasure

double ControlMeasure::density_at(const Point& s) const {
  if (!contains(s)) return 0.0;
  if (constant) return constant_value;
  return density(s);
}

bool ControlMeasure::contains(const Point& s) const {
  for (int i = 0; i < dim; ++i) {
    if (s[i] < lo[i] || s[i] > hi[i]) return false;
  }
  return true;
}

namespace {

// Iterated one-dimensional quadrature over the first `dim` coordinates.
template <class T, class F>
quad::Result<T> integrate_box(F& f, int dim, const Point& a, const Point& b, const quad::Options& opt,
                              int level = 0, Point current = {}) {
  if (level == dim - 1) {
    auto g = [&](double x) {
      Point p = current;
      p[level] = x;
      return f(p);
    };
    return quad::integrate<T>(g, a[level], b[level], {}, opt);
  }
  quad::Result<T> inner_total;
  auto g = [&](double x) {
    Point p = current;
    p[level] = x;
    auto r = integrate_box<T>(f, dim, a, b, opt, level + 1, p);
    inner_total.status = quad::worst(inner_total.status, r.status);
    return r.value;
  };
  auto r = quad::integrate<T>(g, a[level], b[level], {}, opt);
  r.status = quad::worst(r.status, inner_total.status);
  return r;
}

}  // namespace

double ControlMeasure::mass(const Point& a, const Point& b, const quad::Options& opt) const {
  Point x = a;
  Point y = b;
  for (int i = 0; i < dim; ++i) {
    x[i] = std::max(a[i], lo[i]);
    y[i] = std::min(b[i], hi[i]);
    if (!(y[i] > x[i])) return 0.0;
  }
  if (constant) {
    double v = constant_value;
    for (int i = 0; i < dim; ++i) v *= (y[i] - x[i]);
    return v;
  }
  auto f = [this](const Point& p) { return density(p); };
  auto r = integrate_box<double>(f, dim, x, y, opt);
  if (r.status == quad::Status::diverged) {
    throw QuadratureDivergence("control measure is infinite on a bounded rectangle");
  }
  return r.value;
}

// ---------------------------------------------------------------------------
// LevyQuadruplet

std::vector<std::string> LevyQuadruplet::validate(int samples) const {
  std::vector<std::string> issues;
  // Sample points inside the control domain (clamped to a bounded window).
  std::vector<Point> pts;
  for (int k = 0; k < samples; ++k) {
    Point p{};
    for (int i = 0; i < control.dim; ++i) {
      const double lo = std::isfinite(control.lo[i]) ? control.lo[i] : -10.0;
      const double hi = std::isfinite(control.hi[i]) ? control.hi[i] : lo + 20.0;
      const double w = (k + 0.5) / samples;
      p[i] = lo + w * (std::min(hi, std::max(lo, hi)) - lo);
    }
    pts.push_back(p);
  }
  auto first = seed(pts.front());
  for (const Point& p : pts) {
    auto sd = seed(p);
    if (sd->b < 0.0) issues.push_back("b(s) is negative");
    if (poissonian && sd->b != 0.0) issues.push_back("poissonian basis has b(s) != 0");
    if (factorizable) {
      if (sd->gamma != first->gamma || sd->b != first->b)
        issues.push_back("factorizable basis has s-dependent gamma or b");
      for (double x : {-2.0, -0.5, 0.3, 1.7}) {
        if (sd->rho.density_at(x) != first->rho.density_at(x)) {
          issues.push_back("factorizable basis has s-dependent rho");
          break;
        }
      }
    }
    if (!control.constant && control.density_at(p) < 0.0)
      issues.push_back("control density is negative");
    for (const Atom& a : sd->rho.atoms) {
      if (a.mass < 0.0) issues.push_back("negative atom mass");
      if (a.location == 0.0) issues.push_back("atom at the origin");
    }
    if (centered && !seed_is_centered(*sd)) issues.push_back("centered flag set but seed mean is not 0");
  }
  if (homogeneous && (!factorizable || !control.constant))
    issues.push_back("homogeneous basis must be factorizable with constant control density");
  std::sort(issues.begin(), issues.end());
  issues.erase(std::unique(issues.begin(), issues.end()), issues.end());
  return issues;
}

LevyQuadruplet make_factorizable(LevySeed seed, ControlMeasure control, std::string label) {
  LevyQuadruplet q;
  auto shared = std::make_shared<const LevySeed>(std::move(seed));
  q.seed_at = [shared](const Point&) { return shared; };
  q.factorizable = true;
  q.homogeneous = control.constant;
  q.poissonian = shared->b == 0.0;
  try {
    q.centered = seed_is_centered(*shared);
  } catch (const IntegrabilityFailure&) {
    q.centered = false;
  }
  q.control = std::move(control);
  q.label = std::move(label);
  return q;
}

double centering_drift(const LevyMeasure1D& m) {
  auto m1 = m.side_moment(+1, 1.0, 1.0, kInf);
  auto m0 = m.side_moment(+1, 0.0, 1.0, kInf);
  auto n1 = m.side_moment(-1, 1.0, 1.0, kInf);
  auto n0 = m.side_moment(-1, 0.0, 1.0, kInf);
  for (const auto* r : {&m1, &n1}) {
    if (r->status != quad::Status::converged || !std::isfinite(r->value))
      throw IntegrabilityFailure("centering requires a finite first moment");
  }
  return -((m1.value - m0.value) - (n1.value - n0.value));
}

double tau_integral(const LevyMeasure1D& m) {
  double total = 0.0;
  for (int side : {+1, -1}) {
    auto near = m.side_moment(side, 1.0, 0.0, 1.0);
    auto far = m.side_moment(side, 0.0, 1.0, kInf);
    if (near.status != quad::Status::converged || !std::isfinite(near.value))
      throw IntegrabilityFailure("the integral of |x| over |x| <= 1 diverges");
    total += side * (near.value + far.value);
  }
  return total;
}

bool seed_is_centered(const LevySeed& seed) {
  const double c = centering_drift(seed.rho);
  return std::abs(seed.gamma - c) <= 1e-9 * (1.0 + std::abs(c));
}

// ---------------------------------------------------------------------------
// Canonical measures

LevyMeasure1D zero_measure() {
  LevyMeasure1D m;
  m.symmetric = true;
  m.label = "zero";
  m.jump_exponent_closed = [](double) { return cplx(0.0, 0.0); };
  return m;
}

LevyMeasure1D dirac_measure(double location, double mass) {
  if (location == 0.0) throw InvalidArgument("atoms at the origin are not allowed");
  if (mass < 0.0) throw InvalidArgument("atom mass must be nonnegative");
  LevyMeasure1D m;
  m.atoms.push_back({location, mass});
  m.label = "dirac";
  m.jump_exponent_closed = [](double) { return cplx(0.0, 0.0); };
  return m;
}

LevyMeasure1D exponential_measure(double rate, double mean) {
  if (!(rate >= 0.0) || !(mean > 0.0)) throw InvalidArgument("exponential measure needs rate >= 0, mean > 0");
  LevyMeasure1D m;
  m.density = [rate, mean](double x) { return x > 0.0 ? rate / mean * std::exp(-x / mean) : 0.0; };
  m.support = {0.0, kInf};
  m.positive_moment = [rate, mean](double k, double lo, double hi) {
    return rate * std::pow(mean, k) * special::incomplete_gamma_between(k + 1.0, lo / mean, hi / mean);
  };
  m.jump_exponent_closed = [rate, mean](double theta) {
    const double t = mean * (1.0 - std::exp(-1.0 / mean));  // integral of tau under Exp(mean)
    return rate * (1.0 / cplx(1.0, -theta * mean) - 1.0) - cplx(0.0, theta * rate * t);
  };
  m.label = "exponential";
  return m;
}

LevyMeasure1D laplace_measure(double rate, double scale) {
  if (!(rate >= 0.0) || !(scale > 0.0)) throw InvalidArgument("laplace measure needs rate >= 0, scale > 0");
  LevyMeasure1D m;
  m.density = [rate, scale](double x) { return rate / (2.0 * scale) * std::exp(-std::abs(x) / scale); };
  auto side = [rate, scale](double k, double lo, double hi) {
    return 0.5 * rate * std::pow(scale, k) *
           special::incomplete_gamma_between(k + 1.0, lo / scale, hi / scale);
  };
  m.positive_moment = side;
  m.negative_moment = side;
  m.symmetric = true;
  m.jump_exponent_closed = [rate, scale](double theta) {
    return cplx(rate * (1.0 / (1.0 + theta * theta * scale * scale) - 1.0), 0.0);
  };
  m.label = "laplace";
  return m;
}

LevyMeasure1D gamma_measure(double shape, double rate) {
  if (!(shape >= 0.0) || !(rate > 0.0)) throw InvalidArgument("gamma measure needs shape >= 0, rate > 0");
  LevyMeasure1D m;
  m.density = [shape, rate](double x) { return x > 0.0 ? shape * std::exp(-rate * x) / x : 0.0; };
  m.support = {0.0, kInf};
  m.positive_moment = [shape, rate](double k, double lo, double hi) {
    return shape * std::pow(rate, -k) * special::incomplete_gamma_between(k, rate * lo, rate * hi);
  };
  m.jump_exponent_closed = [shape, rate](double theta) {
    const double t = (1.0 - std::exp(-rate)) / rate + special::expint_e1(rate);
    return -shape * std::log(cplx(1.0, -theta / rate)) - cplx(0.0, theta * shape * t);
  };
  m.label = "gamma";
  return m;
}

LevyMeasure1D tempered_stable_measure(double c_plus, double c_minus, double alpha,
                                      double lambda_plus, double lambda_minus) {
  if (!(alpha >= 0.0 && alpha < 2.0)) throw InvalidArgument("tempered stable needs alpha in [0, 2)");
  if (c_plus < 0.0 || c_minus < 0.0 || lambda_plus < 0.0 || lambda_minus < 0.0)
    throw InvalidArgument("tempered stable parameters must be nonnegative");
  LevyMeasure1D m;
  m.density = [=](double x) {
    const double y = std::abs(x);
    const double c = x > 0.0 ? c_plus : c_minus;
    const double l = x > 0.0 ? lambda_plus : lambda_minus;
    return c * std::pow(y, -1.0 - alpha) * std::exp(-l * y);
  };
  auto side = [alpha](double c, double l) -> SideMoment {
    return [=](double k, double lo, double hi) {
      if (c == 0.0) return 0.0;
      const double a = k - alpha;
      if (l == 0.0) {
        if (a == 0.0) return c * (std::log(hi) - std::log(lo));
        if (a < 0.0 && lo == 0.0) return kInf;
        if (a > 0.0 && std::isinf(hi)) return kInf;
        return c * (std::pow(hi, a) - std::pow(lo, a)) / a;
      }
      return c * std::pow(l, -a) * special::incomplete_gamma_between(a, l * lo, l * hi);
    };
  };
  m.positive_moment = side(c_plus, lambda_plus);
  m.negative_moment = side(c_minus, lambda_minus);
  if (c_plus == 0.0) m.support.hi = 0.0;
  if (c_minus == 0.0) m.support.lo = 0.0;
  m.symmetric = c_plus == c_minus && lambda_plus == lambda_minus;
  m.label = "tempered_stable";
  return m;
}

// ---------------------------------------------------------------------------
// Cumulants

cplx seed_cumulant(const LevySeed& seed, double theta, const quad::Options& opt) {
  if (theta == 0.0) return {0.0, 0.0};
  return cplx(-0.5 * seed.b * seed.b * theta * theta, seed.gamma * theta) +
         seed.rho.jump_exponent(theta, opt);
}

cplx cumulant_exponent(const LevyQuadruplet& q, double theta, const Point& s,
                       const quad::Options& opt) {
  if (!std::isfinite(theta)) throw InvalidArgument("cumulant_exponent: theta must be finite");
  return seed_cumulant(*q.seed(s), theta, opt);
}

cplx basis_cumulant(const LevyQuadruplet& q, double theta, const Point& a, const Point& b,
                    const quad::Options& opt) {
  for (int i = 0; i < q.control.dim; ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
      throw InvalidArgument("basis_cumulant: the rectangle must be bounded");
    if (a[i] < q.control.lo[i] || b[i] > q.control.hi[i])
      throw InvalidArgument("basis_cumulant: the rectangle must lie in the control domain");
  }
  if (q.factorizable) return cumulant_exponent(q, theta, a, opt) * q.control.mass(a, b, opt);
  auto f = [&](const Point& s) { return cumulant_exponent(q, theta, s, opt) * q.control.density_at(s); };
  auto r = integrate_box<cplx>(f, q.control.dim, a, b, opt);
  if (r.status == quad::Status::diverged) throw QuadratureDivergence("basis cumulant diverges");
  return r.value;
}

// ---------------------------------------------------------------------------
// Moment checks

const char* to_string(MomentVerdict v) {
  switch (v) {
    case MomentVerdict::holds: return "holds";
    case MomentVerdict::fails: return "fails";
    case MomentVerdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

MomentCheck moment_check(const LevyMeasure1D& m, const std::function<double(double)>& g,
                         double lo, double hi) {
  quad::Result<double> total;
  for (int side : {+1, -1}) {
    if (m.density) {
      const double s_lo = side > 0 ? std::max(0.0, m.support.lo) : std::max(0.0, -m.support.hi);
      const double s_hi = side > 0 ? std::max(0.0, m.support.hi) : std::max(0.0, -m.support.lo);
      const double a = std::max(lo, s_lo);
      const double b = std::min(hi, s_hi);
      if (b > a) {
        std::vector<double> cuts{1.0};
        for (double x : m.breaks) cuts.push_back(side * x);
        auto f = [&](double y) {
          const double d = m.density(side * y);
          return d == 0.0 ? 0.0 : g(y) * d;
        };
        auto r = quad::integrate<double>(f, a, b, cuts);
        total.value += r.value;
        total.error += r.error;
        total.status = quad::worst(total.status, r.status);
      }
    }
    for (const Atom& at : m.atoms) {
      const double y = side * at.location;
      if (y > lo && y <= hi) total.value += g(y) * at.mass;
    }
  }
  MomentVerdict v = MomentVerdict::holds;
  if (total.status == quad::Status::diverged || !std::isfinite(total.value))
    v = MomentVerdict::fails;
  else if (total.status == quad::Status::inconclusive)
    v = MomentVerdict::inconclusive;
  return {v, total.value, total.status};
}

MomentCheck log_moment_check(const LevyMeasure1D& m) {
  return moment_check(m, [](double y) { return std::log(y); }, 1.0, kInf);
}

MomentCheck levy_condition_check(const LevyMeasure1D& m) {
  return moment_check(m, [](double y) { return std::min(1.0, y * y); }, 0.0, kInf);
}

// ---------------------------------------------------------------------------
// TripletND

cplx TripletND::cumulant(const Eigen::VectorXd& theta) const {
  cplx c(-0.5 * theta.dot(B * theta), theta.dot(gamma));
  if (jump_cumulant) c += jump_cumulant(theta);
  return c;
}

bool TripletND::covariance_valid() const {
  if (B.rows() != dim || B.cols() != dim) return false;
  if (dim == 0) return true;
  const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
  if (!B.isApprox(B.transpose(), 1e-12) && (B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (B + B.transpose()));
  return es.eigenvalues().minCoeff() >= -1e-10 * scale;
}

TripletND TripletND::zero(int dim) {
  TripletND t;
  t.dim = dim;
  t.gamma = Eigen::VectorXd::Zero(dim);
  t.B = Eigen::MatrixXd::Zero(dim, dim);
  t.nu = [](const Region&) { return 0.0; };
  t.jump_cumulant = [](const Eigen::VectorXd&) { return cplx(0.0, 0.0); };
  return t;
}

}  // namespace sdfields
