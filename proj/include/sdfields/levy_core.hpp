#pragma once

// Lévy measures, seeds and quadruplets of Lévy bases, their cumulant
// exponents and moment conditions.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sdfields/quadrature.hpp"
#include "sdfields/types.hpp"

namespace sdfields {

/// Truncation function x / (1 v |x|).
inline double truncate(double x) { return x / std::max(1.0, std::abs(x)); }
std::vector<double> truncate(std::span<const double> x);

struct Atom {
  double location;
  double mass;
};

/// Density-part partial moment of one side of a Lévy measure:
/// integral of y^k over lo < y <= hi of the density at (side * y).
using SideMoment = std::function<double(double k, double lo, double hi)>;

/// Lévy measure on R as a density plus finitely many atoms. The density is
/// only consulted inside [support.lo, support.hi] and never at 0.
struct LevyMeasure1D {
  std::function<double(double)> density;
  std::vector<Atom> atoms;
  Interval support;
  /// Points where the density is not smooth (used as quadrature breaks).
  std::vector<double> breaks;
  /// Optional closed forms of the density-part moments for y > 0 and y < 0.
  SideMoment positive_moment;
  SideMoment negative_moment;
  /// Optional closed form of the integral of e^{i theta x} - 1 - i theta tau(x).
  std::function<cplx(double)> jump_exponent_closed;
  /// Symmetric about the origin (enables analytic shortcuts).
  bool symmetric = false;
  std::string label;

  bool has_density() const { return static_cast<bool>(density); }
  bool is_zero() const;
  double density_at(double x) const;

  /// Density part plus atoms of the integral of |y|^k over lo < |y| <= hi on
  /// one side (side = +1 or -1), with 0 <= lo < hi <= inf.
  quad::Result<double> side_moment(int side, double k, double lo, double hi,
                                   const quad::Options& opt = {}) const;
  /// Both sides of the partial moment.
  quad::Result<double> abs_moment(double k, double lo, double hi,
                                  const quad::Options& opt = {}) const;
  /// Mass of the closed interval [a, b]; the interval must not contain 0.
  double mass(double a, double b) const;

  /// Integral of g against the measure; the density part is split at -1, 0, 1,
  /// the support edges and the declared breaks.
  template <class T>
  quad::Result<T> integrate(const std::function<T(double)>& g, const quad::Options& opt = {}) const;

  /// Integral of e^{i theta x} - 1 - i theta tau(x).
  cplx jump_exponent(double theta, const quad::Options& opt = {}) const;
};

/// Triplet (gamma, b, rho) of the infinitely divisible seed at one point of S.
struct LevySeed {
  double gamma = 0.0;
  double b = 0.0;
  LevyMeasure1D rho;
};

/// Control measure c(ds) with a density on an axis-aligned rectangle.
struct ControlMeasure {
  int dim = 1;
  Point lo{-kInf, -kInf, -kInf, -kInf};
  Point hi{kInf, kInf, kInf, kInf};
  std::function<double(const Point&)> density;
  /// Set when the density is a constant (then `density` may be empty).
  bool constant = true;
  double constant_value = 1.0;

  double density_at(const Point& s) const;
  bool contains(const Point& s) const;
  /// c-mass of the rectangle [a, b] (first `dim` coordinates).
  double mass(const Point& a, const Point& b, const quad::Options& opt = {}) const;
};

/// Characteristic quadruplet (gamma(s), b(s), rho(s, dx), c(ds)) of a Lévy basis.
struct LevyQuadruplet {
  std::function<std::shared_ptr<const LevySeed>(const Point&)> seed_at;
  ControlMeasure control;
  bool factorizable = false;
  bool homogeneous = false;
  bool poissonian = false;
  bool centered = false;
  std::string label;

  std::shared_ptr<const LevySeed> seed(const Point& s) const { return seed_at(s); }
  /// Spot-checks the flag invariants on a grid of sampled points; returns a
  /// list of violations (empty when consistent).
  std::vector<std::string> validate(int samples = 9) const;
};

/// Builds a quadruplet whose seed does not depend on s.
LevyQuadruplet make_factorizable(LevySeed seed, ControlMeasure control, std::string label = {});

/// Drift making the seed centered (zero mean): -integral over |x| > 1 of (x - sign x).
/// Throws IntegrabilityFailure when the first moment is infinite.
double centering_drift(const LevyMeasure1D& m);
/// Integral of tau(x) against the measure: the drift under which a measure
/// with finite first moment near 0 generates a pure-jump process with no drift
/// in the x-compensated form (a subordinator when supported on x > 0).
/// Throws IntegrabilityFailure when the integral of |x| over |x| <= 1 diverges.
double tau_integral(const LevyMeasure1D& m);
/// True when gamma equals the centering drift (within 1e-9).
bool seed_is_centered(const LevySeed& seed);

// Canonical measures.
LevyMeasure1D zero_measure();
LevyMeasure1D dirac_measure(double location, double mass);
/// rate * Exp(mean) jump law: density (rate / mean) e^{-x / mean} on x > 0.
LevyMeasure1D exponential_measure(double rate, double mean);
/// rate * Laplace(scale) jump law: density (rate / (2 scale)) e^{-|x| / scale}.
LevyMeasure1D laplace_measure(double rate, double scale);
/// Gamma process measure: shape x^{-1} e^{-rate x} on x > 0.
LevyMeasure1D gamma_measure(double shape, double rate);
/// Tempered stable: c± |x|^{-1-alpha} e^{-lambda± |x|} on each side, alpha in [0, 2).
LevyMeasure1D tempered_stable_measure(double c_plus, double c_minus, double alpha,
                                      double lambda_plus, double lambda_minus);

/// psi(theta, s) = i gamma theta - b^2 theta^2 / 2 + jump exponent.
cplx seed_cumulant(const LevySeed& seed, double theta, const quad::Options& opt = {});
cplx cumulant_exponent(const LevyQuadruplet& q, double theta, const Point& s,
                       const quad::Options& opt = {});
/// Cumulant of L(A) for a bounded rectangle A = [a, b] of S.
cplx basis_cumulant(const LevyQuadruplet& q, double theta, const Point& a, const Point& b,
                    const quad::Options& opt = {});

enum class MomentVerdict { holds, fails, inconclusive };
const char* to_string(MomentVerdict v);

struct MomentCheck {
  MomentVerdict verdict;
  double value;
  quad::Status status;
};

/// Integral of log|x| over |x| > 1.
MomentCheck log_moment_check(const LevyMeasure1D& m);
/// Integral of 1 ^ x^2 (the Lévy measure condition).
MomentCheck levy_condition_check(const LevyMeasure1D& m);
/// Integral of g over the measure restricted to lo < |x| <= hi, as a verdict.
MomentCheck moment_check(const LevyMeasure1D& m, const std::function<double(double)>& g,
                         double lo, double hi);

/// Finite-dimensional characteristic triplet (gamma, B, nu).
struct TripletND {
  int dim = 0;
  Eigen::VectorXd gamma;
  Eigen::MatrixXd B;
  /// nu of a region away from the origin.
  std::function<double(const Region&)> nu;
  /// Integral of e^{i<theta,x>} - 1 - i<theta, tau(x)> against nu.
  std::function<cplx(const Eigen::VectorXd&)> jump_cumulant;

  cplx cumulant(const Eigen::VectorXd& theta) const;
  /// Symmetric and nonnegative definite (eigenvalues >= -1e-10).
  bool covariance_valid() const;
  static TripletND zero(int dim);
};

// ---------------------------------------------------------------------------

template <class T>
quad::Result<T> LevyMeasure1D::integrate(const std::function<T(double)>& g,
                                         const quad::Options& opt) const {
  quad::Result<T> out;
  if (density) {
    std::vector<double> cuts = breaks;
    cuts.insert(cuts.end(), {-1.0, 1.0});
    auto f = [&](double x) -> T {
      const double d = density(x);
      if (d == 0.0) return T{};
      return g(x) * d;
    };
    const double lo = support.lo;
    const double hi = support.hi;
    if (lo < 0.0) {
      auto r = quad::integrate<T>(f, lo, std::min(hi, 0.0), cuts, opt);
      out.value += r.value;
      out.error += r.error;
      out.status = quad::worst(out.status, r.status);
      out.subdivisions += r.subdivisions;
    }
    if (hi > 0.0) {
      auto r = quad::integrate<T>(f, std::max(lo, 0.0), hi, cuts, opt);
      out.value += r.value;
      out.error += r.error;
      out.status = quad::worst(out.status, r.status);
      out.subdivisions += r.subdivisions;
    }
  }
  for (const Atom& a : atoms) out.value += g(a.location) * a.mass;
  return out;
}

}  // namespace sdfields
