#pragma once

// Musielak-Orlicz modulars Phi_p, Luxemburg norms and integrability tests
// for deterministic integrands against a Lévy basis on the real line.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdfields/kernel.hpp"
#include "sdfields/levy_core.hpp"

namespace sdfields {

struct OrliczContext {
  LevyQuadruplet basis;
  int p = 0;

  /// Validates p in {0, 1, 2} and, for p > 0, the p-th absolute moment of
  /// rho(s, .) outside [-1, 1] on sampled s. Throws IntegrabilityFailure.
  static OrliczContext make(LevyQuadruplet basis, int p);
};

/// A real function on the s axis with its support and break points.
struct SFunction {
  std::function<double(SPos)> f;
  Interval support;
  std::vector<double> breaks;

  double operator()(SPos s) const { return f(s); }
  double operator()(double s) const { return f(SPos{s, 0.0}); }
};

/// The section s -> f(u, s) of a kernel.
SFunction kernel_section(const KernelSpec& k, double u);
/// A plain function of s with the given support and breaks.
SFunction plain_function(std::function<double(double)> f, Interval support,
                         std::vector<double> breaks = {});

/// Signed drift functional h(r) = gamma r + integral of tau(x r) - r tau(x).
double drift_functional(const LevySeed& seed, double r);
/// sup over |c| <= 1 of |h(c r)|.
double sup_drift(const LevySeed& seed, double r);
/// Jump part of Phi_p: integral of |xr|^p 1{|xr| > 1} + |xr|^2 1{|xr| <= 1}, split into
/// the part with |xr| <= 1 (origin) and |xr| > 1 (tail).
struct JumpTerms {
  double origin;
  double tail;
};
JumpTerms jump_terms(const LevySeed& seed, double r, int p);

double H_eval(const OrliczContext& ctx, double r, const Point& s);
double phi_p_eval(const OrliczContext& ctx, double r, const Point& s);

enum class Member { yes, no, inconclusive };
enum class DivergingTerm { drift_H, gaussian, jump_tail, jump_origin };
const char* to_string(Member m);
const char* to_string(DivergingTerm t);

struct IntegrabilityReport {
  Member member = Member::yes;
  double phi_integral = 0.0;
  double norm = 0.0;
  std::optional<DivergingTerm> diverging_term;
  /// Per-term integrals: drift_H, gaussian, jump_origin, jump_tail.
  double drift_term = 0.0;
  double gaussian_term = 0.0;
  double jump_origin_term = 0.0;
  double jump_tail_term = 0.0;
};

/// Integral of Phi_p(|f(s)| / a, s) c(ds).
quad::Result<double> modular(const OrliczContext& ctx, const SFunction& f, double a = 1.0);
IntegrabilityReport phi_integral(const OrliczContext& ctx, const SFunction& f, bool with_norm = true);
/// Luxemburg norm inf{a > 0 : modular(f / a) <= 1}; infinity when no finite a qualifies.
double luxemburg_norm(const OrliczContext& ctx, const SFunction& f);

struct GammaIntegrability {
  bool yes = false;
  /// Which criterion decided: log_moment, alpha_above_half, alpha_half_log,
  /// alpha_below_half_power.
  std::string criterion;
  std::string reason;
};

/// Analytic membership test of the Gamma kernel exp(-t) t^alpha in L_{Phi_0}.
GammaIntegrability gamma_kernel_integrable(const LevySeed& seed, double alpha);

struct FourierCheck {
  bool nonvanishing = true;
  std::vector<double> vanishes_at;
  std::vector<cplx> values;
};

/// Evaluates the Fourier transform of a stationary kernel profile on a grid and
/// refines local minima of its modulus; reports points where it is below 1e-12.
/// Throws NotL1 when the profile is not integrable.
FourierCheck fourier_nonvanishing_check(const KernelSpec& g, const std::vector<double>& xi_grid);
/// Fourier transform of a stationary profile by quadrature.
cplx fourier_quadrature(const KernelSpec& g, double xi);

}  // namespace sdfields
