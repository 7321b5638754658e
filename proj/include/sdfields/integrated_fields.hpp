#pragma once

// Integrated fields mu(X; A) = integral over A of X_u mu(du): the stochastic
// Fubini conditions, both sides of the Fubini identity on common noise, the
// Langevin identity of the OU process and the Gamma-kernel convolution that
// collapses to an OU process.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdfields/orlicz.hpp"
#include "sdfields/volterra_sim.hpp"

namespace sdfields {

struct IntegratorMeasure {
  enum class Kind { lebesgue_on_set, weighted_density };
  Kind kind = Kind::lebesgue_on_set;
  std::function<double(double)> density;
  Interval support;
  std::vector<double> breaks;

  static IntegratorMeasure lebesgue(Interval support);
  static IntegratorMeasure weighted(std::function<double(double)> density, Interval support,
                                    std::vector<double> breaks = {});

  double density_at(double u) const;
  /// mu(A); infinite (diverged) when A is unbounded under Lebesgue measure.
  quad::Result<double> mass(Interval a) const;
  /// Density positive at 1000 sampled points of the support.
  bool equivalent_to_lebesgue() const;
};

/// mu_f(A, s) = integral over A of f(u, s) mu(du).
double mu_f_section(const KernelSpec& k, const IntegratorMeasure& mu, Interval a, double s);

enum class Verdict { holds, fails, inconclusive };
const char* to_string(Verdict v);

struct FubiniCheck {
  Verdict verdict = Verdict::inconclusive;
  /// Integral over A of the Luxemburg norms ||f(u, .)||_{Phi_1}.
  double norm_integral = 0.0;
  /// The equivalent form for finite mu: integral of f^2 b^2 + integral of
  /// |x f| ^ |x f|^2 rho, over A x S.
  std::optional<double> moment_integral;
  std::optional<Verdict> moment_verdict;
  bool mu_finite = false;
  /// Both forms gave the same verdict (always true when only one was evaluated).
  bool agree = true;
};

/// Requires p = 1 and a centered basis (throws InvalidArgument / NotCentered).
FubiniCheck fubini_condition_check(const KernelSpec& k, const IntegratorMeasure& mu, Interval a,
                                   const OrliczContext& ctx);

struct FubiniSides {
  Interval set;
  /// Trapezoid rule in u over the simulated path X_u.
  double left = 0.0;
  /// The field of the effective kernel mu_f(A, .) on the same increments.
  double right = 0.0;
  double gap = 0.0;
};

/// Both sides of the Fubini identity on one replica's increments. The sets
/// must be bounded; the u nodes are spaced by the grid step.
std::vector<FubiniSides> integrated_field_sim(const KernelSpec& k, const IntegratorMeasure& mu,
                                              const std::vector<Interval>& sets, const BasisIncrements& increments,
                                              const SimGrid& grid);

struct FubiniRefinement {
  std::vector<double> ds;
  /// Root mean square of the Fubini gap over the replicas at each level.
  std::vector<double> rms_gap;
  /// rms_gap[i] / rms_gap[i + 1].
  std::vector<double> ratios;
};

/// Runs integrated_field_sim at `levels` successive halvings of ds, starting from `grid`.
FubiniRefinement fubini_refinement(const LevyQuadruplet& q, const KernelSpec& k, const IntegratorMeasure& mu,
                                   Interval a, const SimGrid& grid, int levels, std::size_t replicas,
                                   int threads = 1);

struct LangevinCheck {
  /// Root mean square over replicas of int_0^t X du - (L_t - X_t + X_0).
  double residual_l2 = 0.0;
  /// Root mean square of L_t = L((0, t]).
  double levy_l2 = 0.0;
  double ratio = 0.0;
  std::size_t replicas = 0;
};

/// OU kernel on [grid.s0, t]: the path integral of X over [0, t] against the
/// basis increment over (0, t]. grid.s0 must be < 0 and 0, t grid edges.
LangevinCheck langevin_check(const LevyQuadruplet& q, const SimGrid& grid, double t, std::size_t replicas,
                             int threads = 1);

/// Beta(alpha + 1, beta + 1) = integral of x^alpha (1 - x)^beta over [0, 1].
double gamma_convolution_constant(double alpha, double beta);

struct CollapseCheck {
  double relative_error = 0.0;
  double k_alpha = 0.0;
  std::size_t points = 0;
  std::size_t replicas = 0;
};

/// X^mu_t = integral of phi_beta(t - u) X_u du with beta = -alpha - 1 and X the
/// Gamma-kernel field phi_alpha; compares to k_alpha times the OU field on the
/// same noise over t in [t_from, grid.s1]. Throws IntegrabilityFailure when the
/// Gamma-kernel conditions fail for alpha or beta.
CollapseCheck gamma_ou_collapse_check(double alpha, const LevyQuadruplet& q, const SimGrid& grid, double t_from,
                                      std::size_t replicas = 1, int threads = 1);

/// Cell-average weights of a stationary kernel by lag: entry d is the average
/// of g(t) over t in [d ds, (d + 1) ds] (the weight of the cell ending d cells
/// before an evaluation point on a cell edge).
std::vector<double> stationary_lag_weights(const KernelSpec& k, double ds, std::size_t lags);

}  // namespace sdfields
