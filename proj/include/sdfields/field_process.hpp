#pragma once

// ID field-valued Lévy processes generated by a Volterra field: triplets of
// the finite-dimensional projections L^X_u(t), stochastic integrals of scalar
// functions against L^X, the field-valued OU process and simulation of the
// projected process. Everything is computed through projections on finite
// index sets u_hat (at most 8 points).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdfields/orlicz.hpp"
#include "sdfields/sd_analysis.hpp"
#include "sdfields/volterra_sim.hpp"

namespace sdfields {

inline constexpr std::size_t kMaxProjection = 8;

/// Characteristic triplet (Gamma, B, nu) of an ID field. The master measure
/// nu is the pushforward of a (kernel, basis) pair.
struct FieldTripletSpec {
  std::function<double(double)> gamma_fn;
  std::function<double(double, double)> cov_fn;
  MasterMeasureSpec master;

  /// Gamma and B of the Volterra field itself, by quadrature over s.
  static FieldTripletSpec from_volterra(const MasterMeasureSpec& master);
  /// Symmetry and nonnegative definiteness of B on the sampled points; returns
  /// the violations found (empty when consistent).
  std::vector<std::string> validate(const std::vector<double>& u_sample) const;
};

/// An element y of the dual of R^U supported on u_hat.
struct FiniteProjection {
  std::vector<double> u_hat;
  std::vector<double> y;

  void validate() const;
};

/// Triplet (|t| Gamma_u, |t| B_u, |t| nu_u) of L^X_u(t).
TripletND process_triplet_at(const FieldTripletSpec& spec, double t, const std::vector<double>& u_hat);

/// Triplet of the integral of f against L^X_u. Throws IntegrabilityFailure
/// naming the violated condition (drift, Gaussian or jump display).
TripletND integral_triplet(const FieldTripletSpec& spec, const SFunction& f, const std::vector<double>& u_hat);

struct ConsistencyResult {
  double max_abs = 0.0;
  double max_rel = 0.0;
  std::size_t regions = 0;
};

/// Compares nu^I on the u_hat regions against nu^I on v_hat of their
/// preimages under the projection v_hat -> u_hat (u_hat must be a subset of v_hat).
ConsistencyResult projection_consistency_check(const FieldTripletSpec& spec, const SFunction& f,
                                               const std::vector<double>& u_hat, const std::vector<double>& v_hat,
                                               const std::vector<Region>& regions);

/// e^{-s} on [0, inf).
SFunction ou_integrand();
/// e^{-(t - s)} on (-inf, t].
SFunction ou_integrand_at(double t);
/// Y(1) - Y(0) + integral over [0, 1] of Y for the OU process Y, written as the
/// integrand of a single integral against L^X.
SFunction langevin_integrand();

struct OuMarginalResult {
  /// Max over theta and t of |C{theta : Y_u(t)} - C{theta : integral of e^{-s} dL^X_u}|.
  double max_discrepancy = 0.0;
  /// Max over theta of |C{theta : L_u(1) recovered from Y} - C{theta : X_u}|.
  double langevin_discrepancy = 0.0;
  std::vector<double> t_checked;
  DilationResult dilation;
};

struct OuMarginalOptions {
  std::vector<double> t_values{-1.5, 0.5, 2.0};
  std::vector<double> q_grid = default_q_grid();
  int dilation_scales = 8;
};

/// Stationarity and the marginal identity of the field-valued OU process,
/// the Langevin recovery of L^X and the dilation check on the OU integral's
/// master measure. Throws LogMomentFailure without the log moment on u_hat.
OuMarginalResult ou_field_marginal_check(const FieldTripletSpec& spec, const std::vector<double>& u_hat,
                                         const std::vector<Eigen::VectorXd>& theta_grid,
                                         const OuMarginalOptions& options = {});

/// Integral of log|pi_u(x)| over |pi_u(x)| > 1 against nu; infinite when it diverges.
double log_moment_projection(const MasterMeasureSpec& master, const std::vector<double>& u_hat);

/// Rate of Var <L^X(t) - L^X(s), y> per unit |t - s|: y' (B_u + second moment of nu_u) y.
double pairing_variance_rate(const FieldTripletSpec& spec, const FiniteProjection& y);

struct FieldProcessPaths {
  std::vector<double> u_hat;
  std::vector<double> t_grid;
  /// values[r][k * n + j] = L^X_{u_j}(t_k) of replica r.
  std::vector<std::vector<double>> values;
  SimDiagnostics diagnostics;

  double at(std::size_t replica, std::size_t k, std::size_t j) const {
    return values[replica][k * u_hat.size() + j];
  }
};

/// Simulates L^X_u on an increasing grid of times t_k >= 0 (L^X(0) = 0) as the
/// Volterra integral of the kernel against a basis on S x time, with the
/// s axis discretized by `window` (range, ds, eps and seed).
FieldProcessPaths simulate_field_process(const MasterMeasureSpec& master, const std::vector<double>& u_hat,
                                         const std::vector<double>& t_grid, const SimGrid& window,
                                         std::size_t replicas, int threads = 1);

}  // namespace sdfields
