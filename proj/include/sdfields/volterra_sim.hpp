#pragma once

// Simulation of Lévy bases on grids of the s axis (Lévy-Itô decomposition
// with Gaussian substitution of small jumps), Volterra field paths built
// from the simulated increments, the exact cumulant of finite linear
// functionals, and empirical characteristic functions.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sdfields/kernel.hpp"
#include "sdfields/levy_core.hpp"
#include "sdfields/rng.hpp"

namespace sdfields {

/// Seed used when neither the configuration nor SDFIELDS_SEED supplies one.
inline constexpr std::uint64_t kDefaultSeed = 20240917;
inline constexpr std::size_t kMaxCells = 10'000'000;
inline constexpr double kMaxJumpsPerCell = 1e6;

struct SimGrid {
  double s0 = 0.0;
  double s1 = 1.0;
  double ds = 0.01;
  std::vector<double> u_points;
  /// Jumps with |x| <= eps are replaced by a Gaussian of matching variance.
  double eps = 1e-3;
  std::uint64_t seed = kDefaultSeed;

  /// Throws InvalidArgument on an empty range, a bad step, too many cells or eps outside (0, 1].
  void validate() const;
  std::size_t cells() const;
  double cell_lo(std::size_t i) const { return s0 + static_cast<double>(i) * ds; }
  double cell_hi(std::size_t i) const;
};

/// Jumps of a Lévy measure with |x| > eps, tabulated on log-spaced bins with
/// exact bin masses; within a bin jumps are drawn by rejection from the density.
struct JumpTable {
  double eps = 0.0;
  /// Total mass of the tabulated jumps.
  double rate = 0.0;
  /// Integral of tau(x) over the tabulated jumps.
  double tau_mean = 0.0;
  /// Integral of x^2 over |x| <= eps.
  double small_variance = 0.0;
  /// Mass beyond the largest tabulated jump size.
  double dropped_tail_mass = 0.0;

  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> density_bound;
  /// Atom entries carry lo == hi == location.
  std::vector<double> cumulative;
  std::function<double(double)> density;

  double sample(CellRng& rng) const;
};

JumpTable build_jump_table(const LevyMeasure1D& m, double eps, int bins_per_side = 2048);

struct SimDiagnostics {
  std::size_t cells = 0;
  double eps = 0.0;
  double expected_jumps_per_cell = 0.0;
  double small_jump_variance = 0.0;
  double dropped_tail_mass = 0.0;
};

/// Per-cell increments L([s_i, s_i + ds)) of one replica.
struct BasisIncrements {
  std::uint64_t replica = 0;
  std::vector<double> values;
  SimDiagnostics diagnostics;
};

/// Draws cell increments; thread-safe and deterministic per (seed, replica, cell).
class IncrementSampler {
 public:
  IncrementSampler(const LevyQuadruplet& q, const SimGrid& grid);

  double cell_increment(std::uint64_t replica, std::size_t cell) const;
  void fill(std::uint64_t replica, std::vector<double>& out) const;
  const SimDiagnostics& diagnostics() const { return diag_; }

 private:
  struct CellLaw {
    double drift;
    double sd;
    double jump_mean;
    double exp_neg_jump_mean;
    const JumpTable* table;
  };
  CellLaw law(std::size_t cell) const;

  LevyQuadruplet q_;
  SimGrid grid_;
  std::vector<std::shared_ptr<JumpTable>> tables_;
  std::vector<CellLaw> laws_;  // per cell when the basis is not homogeneous
  CellLaw homogeneous_law_{};
  bool homogeneous_ = false;
  SimDiagnostics diag_;
};

BasisIncrements simulate_basis_increments(const LevyQuadruplet& q, const SimGrid& grid, std::uint64_t replica = 0);

/// Average of an integrand over a cell [a, b].
using CellAverage = std::function<double(double a, double b)>;

/// Cell weights of f(u, .) on the grid (exact cell averages for the named families).
std::vector<double> kernel_cell_weights(const KernelSpec& k, double u, const SimGrid& grid);
std::vector<double> cell_weights(const CellAverage& f, const SimGrid& grid);

struct FieldPath {
  std::vector<double> u_points;
  std::vector<double> values;
  std::shared_ptr<const BasisIncrements> increments;
  SimGrid grid;
  std::string kernel_label;
};

/// X_u = sum over cells of (cell average of f(u, .)) * increment.
FieldPath simulate_field(const KernelSpec& k, std::shared_ptr<const BasisIncrements> increments,
                         const SimGrid& grid);
double weighted_sum(const std::vector<double>& weights, const std::vector<double>& increments);

/// Integral of psi(sum_j theta_j f(u_j, s), s) c(ds) over the window.
cplx cumulant_oracle(const LevyQuadruplet& q, const KernelSpec& k, const std::vector<double>& u,
                     const std::vector<double>& theta, Interval window = {});

struct CfEstimate {
  cplx value;
  /// Jackknife standard error of the complex mean (modulus).
  double se = 0.0;
  std::size_t n = 0;
};

CfEstimate empirical_cf(const std::vector<FieldPath>& paths, const std::vector<double>& u,
                        const std::vector<double>& theta);

/// Accumulates exp(i <theta, z>) samples; merging is order-sensitive only
/// through floating point, and callers merge in a fixed order.
struct CfAccumulator {
  cplx sum{0.0, 0.0};
  double sum_sq = 0.0;
  std::size_t n = 0;

  void add(cplx z) {
    sum += z;
    sum_sq += std::norm(z);
    ++n;
  }
  void merge(const CfAccumulator& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
  }
  CfEstimate estimate() const;
};

struct CfTarget {
  std::vector<double> u;
  std::vector<double> theta;
};

struct StreamingCf {
  std::vector<CfEstimate> estimates;
  SimDiagnostics diagnostics;
};

/// Simulates `replicas` field paths at grid.u_points without storing them and
/// returns the empirical CF for each target. Independent of `threads`.
StreamingCf streaming_cf(const LevyQuadruplet& q, const KernelSpec& k, const SimGrid& grid,
                         std::size_t replicas, const std::vector<CfTarget>& targets, int threads = 1);

/// Simulates `replicas` paths at grid.u_points (values only unless keep_increments).
std::vector<FieldPath> simulate_paths(const LevyQuadruplet& q, const KernelSpec& k, const SimGrid& grid,
                                      std::size_t replicas, int threads = 1, bool keep_increments = false);

}  // namespace sdfields
