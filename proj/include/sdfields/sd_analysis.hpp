#pragma once

// Master Lévy measures of Volterra fields evaluated on cylinder sets, and the
// dilation criterion for selfdecomposability and Urbanik classes.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdfields/kernel.hpp"
#include "sdfields/levy_core.hpp"

namespace sdfields {

/// Radius of the ball around the origin that every cylinder region must avoid.
inline constexpr double kOriginExclusion = 1e-8;
inline constexpr std::size_t kMaxCylinderCoords = 8;
inline constexpr std::size_t kMaxCylinderBoxes = 64;

/// Pushforward of rho(s, dx) c(ds) under (x, s) -> x f(., s).
struct MasterMeasureSpec {
  LevyQuadruplet basis;
  KernelSpec kernel;
  Continuity continuity = Continuity::upper;

  /// Takes the continuity class from the kernel.
  static MasterMeasureSpec make(LevyQuadruplet basis, KernelSpec kernel);
};

/// The cylinder {x in R^U : (x(u_1), ..., x(u_n)) in region}.
struct CylinderSet {
  std::vector<double> coords;
  Region region;

  /// Throws InvalidArgument on too many coordinates or boxes, mismatched box
  /// dimensions or a box within kOriginExclusion of the origin.
  void validate() const;
  CylinderSet scaled(double q) const;
};

struct MasterMeasureValue {
  double value = 0.0;
  quad::Status status = quad::Status::converged;
  /// f(u_j, s) vanished at every sampled s for all coordinates.
  bool degenerate = false;
};

MasterMeasureValue master_measure_eval(const MasterMeasureSpec& spec, const CylinderSet& a);
/// Range of s over which the kernel sections at `coords` meet the control measure.
Interval master_s_domain(const MasterMeasureSpec& spec, const std::vector<double>& coords);
/// Kernel and control break points of s for the sections at `coords`.
std::vector<double> master_s_breaks(const MasterMeasureSpec& spec, const std::vector<double>& coords);

/// {1.1, 1.5, 2, 5, 10}.
std::vector<double> default_q_grid();
/// [a_k, 2 a_k] with a_k = 0.1 * 2^{k/2}, k = 0..39, followed by their mirror images.
std::vector<Interval> default_dilation_intervals();
/// For each scale a_k = 0.1 * 2^{k/2} (k < scales): boxes with one coordinate in
/// +-[a, 2a] and the others in [-a/8, a/8], plus the diagonal boxes +-[a, 2a]^n.
std::vector<CylinderSet> default_cylinder_sets(const std::vector<double>& coords, int scales = 24);

struct DilationWitness {
  double q = 0.0;
  std::size_t index = 0;
  /// nu(qA) and nu(A).
  double scaled_mass = 0.0;
  double mass = 0.0;
  std::optional<Interval> interval;
  std::optional<CylinderSet> set;
};

struct DilationResult {
  bool pass = true;
  /// First violation in (q, A) order.
  std::optional<DilationWitness> witness;
  std::size_t pairs_checked = 0;
};

/// Checks m(qA) <= m(A) + 1e-10 over q_grid x intervals.
DilationResult dilation_check_1d(const LevyMeasure1D& m, const std::vector<double>& q_grid,
                                 const std::vector<Interval>& intervals);
/// Checks nu(qA) <= nu(A) + 1e-9 over q_grid x cylinder sets for a measure given by its values on sets.
DilationResult dilation_check_sets(const std::function<double(const CylinderSet&)>& nu,
                                   const std::vector<double>& q_grid, const std::vector<CylinderSet>& sets);
/// Checks nu(qA) <= nu(A) + 1e-9 over q_grid x cylinder sets.
DilationResult dilation_check_field(const MasterMeasureSpec& spec, const std::vector<double>& q_grid,
                                    const std::vector<CylinderSet>& sets);

struct UrbanikDepth {
  /// -1: not selfdecomposable; k: the residual densities pass the dilation
  /// test through k iterations; max_m when every level passed.
  int depth = -1;
  std::string stop_reason;
  std::optional<DilationWitness> witness;
};

/// q-residual density u(x) - q u(qx): the Lévy density of the remainder in
/// the selfdecomposability decomposition.
LevyMeasure1D urbanik_residual(const LevyMeasure1D& m, double q);
UrbanikDepth urbanik_depth_1d(const LevyMeasure1D& m, const std::vector<double>& q_grid, int max_m);

struct ChargeZero {
  bool guaranteed = false;
  std::string reason;
};

/// Sufficient condition for the pushforward to charge no zero section: a
/// semicontinuous kernel whose sections f(., s) are not identically zero on
/// u_dense, checked at 1000 points s.
ChargeZero charge_zero_precondition(const MasterMeasureSpec& spec, const std::vector<double>& u_dense);

}  // namespace sdfields
