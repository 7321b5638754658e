#pragma once

// Deterministic kernels f(u, s) of Volterra fields and integration over the
// parameter axis s.

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdfields/expression.hpp"
#include "sdfields/quadrature.hpp"
#include "sdfields/types.hpp"

namespace sdfields {

/// A point of the s axis written as an exact base plus an offset. Kernels
/// with singularities or kinks at s = u are evaluated through u - base -
/// offset, which keeps full relative precision arbitrarily close to u.
struct SPos {
  double base;
  double offset;

  double value() const { return base + offset; }
};

enum class KernelFamily { ou, gamma, fractional, custom };
enum class Continuity { lower, upper, neither };

const char* to_string(KernelFamily f);
const char* to_string(Continuity c);

struct KernelSpec {
  KernelFamily family = KernelFamily::ou;
  double alpha = 0.0;
  /// Constant factor applied to the kernel.
  double scale = 1.0;
  /// Custom kernels: expression in u and s (or in t = u - s when stationary).
  Expression expr;
  /// Custom kernels: support (outside, f = 0) and extra break points, in s,
  /// or in t = u - s for stationary kernels.
  Interval custom_support;
  std::vector<double> custom_breaks;
  /// Continuity of u -> f(u, s): upper means right-continuous, lower left-continuous.
  Continuity continuity = Continuity::upper;
  /// f(u, s) = g(u - s).
  bool stationary = true;
  std::string label;

  double eval(double u, double s) const { return eval(u, SPos{s, 0.0}); }
  double eval(double u, SPos s) const;
  /// Profile g(t) of a stationary kernel, t = u - s.
  double profile(double t) const;
  /// Closed-form Fourier transform (2 pi)^{-1/2} integral g(t) e^{i t xi} dt, when known.
  std::optional<cplx> fourier(double xi) const;
  /// Smallest interval of s outside which f(u, .) vanishes for every u in `us`.
  Interval s_support(const std::vector<double>& us) const;
  /// Break points (kinks, singularities) of s -> f(u, s) for u in `us`.
  std::vector<double> s_breaks(const std::vector<double>& us) const;
  /// Singular at s = u (unbounded near the diagonal).
  bool singular() const { return family == KernelFamily::gamma && alpha < 0.0; }
  /// Average of f(u, .) over the cell [a, b]; exact for the named families,
  /// midpoint rule for custom kernels.
  double cell_average(double u, double a, double b) const;
  /// Kernel multiplied by c.
  KernelSpec scaled(double c) const;
};

KernelSpec ou_kernel();
KernelSpec gamma_kernel(double alpha);
KernelSpec fractional_kernel(double alpha);
/// Custom kernel; `expr` is in u and s, or in t when `stationary` is set.
KernelSpec custom_kernel(const Expression& expr, Continuity continuity, bool stationary,
                         Interval support = {}, std::vector<double> breaks = {});

/// Fourier transform (2 pi)^{-1/2} Gamma(alpha + 1) (1 - i xi)^{-alpha - 1} of the Gamma kernel.
cplx gamma_kernel_fourier(double alpha, double xi);

/// Integrates g(SPos) over `domain`, splitting at `breaks`. Each piece is cut
/// at its midpoint and both halves are integrated in offset coordinates from
/// the nearer end point, so singular end points are resolved exactly.
template <class T, class G>
quad::Result<T> integrate_s(G&& g, Interval domain, std::vector<double> breaks,
                            const quad::Options& opt = {}) {
  quad::Result<T> out;
  if (!(domain.hi > domain.lo)) return out;
  std::vector<double> pts;
  for (double b : breaks) {
    if (b > domain.lo && b < domain.hi && std::isfinite(b)) pts.push_back(b);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  pts.insert(pts.begin(), domain.lo);
  pts.push_back(domain.hi);
  if (std::isinf(domain.lo) && std::isinf(domain.hi) && pts.size() == 2) pts.insert(pts.begin() + 1, 0.0);

  int budget = opt.max_subdivisions;
  auto add = [&](const quad::Result<T>& r) {
    out.value += r.value;
    out.error += r.error;
    out.status = quad::worst(out.status, r.status);
    budget -= r.subdivisions;
  };
  for (std::size_t i = 0; i + 1 < pts.size() && out.status != quad::Status::diverged; ++i) {
    const double p = pts[i];
    const double q = pts[i + 1];
    quad::Options local = opt;
    local.max_subdivisions = std::max(100, budget);
    if (std::isinf(p)) {
      auto f = [&](double o) { return g(SPos{q, -o}); };
      add(quad::integrate<T>(f, 0.0, kInf, {}, local));
    } else if (std::isinf(q)) {
      auto f = [&](double o) { return g(SPos{p, o}); };
      add(quad::integrate<T>(f, 0.0, kInf, {}, local));
    } else {
      const double half = 0.5 * (q - p);
      auto left = [&](double o) { return g(SPos{p, o}); };
      add(quad::integrate<T>(left, 0.0, half, {}, local));
      if (out.status == quad::Status::diverged) break;
      auto right = [&](double o) { return g(SPos{q, -o}); };
      add(quad::integrate<T>(right, 0.0, q - p - half, {}, local));
    }
  }
  out.subdivisions = opt.max_subdivisions - budget;
  return out;
}

}  // namespace sdfields
