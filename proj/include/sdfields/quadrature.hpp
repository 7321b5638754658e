#pragma once

// Adaptive Gauss-Kronrod quadrature with divergence detection.
//
// Finite pieces are first attempted with plain adaptive bisection. When that
// fails, the piece is split at its midpoint and each endpoint is approached by
// geometrically shrinking blocks; infinite ends are covered by geometrically
// growing blocks. Block contributions are grouped into super-blocks whose
// lengths double; a run of non-decaying super-blocks is reported as divergence.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace sdfields::quad {

enum class Status { converged, diverged, inconclusive };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::converged: return "converged";
    case Status::diverged: return "diverged";
    case Status::inconclusive: return "inconclusive";
  }
  return "unknown";
}

/// Worst of two statuses: diverged > inconclusive > converged.
inline Status worst(Status a, Status b) {
  if (a == Status::diverged || b == Status::diverged) return Status::diverged;
  if (a == Status::inconclusive || b == Status::inconclusive) return Status::inconclusive;
  return Status::converged;
}

struct Options {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 10000;
  /// Consecutive non-decaying super-blocks needed to declare divergence.
  int divergence_run = 8;
  /// Budget for the plain adaptive attempt on a finite piece.
  int plain_budget = 60;
};

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  Status status = Status::converged;
  int subdivisions = 0;

  bool ok() const { return status == Status::converged; }
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule. Index 0 is the
// centre; Gauss nodes sit at the odd indices.
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.0,
    0.14887433898163122,
    0.2943928627014602,
    0.43339539412924721,
    0.56275713466860466,
    0.67940956829902444,
    0.7808177265864169,
    0.86506336668898454,
    0.93015749135570824,
    0.97390652851717174,
    0.99565716302580809};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.1494455540029169,
    0.14773910490133849,
    0.14277593857706009,
    0.13470921731147334,
    0.12349197626206584,
    0.10938715880229764,
    0.093125454583697601,
    0.075039674810919957,
    0.054755896574351995,
    0.032558162307964725,
    0.011694638867371874};
inline constexpr std::array<double, 5> kGaussWeights = {
    0.29552422471475287, 0.26926671930999635, 0.21908636251598204,
    0.14945134915058059, 0.066671344308688138};

template <class T>
struct Segment {
  double a, b;
  T value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class T>
bool finite_value(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return std::isfinite(v);
  } else {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  }
}

template <class T, class F>
Segment<T> kronrod21(F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const T fc = f(centre);
  T kronrod = fc * kKronrodWeights[0];
  T gauss{};
  for (int i = 1; i <= 10; ++i) {
    const double dx = half * kKronrodNodes[i];
    const T pair = f(centre - dx) + f(centre + dx);
    kronrod += pair * kKronrodWeights[i];
    if (i % 2 == 1) gauss += pair * kGaussWeights[i / 2];
  }
  kronrod *= half;
  gauss *= half;
  double err = std::abs(kronrod - gauss);
  // Guard against the estimate collapsing below roundoff on tiny segments.
  err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * std::abs(kronrod));
  return {a, b, kronrod, err};
}

}  // namespace detail

/// Plain adaptive bisection on a finite interval. Returns inconclusive when
/// the budget is exhausted before the tolerance is met and diverged when a
/// non-finite value appears.
template <class T, class F>
Result<T> adaptive(F&& f, double a, double b, const Options& opt, int budget) {
  Result<T> out;
  if (!(b > a)) return out;
  std::priority_queue<detail::Segment<T>> heap;
  auto first = detail::kronrod21<T>(f, a, b);
  T total = first.value;
  double total_err = first.error;
  heap.push(first);
  int used = 0;
  while (true) {
    if (!detail::finite_value(total) || !std::isfinite(total_err)) {
      out.value = total;
      out.error = std::numeric_limits<double>::infinity();
      out.status = Status::diverged;
      out.subdivisions = used;
      return out;
    }
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    if (total_err <= tol) break;
    if (used >= budget) {
      out.value = total;
      out.error = total_err;
      out.status = Status::inconclusive;
      out.subdivisions = used;
      return out;
    }
    auto worst_seg = heap.top();
    const double mid = 0.5 * (worst_seg.a + worst_seg.b);
    if (!(mid > worst_seg.a && mid < worst_seg.b)) {
      // Cannot bisect further in floating point.
      out.value = total;
      out.error = total_err;
      out.status = Status::inconclusive;
      out.subdivisions = used;
      return out;
    }
    heap.pop();
    auto left = detail::kronrod21<T>(f, worst_seg.a, mid);
    auto right = detail::kronrod21<T>(f, mid, worst_seg.b);
    total += left.value + right.value - worst_seg.value;
    total_err += left.error + right.error - worst_seg.error;
    heap.push(left);
    heap.push(right);
    ++used;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  T sum{};
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.error = err;
  out.subdivisions = used;
  return out;
}

namespace detail {

// Geometric block walk away from an anchor (tails) or towards an endpoint.
// `block(k)` yields the k-th block as an interval, or an empty interval when
// the walk cannot continue (overflow or floating point exhaustion).
template <class T, class F, class BlockFn>
Result<T> block_walk(F& f, BlockFn block, bool outward, const Options& opt, int& budget) {
  Result<T> out;
  T sum{};
  T last{};
  T prev{};
  double err = 0.0;
  std::vector<double> super;  // absolute contribution of each super-block
  double current_super = 0.0;
  int next_boundary = 4;
  int small_run = 0;
  Status inner = Status::converged;

  auto run_of = [&](double threshold) {
    int run = 0;
    for (std::size_t j = super.size() - 1; j >= 1; --j) {
      if (super[j] >= threshold * super[j - 1] && super[j] > 0.0) {
        ++run;
      } else {
        break;
      }
    }
    return run;
  };
  auto diverged = [&]() {
    out.value = sum;
    out.error = std::numeric_limits<double>::infinity();
    out.status = Status::diverged;
    return out;
  };

  constexpr int kMaxBlocks = 1000;
  for (int k = 0; k < kMaxBlocks && budget > 0; ++k) {
    auto [lo, hi] = block(k);
    if (!(hi > lo)) break;
    const int cap = std::max(1, std::min(budget, 100));
    auto r = adaptive<T>(f, lo, hi, opt, cap);
    budget -= std::max(1, r.subdivisions);
    if (r.status == Status::diverged) {
      sum += r.value;
      return diverged();
    }
    inner = worst(inner, r.status);
    prev = last;
    last = r.value;
    sum += r.value;
    err += r.error;
    const double mag = std::abs(r.value);
    current_super += mag;
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(sum));
    small_run = (mag <= 0.1 * tol) ? small_run + 1 : 0;
    const int min_blocks = outward ? 6 : 2;
    if (k + 1 >= min_blocks && small_run >= 2) {
      // Geometric estimate of what the remaining blocks would add.
      const double pm = std::abs(prev);
      if (pm > 0.0 && mag < pm) {
        const double ratio = mag / pm;
        sum += last * (ratio / (1.0 - ratio));
      }
      out.value = sum;
      out.error = err + mag;
      out.status = inner;
      return out;
    }
    if (k + 1 == next_boundary) {
      super.push_back(current_super);
      current_super = 0.0;
      next_boundary *= 2;
      if (super.size() >= 2) {
        if (run_of(1.8) >= 3 && super.back() > tol) return diverged();
        if (run_of(0.9) >= opt.divergence_run && super.back() > tol) return diverged();
      }
    }
  }
  // The walk ended (block cap, budget or floating point exhaustion) without
  // meeting the per-block tolerance. Only complete super-blocks enter the
  // ratio analysis; the trailing partial one is accounted for separately.
  const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(sum));
  const int n = static_cast<int>(super.size());
  if (current_super <= tol && (n == 0 || super.back() <= tol)) {
    out.value = sum;
    out.error = err + current_super;
    out.status = inner;
    return out;
  }
  if (n >= 4 && run_of(0.9) >= std::min(n - 2, opt.divergence_run) &&
      current_super >= 0.5 * super.back())
    return diverged();
  if (n >= 2 && super[n - 1] <= 0.75 * super[n - 2]) {
    // Geometric decay across doubling super-blocks (power-law or faster
    // decay of the blocks themselves): extrapolate the remainder.
    const double ratio = super[n - 1] / super[n - 2];
    const double remainder =
        std::max(0.0, super[n - 1] * ratio / (1.0 - ratio) - current_super);
    out.value = sum;
    if (std::abs(last) > 0.0) out.value += last * (remainder / std::abs(last));
    out.error = err + remainder;
    out.status = remainder <= 1e-3 * std::max(1.0, std::abs(sum)) ? inner : Status::inconclusive;
    return out;
  }
  out.value = sum;
  out.error = err + current_super;
  out.status = Status::inconclusive;
  return out;
}

template <class T, class F>
Result<T> approach_endpoint(F& f, double endpoint, double inner, const Options& opt, int& budget) {
  // Blocks between endpoint + h 2^{-k-1} and endpoint + h 2^{-k}, h signed.
  const double h = inner - endpoint;
  auto block = [endpoint, h](int k) -> std::pair<double, double> {
    const double near = endpoint + std::ldexp(h, -k - 1);
    const double far = endpoint + std::ldexp(h, -k);
    if (near == endpoint || near == far) return {0.0, 0.0};
    return h > 0 ? std::pair{near, far} : std::pair{far, near};
  };
  return block_walk<T>(f, block, false, opt, budget);
}

template <class T, class F>
Result<T> tail(F& f, double anchor, double direction, const Options& opt, int& budget) {
  const double h = std::max(1.0, 0.25 * std::abs(anchor));
  auto block = [anchor, h, direction](int k) -> std::pair<double, double> {
    const double a = anchor + direction * h * (std::ldexp(1.0, k) - 1.0);
    const double b = anchor + direction * h * (std::ldexp(1.0, k + 1) - 1.0);
    if (!std::isfinite(a) || !std::isfinite(b) || std::abs(b) > 1e300) return {0.0, 0.0};
    return direction > 0 ? std::pair{a, b} : std::pair{b, a};
  };
  return block_walk<T>(f, block, true, opt, budget);
}

template <class T>
void accumulate(Result<T>& total, const Result<T>& part) {
  total.value += part.value;
  total.error += part.error;
  total.status = worst(total.status, part.status);
}

template <class T, class F>
Result<T> finite_piece(F& f, double p, double q, const Options& opt, int& budget) {
  auto plain = adaptive<T>(f, p, q, opt, std::min(budget, opt.plain_budget));
  budget -= plain.subdivisions;
  if (plain.status == Status::converged) return plain;
  const double mid = 0.5 * (p + q);
  Result<T> out;
  accumulate(out, approach_endpoint<T>(f, p, mid, opt, budget));
  if (out.status == Status::diverged) return out;
  accumulate(out, approach_endpoint<T>(f, q, mid, opt, budget));
  return out;
}

}  // namespace detail

/// Integrates f over [a, b] (either end may be infinite). Interior points in
/// `breaks` split the domain so kinks and discontinuities sit on piece edges.
template <class T, class F>
Result<T> integrate(F&& f, double a, double b, std::span<const double> breaks = {},
                    const Options& opt = {}) {
  Result<T> out;
  if (a == b) return out;
  if (a > b) {
    auto r = integrate<T>(f, b, a, breaks, opt);
    r.value = -r.value;
    return r;
  }
  std::vector<double> pts;
  pts.reserve(breaks.size() + 3);
  pts.push_back(a);
  for (double x : breaks) {
    if (x > a && x < b && std::isfinite(x)) pts.push_back(x);
  }
  if (std::isinf(a) && std::isinf(b) && pts.size() == 1) pts.push_back(0.0);
  pts.push_back(b);
  std::sort(pts.begin() + 1, pts.end() - 1);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  int budget = opt.max_subdivisions;
  auto& fn = f;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double p = pts[i];
    const double q = pts[i + 1];
    if (std::isinf(p)) {
      const double anchor = q - std::max(1.0, 0.25 * std::abs(q));
      detail::accumulate(out, detail::finite_piece<T>(fn, anchor, q, opt, budget));
      if (out.status != Status::diverged)
        detail::accumulate(out, detail::tail<T>(fn, anchor, -1.0, opt, budget));
    } else if (std::isinf(q)) {
      const double anchor = p + std::max(1.0, 0.25 * std::abs(p));
      detail::accumulate(out, detail::finite_piece<T>(fn, p, anchor, opt, budget));
      if (out.status != Status::diverged)
        detail::accumulate(out, detail::tail<T>(fn, anchor, 1.0, opt, budget));
    } else {
      detail::accumulate(out, detail::finite_piece<T>(fn, p, q, opt, budget));
    }
    if (out.status == Status::diverged) break;
  }
  out.subdivisions = opt.max_subdivisions - budget;
  if (!detail::finite_value(out.value)) out.status = Status::diverged;
  return out;
}

inline Result<double> integrate_real(auto&& f, double a, double b,
                                     std::span<const double> breaks = {},
                                     const Options& opt = {}) {
  return integrate<double>(f, a, b, breaks, opt);
}

}  // namespace sdfields::quad
