#include "sdfields/integrated_fields.hpp"

#include <algorithm>
#include <cmath>

#include "sdfields/errors.hpp"
#include "sdfields/parallel.hpp"
#include "sdfields/special.hpp"

namespace sdfields {

namespace {

// Index of the grid edge at u, or -1 when u is not an edge.
long edge_index(const SimGrid& grid, double u) {
  const double x = (u - grid.s0) / grid.ds;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x)) || r < 0.0 ||
      r > static_cast<double>(grid.cells()))
    return -1;
  return static_cast<long>(r);
}

// Evaluates a field at points u through Toeplitz lag weights when the kernel
// is stationary and every point is a grid edge, otherwise through per-point
// cell weights.
class FieldEvaluator {
 public:
  FieldEvaluator(const KernelSpec& k, const SimGrid& grid, const std::vector<double>& us) : k_(k), grid_(grid) {
    const std::size_t n = grid.cells();
    bool edges = k.stationary;
    for (double u : us) {
      const long e = edge_index(grid, u);
      edges = edges && e >= 0;
      edge_.push_back(e);
    }
    if (edges) {
      // Lags d = e - i - 1 run over [-n, n].
      lag_ = std::vector<double>(2 * n + 1, 0.0);
      for (long d = -static_cast<long>(n); d <= static_cast<long>(n); ++d) {
        const double a = -static_cast<double>(d + 1) * grid.ds;
        lag_[static_cast<std::size_t>(d + static_cast<long>(n))] = k.cell_average(0.0, a, a + grid.ds);
      }
    } else {
      for (double u : us) weights_.push_back(kernel_cell_weights(k, u, grid));
    }
  }

  std::vector<double> values(const std::vector<double>& inc) const {
    const std::size_t n = grid_.cells();
    std::vector<double> out(edge_.size(), 0.0);
    for (std::size_t j = 0; j < edge_.size(); ++j) {
      if (!lag_.empty()) {
        const long e = edge_[j];
        double x = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double w = lag_[static_cast<std::size_t>(e - static_cast<long>(i) - 1 + static_cast<long>(n))];
          if (w != 0.0) x += w * inc[i];
        }
        out[j] = x;
      } else {
        out[j] = weighted_sum(weights_[j], inc);
      }
    }
    return out;
  }

 private:
  const KernelSpec& k_;
  const SimGrid& grid_;
  std::vector<long> edge_;
  std::vector<double> lag_;
  std::vector<std::vector<double>> weights_;
};

std::vector<double> u_nodes(Interval a, double ds) {
  if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || !(a.hi > a.lo))
    throw InvalidArgument("integrated fields need bounded, non-empty sets");
  const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil((a.hi - a.lo) / ds - 1e-9)));
  std::vector<double> u(m + 1);
  for (std::size_t j = 0; j <= m; ++j) u[j] = j == m ? a.hi : a.lo + (a.hi - a.lo) * static_cast<double>(j) / m;
  return u;
}

double trapezoid(const IntegratorMeasure& mu, const std::vector<double>& u, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < u.size(); ++j)
    s += 0.5 * (u[j + 1] - u[j]) * (x[j] * mu.density_at(u[j]) + x[j + 1] * mu.density_at(u[j + 1]));
  return s;
}

// Cell averages of mu_f(A, .): integral over A of the kernel's cell averages.
std::vector<double> effective_weights(const KernelSpec& k, const IntegratorMeasure& mu, Interval a,
                                      const SimGrid& grid) {
  const Interval sup = k.s_support({a.lo, a.hi});
  std::vector<double> w(grid.cells(), 0.0);
  quad::Options opt;
  opt.abs_tol = 1e-14;
  opt.rel_tol = 1e-11;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double lo = grid.cell_lo(i);
    const double hi = grid.cell_hi(i);
    if (hi <= sup.lo || lo >= sup.hi) continue;
    std::vector<double> breaks = mu.breaks;
    breaks.push_back(lo);
    breaks.push_back(hi);
    auto g = [&](double u) { return mu.density_at(u) * k.cell_average(u, lo, hi); };
    auto r = quad::integrate<double>(g, a.lo, a.hi, breaks, opt);
    if (r.status == quad::Status::diverged) throw QuadratureDivergence("effective kernel weight diverges");
    w[i] = r.value;
  }
  return w;
}

struct FubiniPlan {
  Interval set;
  std::vector<double> u;
  std::unique_ptr<FieldEvaluator> field;
  std::vector<double> right_weights;
};

std::vector<FubiniPlan> plan_fubini(const KernelSpec& k, const IntegratorMeasure& mu,
                                    const std::vector<Interval>& sets, const SimGrid& grid) {
  std::vector<FubiniPlan> plans;
  for (const Interval& a : sets) {
    if (a.lo < mu.support.lo || a.hi > mu.support.hi) throw InvalidArgument("set is not inside the support of mu");
    FubiniPlan p;
    p.set = a;
    p.u = u_nodes(a, grid.ds);
    p.field = std::make_unique<FieldEvaluator>(k, grid, p.u);
    p.right_weights = effective_weights(k, mu, a, grid);
    plans.push_back(std::move(p));
  }
  return plans;
}

FubiniSides run_plan(const FubiniPlan& p, const IntegratorMeasure& mu, const std::vector<double>& inc) {
  FubiniSides out;
  out.set = p.set;
  out.left = trapezoid(mu, p.u, p.field->values(inc));
  out.right = weighted_sum(p.right_weights, inc);
  out.gap = out.left - out.right;
  return out;
}

}  // namespace

IntegratorMeasure IntegratorMeasure::lebesgue(Interval support) {
  IntegratorMeasure m;
  m.kind = Kind::lebesgue_on_set;
  m.support = support;
  return m;
}

IntegratorMeasure IntegratorMeasure::weighted(std::function<double(double)> density, Interval support,
                                              std::vector<double> breaks) {
  if (!density) throw InvalidArgument("weighted integrator measure needs a density");
  IntegratorMeasure m;
  m.kind = Kind::weighted_density;
  m.density = std::move(density);
  m.support = support;
  m.breaks = std::move(breaks);
  return m;
}

double IntegratorMeasure::density_at(double u) const {
  if (!support.contains(u)) return 0.0;
  if (kind == Kind::lebesgue_on_set) return 1.0;
  const double d = density(u);
  if (d < 0.0 || std::isnan(d)) throw InvalidArgument("integrator density is negative or NaN");
  return d;
}

quad::Result<double> IntegratorMeasure::mass(Interval a) const {
  const Interval b{std::max(a.lo, support.lo), std::min(a.hi, support.hi)};
  quad::Result<double> r;
  if (!(b.hi > b.lo)) return r;
  if (kind == Kind::lebesgue_on_set) {
    r.value = b.length();
    if (std::isinf(r.value)) r.status = quad::Status::diverged;
    return r;
  }
  return quad::integrate<double>([&](double u) { return density_at(u); }, b.lo, b.hi, breaks);
}

bool IntegratorMeasure::equivalent_to_lebesgue() const {
  if (kind == Kind::lebesgue_on_set) return true;
  // Sample the part of the support within [-100, 100], or the 200 units next
  // to its finite end when it lies outside, where a decaying density is
  // still representable.
  double lo = std::max(support.lo, -100.0);
  double hi = std::min(support.hi, 100.0);
  if (!(hi > lo)) {
    if (support.lo >= 100.0) {
      lo = support.lo;
      hi = std::min(support.hi, lo + 200.0);
    } else {
      hi = support.hi;
      lo = std::max(support.lo, hi - 200.0);
    }
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = lo + (hi - lo) * (i + 0.5) / 1000.0;
    if (!(density_at(u) > 0.0)) return false;
  }
  return true;
}

double mu_f_section(const KernelSpec& k, const IntegratorMeasure& mu, Interval a, double s) {
  if (a.lo < mu.support.lo || a.hi > mu.support.hi) throw InvalidArgument("mu_f_section: A is not inside the support of mu");
  if (!(a.hi > a.lo)) return 0.0;
  quad::Options opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-11;
  quad::Result<double> r;
  if (k.stationary) {
    // Integrate in t = u - s so the diagonal u = s sits exactly at t = 0.
    std::vector<double> breaks{0.0};
    for (double b : mu.breaks) breaks.push_back(b - s);
    if (k.family == KernelFamily::custom) {
      for (double b : k.custom_breaks) breaks.push_back(b);
      for (double b : {k.custom_support.lo, k.custom_support.hi}) {
        if (std::isfinite(b)) breaks.push_back(b);
      }
    }
    auto g = [&](double t) {
      const double w = mu.density_at(s + t);
      return w == 0.0 ? 0.0 : w * k.profile(t);
    };
    r = quad::integrate<double>(g, a.lo - s, a.hi - s, breaks, opt);
  } else {
    std::vector<double> breaks = mu.breaks;
    breaks.push_back(s);
    breaks.push_back(0.0);
    auto g = [&](double u) {
      const double w = mu.density_at(u);
      return w == 0.0 ? 0.0 : w * k.eval(u, s);
    };
    r = quad::integrate<double>(g, a.lo, a.hi, breaks, opt);
  }
  if (r.status == quad::Status::diverged) throw QuadratureDivergence("mu_f section diverges");
  return r.value;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds:
      return "holds";
    case Verdict::fails:
      return "fails";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

FubiniCheck fubini_condition_check(const KernelSpec& k, const IntegratorMeasure& mu, Interval a,
                                   const OrliczContext& ctx) {
  if (ctx.p != 1) throw InvalidArgument("the Fubini condition uses the order p = 1");
  if (!ctx.basis.centered) throw NotCentered("the Fubini condition needs a centered basis");
  const Interval dom{std::max(a.lo, mu.support.lo), std::min(a.hi, mu.support.hi)};
  FubiniCheck out;
  const auto mass = mu.mass(dom);
  out.mu_finite = mass.status == quad::Status::converged;

  quad::Options opt;
  opt.rel_tol = 1e-6;
  opt.abs_tol = 1e-10;
  auto verdict_of = [](const quad::Result<double>& r) {
    if (r.status == quad::Status::diverged || std::isinf(r.value)) return Verdict::fails;
    if (r.status == quad::Status::inconclusive) return Verdict::inconclusive;
    return Verdict::holds;
  };

  // Stationary kernel over a homogeneous basis with constant control on the
  // line: the section norms and moments do not depend on u, so both forms are
  // the constant times mu(A).
  const auto& c = ctx.basis.control;
  if (k.stationary && ctx.basis.homogeneous && c.dim == 1 && c.constant && std::isinf(c.lo[0]) &&
      std::isinf(c.hi[0])) {
    if (!(dom.hi > dom.lo)) {
      out.verdict = Verdict::holds;
      if (out.mu_finite) {
        out.moment_verdict = Verdict::holds;
        out.moment_integral = 0.0;
      }
      return out;
    }
    const SFunction section = kernel_section(k, 0.0);
    const double norm = luxemburg_norm(ctx, section);
    if (mass.status == quad::Status::inconclusive) {
      out.verdict = Verdict::inconclusive;
    } else if (std::isinf(norm) || (!out.mu_finite && norm > 0.0)) {
      out.verdict = Verdict::fails;
    } else {
      out.verdict = Verdict::holds;
    }
    out.norm_integral = norm == 0.0 ? 0.0 : (out.verdict == Verdict::fails ? kInf : norm * mass.value);
    if (out.mu_finite) {
      const auto rep = phi_integral(ctx, section, false);
      const bool infinite = rep.diverging_term && *rep.diverging_term != DivergingTerm::drift_H;
      out.moment_verdict = infinite ? Verdict::fails : Verdict::holds;
      out.moment_integral =
          infinite ? kInf : mass.value * (rep.gaussian_term + rep.jump_origin_term + rep.jump_tail_term);
      out.agree = *out.moment_verdict == out.verdict;
    }
    return out;
  }

  bool infinite_norm = false;
  auto norm_at = [&](double u) {
    const double w = mu.density_at(u);
    if (w == 0.0) return 0.0;
    const double n = luxemburg_norm(ctx, kernel_section(k, u));
    if (std::isinf(n)) infinite_norm = true;
    return std::isfinite(n) ? w * n : 0.0;
  };
  if (dom.hi > dom.lo) {
    auto r = quad::integrate<double>(norm_at, dom.lo, dom.hi, mu.breaks, opt);
    out.norm_integral = r.value;
    out.verdict = infinite_norm ? Verdict::fails : verdict_of(r);
    if (out.verdict == Verdict::fails) out.norm_integral = kInf;
  } else {
    out.verdict = Verdict::holds;
  }

  if (out.mu_finite && dom.hi > dom.lo) {
    bool infinite_moment = false;
    auto moment_at = [&](double u) {
      const double w = mu.density_at(u);
      if (w == 0.0) return 0.0;
      const auto rep = phi_integral(ctx, kernel_section(k, u), false);
      if (rep.diverging_term && *rep.diverging_term != DivergingTerm::drift_H) {
        infinite_moment = true;
        return 0.0;
      }
      return w * (rep.gaussian_term + rep.jump_origin_term + rep.jump_tail_term);
    };
    auto r = quad::integrate<double>(moment_at, dom.lo, dom.hi, mu.breaks, opt);
    const Verdict v = infinite_moment ? Verdict::fails : verdict_of(r);
    out.moment_verdict = v;
    out.moment_integral = v == Verdict::fails ? kInf : r.value;
    out.agree = v == out.verdict;
  } else if (out.mu_finite) {
    out.moment_verdict = Verdict::holds;
    out.moment_integral = 0.0;
  }
  return out;
}

std::vector<FubiniSides> integrated_field_sim(const KernelSpec& k, const IntegratorMeasure& mu,
                                              const std::vector<Interval>& sets, const BasisIncrements& increments,
                                              const SimGrid& grid) {
  grid.validate();
  if (increments.values.size() != grid.cells()) throw InvalidArgument("increments do not match the grid");
  const auto plans = plan_fubini(k, mu, sets, grid);
  std::vector<FubiniSides> out;
  for (const auto& p : plans) out.push_back(run_plan(p, mu, increments.values));
  return out;
}

FubiniRefinement fubini_refinement(const LevyQuadruplet& q, const KernelSpec& k, const IntegratorMeasure& mu,
                                   Interval a, const SimGrid& grid, int levels, std::size_t replicas, int threads) {
  if (levels < 2) throw InvalidArgument("refinement needs at least two levels");
  if (replicas == 0) throw InvalidArgument("refinement needs at least one replica");
  FubiniRefinement out;
  SimGrid g = grid;
  for (int level = 0; level < levels; ++level) {
    g.validate();
    const auto plans = plan_fubini(k, mu, {a}, g);
    const IncrementSampler sampler(q, g);
    std::vector<double> sq(replicas, 0.0);
    for_each_chunk(
        replicas, threads,
        [&](std::size_t, std::size_t begin, std::size_t end) {
          std::vector<double> inc;
          for (std::size_t r = begin; r < end; ++r) {
            sampler.fill(r, inc);
            const double gap = run_plan(plans.front(), mu, inc).gap;
            sq[r] = gap * gap;
          }
        },
        1);
    double total = 0.0;
    for (double v : sq) total += v;
    out.ds.push_back(g.ds);
    out.rms_gap.push_back(std::sqrt(total / static_cast<double>(replicas)));
    g.ds *= 0.5;
  }
  for (std::size_t i = 0; i + 1 < out.rms_gap.size(); ++i) out.ratios.push_back(out.rms_gap[i] / out.rms_gap[i + 1]);
  return out;
}

LangevinCheck langevin_check(const LevyQuadruplet& q, const SimGrid& grid, double t, std::size_t replicas,
                             int threads) {
  grid.validate();
  if (!(grid.s0 < 0.0) || !(t > 0.0) || t > grid.s1) throw InvalidArgument("Langevin check needs s0 < 0 < t <= s1");
  const long e0 = edge_index(grid, 0.0);
  const long et = edge_index(grid, t);
  if (e0 < 0 || et < 0) throw InvalidArgument("0 and t must be grid edges");
  if (replicas == 0) throw InvalidArgument("Langevin check needs at least one replica");
  const KernelSpec k = ou_kernel();
  const IntegratorMeasure mu = IntegratorMeasure::lebesgue({0.0, t});
  const std::vector<double> u = u_nodes({0.0, t}, grid.ds);
  const FieldEvaluator field(k, grid, u);
  const IncrementSampler sampler(q, grid);

  std::vector<double> res_sq(replicas, 0.0);
  std::vector<double> lev_sq(replicas, 0.0);
  for_each_chunk(
      replicas, threads,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> inc;
        for (std::size_t r = begin; r < end; ++r) {
          sampler.fill(r, inc);
          const auto x = field.values(inc);
          double lt = 0.0;
          for (long i = e0; i < et; ++i) lt += inc[static_cast<std::size_t>(i)];
          const double residual = trapezoid(mu, u, x) - (lt - x.back() + x.front());
          res_sq[r] = residual * residual;
          lev_sq[r] = lt * lt;
        }
      },
      1);
  LangevinCheck out;
  double rs = 0.0;
  double ls = 0.0;
  for (std::size_t r = 0; r < replicas; ++r) {
    rs += res_sq[r];
    ls += lev_sq[r];
  }
  out.replicas = replicas;
  out.residual_l2 = std::sqrt(rs / static_cast<double>(replicas));
  out.levy_l2 = std::sqrt(ls / static_cast<double>(replicas));
  out.ratio = out.levy_l2 > 0.0 ? out.residual_l2 / out.levy_l2 : 0.0;
  return out;
}

double gamma_convolution_constant(double alpha, double beta) {
  if (!(alpha > -1.0) || !(beta > -1.0)) throw InvalidArgument("gamma convolution needs alpha, beta > -1");
  // Order the arguments so the result is exactly symmetric.
  return special::beta(std::min(alpha, beta) + 1.0, std::max(alpha, beta) + 1.0);
}

std::vector<double> stationary_lag_weights(const KernelSpec& k, double ds, std::size_t lags) {
  if (!k.stationary) throw InvalidArgument("lag weights need a stationary kernel");
  std::vector<double> w(lags);
  for (std::size_t d = 0; d < lags; ++d) {
    const double a = -static_cast<double>(d + 1) * ds;
    w[d] = k.cell_average(0.0, a, a + ds);
  }
  return w;
}

CollapseCheck gamma_ou_collapse_check(double alpha, const LevyQuadruplet& q, const SimGrid& grid, double t_from,
                                      std::size_t replicas, int threads) {
  if (!(alpha > -1.0 && alpha < 0.0)) throw InvalidArgument("collapse check needs alpha in (-1, 0)");
  if (replicas == 0) throw InvalidArgument("collapse check needs at least one replica");
  grid.validate();
  const double beta = -alpha - 1.0;
  if (q.control.dim != 1) throw InvalidArgument("collapse check needs a one-dimensional basis");
  {
    const auto seed = q.seed(point1(0.5 * (grid.s0 + grid.s1)));
    for (double a : {alpha, beta}) {
      const auto gi = gamma_kernel_integrable(*seed, a);
      if (!gi.yes)
        throw IntegrabilityFailure("gamma kernel with alpha = " + std::to_string(a) + " is not integrable: " +
                                   gi.reason);
    }
  }
  const std::size_t n = grid.cells();
  const double ds = grid.ds;
  const KernelSpec ka = gamma_kernel(alpha);
  const KernelSpec kb = gamma_kernel(beta);
  const KernelSpec ko = ou_kernel();
  // Field at cell midpoints: lag d covers t in [(d - 1/2) ds, (d + 1/2) ds].
  std::vector<double> wa(n);
  for (std::size_t d = 0; d < n; ++d) {
    const double a = -(static_cast<double>(d) + 0.5) * ds;
    wa[d] = ka.cell_average(0.0, a, a + ds);
  }
  // Exact integral of phi_beta over u in a cell, d cells before an edge.
  std::vector<double> wb = stationary_lag_weights(kb, ds, n);
  for (double& w : wb) w *= ds;
  const std::vector<double> wo = stationary_lag_weights(ko, ds, n);
  const double kab = gamma_convolution_constant(alpha, beta);

  long first = edge_index(grid, std::max(t_from, grid.s0));
  if (first < 0) first = static_cast<long>(std::ceil((std::max(t_from, grid.s0) - grid.s0) / ds));
  first = std::max<long>(first, 1);
  if (first > static_cast<long>(n)) throw InvalidArgument("collapse check: t_from beyond the grid");

  const IncrementSampler sampler(q, grid);
  std::vector<double> diff_sq(replicas, 0.0);
  std::vector<double> ou_sq(replicas, 0.0);
  for_each_chunk(
      replicas, threads,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> inc;
        std::vector<double> x(n);
        for (std::size_t r = begin; r < end; ++r) {
          sampler.fill(r, inc);
          for (std::size_t m = 0; m < n; ++m) {
            double v = 0.0;
            for (std::size_t d = 0; d <= m; ++d) v += wa[d] * inc[m - d];
            x[m] = v;
          }
          double dsq = 0.0;
          double osq = 0.0;
          for (std::size_t e = static_cast<std::size_t>(first); e <= n; ++e) {
            double xm = 0.0;
            double ou = 0.0;
            for (std::size_t d = 0; d < e; ++d) {
              xm += wb[d] * x[e - 1 - d];
              ou += wo[d] * inc[e - 1 - d];
            }
            dsq += (xm - kab * ou) * (xm - kab * ou);
            osq += kab * ou * kab * ou;
          }
          diff_sq[r] = dsq;
          ou_sq[r] = osq;
        }
      },
      1);
  CollapseCheck out;
  double dsum = 0.0;
  double osum = 0.0;
  for (std::size_t r = 0; r < replicas; ++r) {
    dsum += diff_sq[r];
    osum += ou_sq[r];
  }
  out.relative_error = osum > 0.0 ? std::sqrt(dsum / osum) : (dsum > 0.0 ? kInf : 0.0);
  out.k_alpha = kab;
  out.points = n + 1 - static_cast<std::size_t>(first);
  out.replicas = replicas;
  return out;
}

}  // namespace sdfields
