#include "sdfields/field_process.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "sdfields/errors.hpp"
#include "sdfields/parallel.hpp"

namespace sdfields {

namespace {

quad::Options inner_options() {
  quad::Options opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-10;
  return opt;
}

quad::Options outer_options() {
  quad::Options opt;
  opt.abs_tol = 1e-12;
  opt.rel_tol = 1e-9;
  return opt;
}

void check_u_hat(const std::vector<double>& u_hat) {
  if (u_hat.empty() || u_hat.size() > kMaxProjection)
    throw InvalidArgument("projections need between 1 and 8 index points");
}

// Integral over s of g(s, seed, k) c(ds), where k holds the kernel values
// f(u_j, s) at the projection points.
template <class T, class G>
quad::Result<T> s_integral(const MasterMeasureSpec& m, const std::vector<double>& u_hat, G&& g,
                           const quad::Options& opt = inner_options()) {
  const Interval dom = master_s_domain(m, u_hat);
  std::vector<double> k(u_hat.size());
  auto h = [&](SPos s) -> T {
    const Point pt = point1(s.value());
    const double c = m.basis.control.density_at(pt);
    if (c == 0.0) return T{};
    bool zero = true;
    for (std::size_t j = 0; j < u_hat.size(); ++j) {
      k[j] = m.kernel.eval(u_hat[j], s);
      zero &= k[j] == 0.0;
    }
    if (zero) return T{};
    return c * g(*m.basis.seed(pt), k);
  };
  return integrate_s<T>(h, dom, master_s_breaks(m, u_hat), opt);
}

// Drift correction integral of tau(a x) - a tau(x) against rho.
double tau_correction(const LevySeed& seed, double a) {
  if (a == 0.0 || seed.rho.is_zero()) return 0.0;
  LevySeed pure = seed;
  pure.gamma = 0.0;
  return drift_functional(pure, a);
}

// Jump part of the cumulant of X_u: integral over s of
// rho.jump_exponent(<theta, k>) - i sum_j theta_j tau_correction(k_j), with
// every k_j multiplied by `factor`.
cplx jump_cumulant_x(const MasterMeasureSpec& m, const std::vector<double>& u_hat, const Eigen::VectorXd& theta,
                     double factor) {
  if (factor == 0.0) return {0.0, 0.0};
  auto r = s_integral<cplx>(m, u_hat, [&](const LevySeed& seed, const std::vector<double>& k) -> cplx {
    if (seed.rho.is_zero()) return {0.0, 0.0};
    double a = 0.0;
    double corr = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) {
      a += theta[static_cast<Eigen::Index>(j)] * k[j];
      if (theta[static_cast<Eigen::Index>(j)] != 0.0)
        corr += theta[static_cast<Eigen::Index>(j)] * tau_correction(seed, factor * k[j]);
    }
    return seed.rho.jump_exponent(factor * a) - cplx(0.0, corr);
  });
  if (r.status == quad::Status::diverged) throw QuadratureDivergence("jump cumulant of the field diverges");
  return r.value;
}

double nu_x(const MasterMeasureSpec& m, const std::vector<double>& u_hat, const Region& region) {
  return master_measure_eval(m, CylinderSet{u_hat, region}).value;
}

// Integral of g(r) f(r) dr-type quantities over the support of f.
template <class T, class G>
quad::Result<T> r_integral(const SFunction& f, G&& g, const quad::Options& opt = outer_options()) {
  auto h = [&](double r) -> T {
    const double v = f(r);
    if (v == 0.0 || !std::isfinite(v)) return T{};
    return g(r, v);
  };
  return quad::integrate<T>(h, f.support.lo, f.support.hi, f.breaks, opt);
}

LevyQuadruplet scaled_control(LevyQuadruplet q, double factor) {
  ControlMeasure& c = q.control;
  if (c.constant) {
    c.constant_value *= factor;
  } else {
    auto d = c.density;
    c.density = [d, factor](const Point& s) { return factor * d(s); };
  }
  return q;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  // splitmix64 finalizer on the pair.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

FieldTripletSpec FieldTripletSpec::from_volterra(const MasterMeasureSpec& master) {
  FieldTripletSpec spec;
  spec.master = master;
  auto m = std::make_shared<const MasterMeasureSpec>(master);
  spec.gamma_fn = [m](double u) {
    auto r = s_integral<double>(*m, {u}, [](const LevySeed& seed, const std::vector<double>& k) {
      return drift_functional(seed, k[0]);
    });
    if (r.status == quad::Status::diverged) throw IntegrabilityFailure("drift integral of the field diverges");
    return r.value;
  };
  spec.cov_fn = [m](double u, double v) {
    auto r = s_integral<double>(*m, {u, v}, [](const LevySeed& seed, const std::vector<double>& k) {
      return seed.b * seed.b * k[0] * k[1];
    });
    if (r.status == quad::Status::diverged) throw IntegrabilityFailure("covariance integral of the field diverges");
    return r.value;
  };
  return spec;
}

std::vector<std::string> FieldTripletSpec::validate(const std::vector<double>& u_sample) const {
  std::vector<std::string> issues;
  if (!gamma_fn || !cov_fn) {
    issues.push_back("gamma and covariance functions must be set");
    return issues;
  }
  const auto n = static_cast<Eigen::Index>(u_sample.size());
  Eigen::MatrixXd b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = cov_fn(u_sample[i], u_sample[j]);
  }
  const double scale = std::max(1.0, n > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
  if (n > 0 && (b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) issues.push_back("covariance is not symmetric");
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (b + b.transpose()));
    if (es.eigenvalues().minCoeff() < -1e-10 * scale) issues.push_back("covariance is not nonnegative definite");
  }
  return issues;
}

void FiniteProjection::validate() const {
  check_u_hat(u_hat);
  if (y.size() != u_hat.size()) throw InvalidArgument("pairing weights must match the index points");
}

TripletND process_triplet_at(const FieldTripletSpec& spec, double t, const std::vector<double>& u_hat) {
  if (!std::isfinite(t)) throw InvalidArgument("process time must be finite");
  check_u_hat(u_hat);
  const int n = static_cast<int>(u_hat.size());
  if (t == 0.0) return TripletND::zero(n);
  const double at = std::abs(t);
  TripletND out;
  out.dim = n;
  out.gamma = Eigen::VectorXd(n);
  out.B = Eigen::MatrixXd(n, n);
  for (int i = 0; i < n; ++i) {
    out.gamma[i] = at * spec.gamma_fn(u_hat[i]);
    for (int j = 0; j <= i; ++j) out.B(i, j) = out.B(j, i) = at * spec.cov_fn(u_hat[i], u_hat[j]);
  }
  auto m = std::make_shared<const MasterMeasureSpec>(spec.master);
  out.nu = [m, u_hat, at](const Region& region) { return at * nu_x(*m, u_hat, region); };
  out.jump_cumulant = [m, u_hat, at](const Eigen::VectorXd& theta) {
    return at * jump_cumulant_x(*m, u_hat, theta, 1.0);
  };
  return out;
}

TripletND integral_triplet(const FieldTripletSpec& spec, const SFunction& f, const std::vector<double>& u_hat) {
  check_u_hat(u_hat);
  const int n = static_cast<int>(u_hat.size());
  const MasterMeasureSpec& m = spec.master;
  Eigen::VectorXd gamma_u(n);
  Eigen::MatrixXd b_u(n, n);
  for (int i = 0; i < n; ++i) {
    gamma_u[i] = spec.gamma_fn(u_hat[i]);
    for (int j = 0; j <= i; ++j) b_u(i, j) = b_u(j, i) = spec.cov_fn(u_hat[i], u_hat[j]);
  }

  // Drift display: f(r) Gamma_u + integral of tau(f x) - f tau(x) against nu_u, per r.
  std::map<double, Eigen::VectorXd> drift_cache;
  auto drift_at = [&](double r, double v) -> const Eigen::VectorXd& {
    auto it = drift_cache.find(r);
    if (it != drift_cache.end()) return it->second;
    Eigen::VectorXd d = v * gamma_u;
    for (int j = 0; j < n; ++j) {
      auto c = s_integral<double>(m, {u_hat[j]}, [&](const LevySeed& seed, const std::vector<double>& k) {
        return tau_correction(seed, v * k[0]) - v * tau_correction(seed, k[0]);
      });
      if (c.status == quad::Status::diverged) throw IntegrabilityFailure("drift display: the tau correction diverges");
      d[j] += c.value;
    }
    return drift_cache.emplace(r, d).first->second;
  };
  {
    auto r = r_integral<double>(f, [&](double r, double v) { return drift_at(r, v).norm(); });
    if (r.status == quad::Status::diverged) throw IntegrabilityFailure("drift display: integral of |drift(s)| diverges");
  }
  Eigen::VectorXd gamma_i(n);
  for (int j = 0; j < n; ++j) {
    auto r = r_integral<double>(f, [&](double r, double v) { return drift_at(r, v)[j]; });
    gamma_i[j] = r.value;
  }

  // Gaussian display.
  auto f2 = r_integral<double>(f, [](double, double v) { return v * v; });
  const bool gaussian = b_u.cwiseAbs().maxCoeff() > 0.0;
  if (gaussian && f2.status == quad::Status::diverged)
    throw IntegrabilityFailure("Gaussian display: integral of f^2 diverges");

  // Jump display: integral of 1 ^ |f(r) x|^2 against nu_u(dx) dr.
  {
    auto r = r_integral<double>(f, [&](double, double v) {
      auto c = s_integral<double>(m, u_hat, [&](const LevySeed& seed, const std::vector<double>& k) {
        if (seed.rho.is_zero()) return 0.0;
        double norm2 = 0.0;
        for (double x : k) norm2 += x * x;
        const auto jt = jump_terms(seed, std::abs(v) * std::sqrt(norm2), 0);
        return jt.origin + jt.tail;
      });
      if (c.status == quad::Status::diverged) return kInf;
      return c.value;
    });
    if (r.status == quad::Status::diverged || std::isinf(r.value))
      throw IntegrabilityFailure("jump display: integral of 1 ^ |f x|^2 diverges");
  }

  TripletND out;
  out.dim = n;
  out.gamma = gamma_i;
  out.B = gaussian ? Eigen::MatrixXd(f2.value * b_u) : Eigen::MatrixXd::Zero(n, n);
  auto ms = std::make_shared<const MasterMeasureSpec>(m);
  auto fs = std::make_shared<const SFunction>(f);
  out.nu = [ms, fs, u_hat](const Region& region) {
    const CylinderSet base{u_hat, region};
    base.validate();
    auto r = r_integral<double>(*fs, [&](double, double v) {
      return master_measure_eval(*ms, base.scaled(1.0 / v)).value;
    });
    if (r.status == quad::Status::diverged) throw QuadratureDivergence("integrated master measure diverges");
    return r.value;
  };
  out.jump_cumulant = [ms, fs, u_hat](const Eigen::VectorXd& theta) {
    auto r = r_integral<cplx>(*fs, [&](double, double v) { return jump_cumulant_x(*ms, u_hat, theta, v); });
    if (r.status == quad::Status::diverged) throw QuadratureDivergence("jump cumulant of the integral diverges");
    return r.value;
  };
  return out;
}

ConsistencyResult projection_consistency_check(const FieldTripletSpec& spec, const SFunction& f,
                                               const std::vector<double>& u_hat, const std::vector<double>& v_hat,
                                               const std::vector<Region>& regions) {
  check_u_hat(u_hat);
  check_u_hat(v_hat);
  std::vector<std::size_t> pos;
  for (double u : u_hat) {
    auto it = std::find(v_hat.begin(), v_hat.end(), u);
    if (it == v_hat.end()) throw InvalidArgument("u_hat must be a subset of v_hat");
    pos.push_back(static_cast<std::size_t>(it - v_hat.begin()));
  }
  const TripletND small = integral_triplet(spec, f, u_hat);
  const TripletND large = integral_triplet(spec, f, v_hat);
  ConsistencyResult out;
  for (const Region& region : regions) {
    Region lifted;
    for (const Box& b : region.boxes) {
      if (b.dim() != u_hat.size()) throw InvalidArgument("region dimension does not match u_hat");
      Box l{std::vector<double>(v_hat.size(), -kInf), std::vector<double>(v_hat.size(), kInf)};
      for (std::size_t j = 0; j < pos.size(); ++j) {
        l.lo[pos[j]] = b.lo[j];
        l.hi[pos[j]] = b.hi[j];
      }
      lifted.boxes.push_back(std::move(l));
    }
    const double a = small.nu(region);
    const double b = large.nu(lifted);
    const double d = std::abs(a - b);
    out.max_abs = std::max(out.max_abs, d);
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale > 0.0) out.max_rel = std::max(out.max_rel, d / scale);
    ++out.regions;
  }
  return out;
}

SFunction ou_integrand() {
  return plain_function([](double s) { return std::exp(-s); }, {0.0, kInf});
}

SFunction ou_integrand_at(double t) {
  return plain_function([t](double s) { return std::exp(-(t - s)); }, {-kInf, t});
}

SFunction langevin_integrand() {
  // e^{-(1 - r)} 1{r <= 1} - e^{r} 1{r <= 0} + integral over [max(r, 0), 1] of e^{-(s - r)} ds.
  return plain_function(
      [](double r) {
        const double y1 = std::exp(-(1.0 - r));
        const double y0 = r <= 0.0 ? std::exp(r) : 0.0;
        const double area = std::exp(r) * (std::exp(-std::max(r, 0.0)) - std::exp(-1.0));
        return y1 - y0 + area;
      },
      {-kInf, 1.0}, {0.0});
}

double log_moment_projection(const MasterMeasureSpec& master, const std::vector<double>& u_hat) {
  check_u_hat(u_hat);
  bool diverged = false;
  auto r = s_integral<double>(master, u_hat, [&](const LevySeed& seed, const std::vector<double>& k) {
    if (diverged || seed.rho.is_zero()) return 0.0;
    double norm2 = 0.0;
    for (double x : k) norm2 += x * x;
    const double a = std::sqrt(norm2);
    if (a == 0.0) return 0.0;
    // Integral of log(a |x|) over |x| > 1 / a.
    const LevyMeasure1D& rho = seed.rho;
    double total = 0.0;
    for (const Atom& at : rho.atoms) {
      if (a * std::abs(at.location) > 1.0) total += at.mass * std::log(a * std::abs(at.location));
    }
    if (rho.density) {
      auto g = [&](double x) { return rho.density_at(x) * std::log(a * std::abs(x)); };
      const double lo = 1.0 / a;
      for (int side : {+1, -1}) {
        const double from = side > 0 ? std::max(lo, rho.support.lo) : std::max(lo, -rho.support.hi);
        const double to = side > 0 ? rho.support.hi : -rho.support.lo;
        if (!(to > from)) continue;
        auto q = quad::integrate<double>([&](double y) { return g(side * y); }, from, to, {}, inner_options());
        // An inconclusive tail counts as a missing moment.
        if (q.status != quad::Status::converged) diverged = true;
        total += q.value;
      }
    }
    return total;
  });
  if (diverged || r.status != quad::Status::converged) return kInf;
  return r.value;
}

OuMarginalResult ou_field_marginal_check(const FieldTripletSpec& spec, const std::vector<double>& u_hat,
                                         const std::vector<Eigen::VectorXd>& theta_grid,
                                         const OuMarginalOptions& options) {
  check_u_hat(u_hat);
  if (!std::isfinite(log_moment_projection(spec.master, u_hat)))
    throw LogMomentFailure("the master measure has no log moment on the projection");
  for (const auto& th : theta_grid) {
    if (th.size() != static_cast<Eigen::Index>(u_hat.size())) throw InvalidArgument("theta must match u_hat");
  }
  OuMarginalResult out;
  const TripletND base = integral_triplet(spec, ou_integrand(), u_hat);
  std::vector<cplx> base_c;
  for (const auto& th : theta_grid) base_c.push_back(base.cumulant(th));
  for (double t : options.t_values) {
    const TripletND y = integral_triplet(spec, ou_integrand_at(t), u_hat);
    for (std::size_t i = 0; i < theta_grid.size(); ++i)
      out.max_discrepancy = std::max(out.max_discrepancy, std::abs(y.cumulant(theta_grid[i]) - base_c[i]));
    out.t_checked.push_back(t);
  }

  const TripletND x = process_triplet_at(spec, 1.0, u_hat);
  const TripletND recovered = integral_triplet(spec, langevin_integrand(), u_hat);
  for (const auto& th : theta_grid)
    out.langevin_discrepancy = std::max(out.langevin_discrepancy, std::abs(recovered.cumulant(th) - x.cumulant(th)));

  const auto sets = default_cylinder_sets(u_hat, options.dilation_scales);
  out.dilation = dilation_check_sets([&](const CylinderSet& a) { return base.nu(a.region); }, options.q_grid, sets);
  return out;
}

double pairing_variance_rate(const FieldTripletSpec& spec, const FiniteProjection& y) {
  y.validate();
  const auto n = y.u_hat.size();
  double gauss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) gauss += y.y[i] * y.y[j] * spec.cov_fn(y.u_hat[i], y.u_hat[j]);
  }
  bool diverged = false;
  auto r = s_integral<double>(spec.master, y.u_hat, [&](const LevySeed& seed, const std::vector<double>& k) {
    if (seed.rho.is_zero()) return 0.0;
    double a = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) a += y.y[j] * k[j];
    if (a == 0.0) return 0.0;
    auto m2 = seed.rho.abs_moment(2.0, 0.0, kInf);
    if (m2.status == quad::Status::diverged) diverged = true;
    return a * a * m2.value;
  });
  if (diverged || r.status == quad::Status::diverged) return kInf;
  return gauss + r.value;
}

FieldProcessPaths simulate_field_process(const MasterMeasureSpec& master, const std::vector<double>& u_hat,
                                         const std::vector<double>& t_grid, const SimGrid& window,
                                         std::size_t replicas, int threads) {
  check_u_hat(u_hat);
  window.validate();
  if (t_grid.empty()) throw InvalidArgument("the time grid is empty");
  double prev = 0.0;
  for (double t : t_grid) {
    if (!(t >= prev) || !std::isfinite(t)) throw InvalidArgument("the time grid must be increasing and start at t >= 0");
    prev = t;
  }
  if (replicas == 0) throw InvalidArgument("replicas must be at least 1");

  const std::size_t n = u_hat.size();
  const std::size_t steps = t_grid.size();
  std::vector<std::vector<double>> weights;
  for (double u : u_hat) weights.push_back(kernel_cell_weights(master.kernel, u, window));

  // One sampler per time step: the basis on S x (t_{k-1}, t_k] has control c(ds) (t_k - t_{k-1}).
  std::vector<std::unique_ptr<IncrementSampler>> samplers(steps);
  FieldProcessPaths out;
  prev = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double dt = t_grid[k] - prev;
    prev = t_grid[k];
    if (dt == 0.0) continue;
    SimGrid g = window;
    g.seed = mix_seed(window.seed, k);
    samplers[k] = std::make_unique<IncrementSampler>(scaled_control(master.basis, dt), g);
    const auto& d = samplers[k]->diagnostics();
    out.diagnostics.cells = d.cells;
    out.diagnostics.eps = d.eps;
    out.diagnostics.expected_jumps_per_cell = std::max(out.diagnostics.expected_jumps_per_cell, d.expected_jumps_per_cell);
    out.diagnostics.small_jump_variance = std::max(out.diagnostics.small_jump_variance, d.small_jump_variance);
    out.diagnostics.dropped_tail_mass = std::max(out.diagnostics.dropped_tail_mass, d.dropped_tail_mass);
  }

  out.u_hat = u_hat;
  out.t_grid = t_grid;
  out.values.assign(replicas, std::vector<double>(steps * n, 0.0));
  for_each_chunk(replicas, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> inc;
    for (std::size_t r = begin; r < end; ++r) {
      std::vector<double>& v = out.values[r];
      std::vector<double> level(n, 0.0);
      for (std::size_t k = 0; k < steps; ++k) {
        if (samplers[k]) {
          samplers[k]->fill(r, inc);
          for (std::size_t j = 0; j < n; ++j) level[j] += weighted_sum(weights[j], inc);
        }
        for (std::size_t j = 0; j < n; ++j) v[k * n + j] = level[j];
      }
    }
  });
  return out;
}

}  // namespace sdfields
