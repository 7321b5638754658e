#include "sdfields/volterra_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sdfields/errors.hpp"
#include "sdfields/parallel.hpp"

namespace sdfields {

// ---------------------------------------------------------------------------
// Grid

void SimGrid::validate() const {
  if (!std::isfinite(s0) || !std::isfinite(s1) || !(s1 > s0))
    throw InvalidArgument("grid: s range must be a finite interval with s1 > s0");
  if (!(ds > 0.0) || !std::isfinite(ds)) throw InvalidArgument("grid: ds must be positive");
  if ((s1 - s0) / ds > static_cast<double>(kMaxCells)) throw InvalidArgument("grid: more than 1e7 cells");
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("grid: the small-jump cut must lie in (0, 1]");
  if (!std::is_sorted(u_points.begin(), u_points.end()))
    throw InvalidArgument("grid: u points must be sorted");
}

std::size_t SimGrid::cells() const {
  return static_cast<std::size_t>(std::ceil((s1 - s0) / ds - 1e-9));
}

double SimGrid::cell_hi(std::size_t i) const { return std::min(s1, s0 + static_cast<double>(i + 1) * ds); }

// ---------------------------------------------------------------------------
// Jump table

JumpTable build_jump_table(const LevyMeasure1D& m, double eps, int bins_per_side) {
  JumpTable t;
  t.eps = eps;
  t.density = m.density;
  auto small = m.abs_moment(2.0, 0.0, eps);
  t.small_variance = small.value;

  double total = 0.0;
  auto push = [&](double lo, double hi, double bound, double mass) {
    if (!(mass > 0.0)) return;
    t.lo.push_back(lo);
    t.hi.push_back(hi);
    t.density_bound.push_back(bound);
    total += mass;
    t.cumulative.push_back(total);
  };

  if (m.density) {
    // Density part only: atoms are tabulated separately below.
    LevyMeasure1D dens = m;
    dens.atoms.clear();
    for (int side : {+1, -1}) {
      double a = std::max(eps, side > 0 ? std::max(0.0, m.support.lo) : std::max(0.0, -m.support.hi));
      double b = side > 0 ? std::max(0.0, m.support.hi) : std::max(0.0, -m.support.lo);
      if (!(b > a)) continue;
      if (std::isinf(b)) {
        // Tabulate up to the point where the remaining tail is negligible.
        const double body_scale = std::max(1.0, dens.side_moment(side, 0.0, a, std::max(2.0 * a, 1.0)).value);
        double x = std::max(2.0 * a, 1.0);
        double tail = dens.side_moment(side, 0.0, x, kInf).value;
        while (tail > 1e-14 * body_scale && x < 1e30) {
          x *= 4.0;
          tail = dens.side_moment(side, 0.0, x, kInf).value;
        }
        t.dropped_tail_mass += tail;
        b = x;
      }
      std::vector<double> edges;
      const double ratio = std::log(b / a) / bins_per_side;
      for (int i = 0; i <= bins_per_side; ++i) edges.push_back(a * std::exp(ratio * i));
      edges.back() = b;
      std::vector<double> extra{1.0};
      for (double br : m.breaks) extra.push_back(side * br);
      for (double e : extra) {
        if (e > a && e < b) edges.push_back(e);
      }
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
      for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double y0 = edges[i];
        const double y1 = edges[i + 1];
        const double mass = dens.side_moment(side, 0.0, y0, y1).value;
        if (!(mass > 0.0)) continue;
        const double tau = y1 <= 1.0 ? dens.side_moment(side, 1.0, y0, y1).value : mass;
        t.tau_mean += side * tau;
        const double w = y1 - y0;
        double bound = 0.0;
        for (double y : {y0 + 1e-12 * w, 0.5 * (y0 + y1), y1 - 1e-12 * w, y0 + 0.25 * w, y0 + 0.75 * w})
          bound = std::max(bound, m.density_at(side * y));
        const double lo = side > 0 ? y0 : -y1;
        const double hi = side > 0 ? y1 : -y0;
        push(lo, hi, bound * (1.0 + 1e-6), mass);
      }
    }
  }
  for (const Atom& at : m.atoms) {
    if (std::abs(at.location) > eps && at.mass > 0.0) {
      t.tau_mean += truncate(at.location) * at.mass;
      push(at.location, at.location, 0.0, at.mass);
    }
  }
  t.rate = total;
  return t;
}

double JumpTable::sample(CellRng& rng) const {
  const double target = rng.uniform() * rate;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  const std::size_t i = std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
  if (lo[i] == hi[i]) return lo[i];
  double x = lo[i];
  for (int tries = 0; tries < 10000; ++tries) {
    x = lo[i] + (hi[i] - lo[i]) * rng.uniform();
    if (rng.uniform() * density_bound[i] <= density(x)) return x;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Increments

IncrementSampler::IncrementSampler(const LevyQuadruplet& q, const SimGrid& grid) : q_(q), grid_(grid) {
  grid_.validate();
  if (q_.control.dim != 1) throw InvalidArgument("simulation needs a one-dimensional control measure");
  const std::size_t n = grid_.cells();
  diag_.cells = n;
  diag_.eps = grid_.eps;

  std::map<const LevySeed*, std::size_t> cache;
  auto table_for = [&](const std::shared_ptr<const LevySeed>& seed) -> const JumpTable* {
    auto it = cache.find(seed.get());
    if (it != cache.end()) return tables_[it->second].get();
    tables_.push_back(std::make_shared<JumpTable>(build_jump_table(seed->rho, grid_.eps)));
    cache[seed.get()] = tables_.size() - 1;
    return tables_.back().get();
  };
  const double c_lo = q_.control.lo[0];
  const double c_hi = q_.control.hi[0];
  auto cell_mass = [&](std::size_t i) {
    const double a = std::max(grid_.cell_lo(i), c_lo);
    const double b = std::min(grid_.cell_hi(i), c_hi);
    if (!(b > a)) return 0.0;
    if (q_.control.constant) return q_.control.constant_value * (b - a);
    return q_.control.mass(point1(a), point1(b));
  };
  auto make_law = [&](const LevySeed& seed, const JumpTable* table, double c) {
    CellLaw law;
    law.drift = (seed.gamma - table->tau_mean) * c;
    law.sd = std::sqrt((seed.b * seed.b + table->small_variance) * c);
    law.jump_mean = table->rate * c;
    law.exp_neg_jump_mean = std::exp(-law.jump_mean);
    law.table = table;
    if (law.jump_mean > kMaxJumpsPerCell)
      throw JumpRateOverflow("expected jump count per cell exceeds 1e6; raise eps or refine ds");
    diag_.expected_jumps_per_cell = std::max(diag_.expected_jumps_per_cell, law.jump_mean);
    diag_.small_jump_variance = std::max(diag_.small_jump_variance, table->small_variance);
    diag_.dropped_tail_mass = std::max(diag_.dropped_tail_mass, table->dropped_tail_mass);
    return law;
  };

  const bool whole_cells_inside = grid_.s0 >= c_lo && grid_.s1 <= c_hi;
  const bool uniform_cells = std::abs((grid_.s1 - grid_.s0) - n * grid_.ds) <= 1e-9 * grid_.ds;
  if (q_.factorizable && q_.control.constant && whole_cells_inside && uniform_cells) {
    auto seed = q_.seed(point1(grid_.s0));
    homogeneous_law_ = make_law(*seed, table_for(seed), q_.control.constant_value * grid_.ds);
    homogeneous_ = true;
    return;
  }
  laws_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mid = 0.5 * (grid_.cell_lo(i) + grid_.cell_hi(i));
    auto seed = q_.seed(point1(std::clamp(mid, c_lo, c_hi)));
    laws_.push_back(make_law(*seed, table_for(seed), cell_mass(i)));
  }
}

IncrementSampler::CellLaw IncrementSampler::law(std::size_t cell) const {
  return homogeneous_ ? homogeneous_law_ : laws_[cell];
}

double IncrementSampler::cell_increment(std::uint64_t replica, std::size_t cell) const {
  const CellLaw& l = homogeneous_ ? homogeneous_law_ : laws_[cell];
  CellRng rng(grid_.seed, replica, cell, StreamTag::basis);
  double x = l.drift;
  const std::uint64_t jumps = l.jump_mean > 0.0 ? rng.poisson(l.jump_mean, l.exp_neg_jump_mean) : 0;
  if (l.sd > 0.0) x += l.sd * rng.normal();
  for (std::uint64_t j = 0; j < jumps; ++j) x += l.table->sample(rng);
  return x;
}

void IncrementSampler::fill(std::uint64_t replica, std::vector<double>& out) const {
  const std::size_t n = diag_.cells;
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = cell_increment(replica, i);
}

BasisIncrements simulate_basis_increments(const LevyQuadruplet& q, const SimGrid& grid, std::uint64_t replica) {
  IncrementSampler sampler(q, grid);
  BasisIncrements out;
  out.replica = replica;
  sampler.fill(replica, out.values);
  out.diagnostics = sampler.diagnostics();
  return out;
}

// ---------------------------------------------------------------------------
// Fields

std::vector<double> cell_weights(const CellAverage& f, const SimGrid& grid) {
  const std::size_t n = grid.cells();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = f(grid.cell_lo(i), grid.cell_hi(i));
  return w;
}

std::vector<double> kernel_cell_weights(const KernelSpec& k, double u, const SimGrid& grid) {
  if (k.family == KernelFamily::gamma && !(k.alpha > -1.0))
    throw SingularCellOverflow("gamma kernel with alpha <= -1 has a non-integrable singular cell");
  const Interval sup = k.s_support({u});
  const std::size_t n = grid.cells();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = grid.cell_lo(i);
    const double b = grid.cell_hi(i);
    if (b <= sup.lo || a >= sup.hi) continue;
    w[i] = k.cell_average(u, a, b);
  }
  return w;
}

double weighted_sum(const std::vector<double>& weights, const std::vector<double>& increments) {
  if (weights.size() != increments.size()) throw InvalidArgument("weights and increments differ in length");
  double x = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] != 0.0) x += weights[i] * increments[i];
  }
  return x;
}

FieldPath simulate_field(const KernelSpec& k, std::shared_ptr<const BasisIncrements> increments,
                         const SimGrid& grid) {
  if (!increments) throw InvalidArgument("simulate_field: no increments");
  if (increments->values.size() != grid.cells()) throw InvalidArgument("simulate_field: increments do not match grid");
  FieldPath p;
  p.u_points = grid.u_points;
  p.grid = grid;
  p.kernel_label = k.label;
  for (double u : grid.u_points) p.values.push_back(weighted_sum(kernel_cell_weights(k, u, grid), increments->values));
  p.increments = std::move(increments);
  return p;
}

cplx cumulant_oracle(const LevyQuadruplet& q, const KernelSpec& k, const std::vector<double>& u,
                     const std::vector<double>& theta, Interval window) {
  if (u.size() != theta.size()) throw InvalidArgument("cumulant_oracle: u and theta differ in length");
  if (q.control.dim != 1) throw InvalidArgument("cumulant_oracle needs a one-dimensional control measure");
  if (std::all_of(theta.begin(), theta.end(), [](double t) { return t == 0.0; })) return {0.0, 0.0};
  const Interval ks = k.s_support(u);
  Interval dom{std::max({ks.lo, q.control.lo[0], window.lo}), std::min({ks.hi, q.control.hi[0], window.hi})};
  std::vector<double> breaks = k.s_breaks(u);
  for (double x : {q.control.lo[0], q.control.hi[0], window.lo, window.hi}) {
    if (std::isfinite(x)) breaks.push_back(x);
  }
  auto g = [&](SPos s) -> cplx {
    double arg = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) arg += theta[j] * k.eval(u[j], s);
    if (arg == 0.0) return {0.0, 0.0};
    const Point pt = point1(s.value());
    const double c = q.control.density_at(pt);
    if (c == 0.0) return {0.0, 0.0};
    return c * cumulant_exponent(q, arg, pt);
  };
  auto r = integrate_s<cplx>(g, dom, breaks);
  if (r.status == quad::Status::diverged) throw QuadratureDivergence("cumulant integral diverges");
  return r.value;
}

CfEstimate CfAccumulator::estimate() const {
  CfEstimate e;
  e.n = n;
  if (n == 0) return e;
  const double nn = static_cast<double>(n);
  e.value = sum / nn;
  if (n > 1) {
    // For a sample mean the jackknife variance reduces to the sum of squared
    // deviations over n (n - 1).
    const double ss = std::max(0.0, sum_sq - nn * std::norm(e.value));
    e.se = std::sqrt(ss / (nn * (nn - 1.0)));
  }
  return e;
}

namespace {

std::vector<std::size_t> locate(const std::vector<double>& points, const std::vector<double>& u) {
  std::vector<std::size_t> idx;
  for (double x : u) {
    auto it = std::find(points.begin(), points.end(), x);
    if (it == points.end()) throw InvalidArgument("u = " + std::to_string(x) + " is not a simulated point");
    idx.push_back(it - points.begin());
  }
  return idx;
}

}  // namespace

CfEstimate empirical_cf(const std::vector<FieldPath>& paths, const std::vector<double>& u,
                        const std::vector<double>& theta) {
  if (paths.size() < 100) throw InvalidArgument("empirical_cf needs at least 100 replicas");
  if (u.size() != theta.size()) throw InvalidArgument("empirical_cf: u and theta differ in length");
  CfAccumulator acc;
  for (const FieldPath& p : paths) {
    const auto idx = locate(p.u_points, u);
    double arg = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) arg += theta[j] * p.values[idx[j]];
    acc.add(std::exp(cplx(0.0, arg)));
  }
  return acc.estimate();
}

StreamingCf streaming_cf(const LevyQuadruplet& q, const KernelSpec& k, const SimGrid& grid,
                         std::size_t replicas, const std::vector<CfTarget>& targets, int threads) {
  IncrementSampler sampler(q, grid);
  const std::size_t nu = grid.u_points.size();
  std::vector<std::vector<double>> weights;
  std::vector<std::size_t> first(nu), last(nu);
  for (std::size_t j = 0; j < nu; ++j) {
    weights.push_back(kernel_cell_weights(k, grid.u_points[j], grid));
    const auto& w = weights.back();
    auto nz = [](double x) { return x != 0.0; };
    auto f = std::find_if(w.begin(), w.end(), nz);
    first[j] = f - w.begin();
    last[j] = w.rend() - std::find_if(w.rbegin(), w.rend(), nz);
  }
  std::vector<std::vector<std::size_t>> target_idx;
  for (const CfTarget& t : targets) {
    if (t.u.size() != t.theta.size()) throw InvalidArgument("CF target: u and theta differ in length");
    target_idx.push_back(locate(grid.u_points, t.u));
  }
  const std::size_t chunks = (replicas + kReplicaChunk - 1) / kReplicaChunk;
  std::vector<std::vector<CfAccumulator>> partial(chunks, std::vector<CfAccumulator>(targets.size()));
  for_each_chunk(replicas, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<double> inc;
    std::vector<double> x(nu);
    for (std::size_t r = begin; r < end; ++r) {
      sampler.fill(r, inc);
      for (std::size_t j = 0; j < nu; ++j) {
        double v = 0.0;
        for (std::size_t i = first[j]; i < last[j]; ++i) v += weights[j][i] * inc[i];
        x[j] = v;
      }
      for (std::size_t t = 0; t < targets.size(); ++t) {
        double arg = 0.0;
        for (std::size_t m = 0; m < target_idx[t].size(); ++m) arg += targets[t].theta[m] * x[target_idx[t][m]];
        partial[c][t].add(std::exp(cplx(0.0, arg)));
      }
    }
  });
  StreamingCf out;
  out.diagnostics = sampler.diagnostics();
  for (std::size_t t = 0; t < targets.size(); ++t) {
    CfAccumulator acc;
    for (std::size_t c = 0; c < chunks; ++c) acc.merge(partial[c][t]);
    out.estimates.push_back(acc.estimate());
  }
  return out;
}

std::vector<FieldPath> simulate_paths(const LevyQuadruplet& q, const KernelSpec& k, const SimGrid& grid,
                                      std::size_t replicas, int threads, bool keep_increments) {
  IncrementSampler sampler(q, grid);
  std::vector<std::vector<double>> weights;
  for (double u : grid.u_points) weights.push_back(kernel_cell_weights(k, u, grid));
  std::vector<FieldPath> paths(replicas);
  for_each_chunk(replicas, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      auto inc = std::make_shared<BasisIncrements>();
      inc->replica = r;
      inc->diagnostics = sampler.diagnostics();
      sampler.fill(r, inc->values);
      FieldPath& p = paths[r];
      p.u_points = grid.u_points;
      p.grid = grid;
      p.kernel_label = k.label;
      for (const auto& w : weights) p.values.push_back(weighted_sum(w, inc->values));
      if (keep_increments) p.increments = std::move(inc);
    }
  });
  return paths;
}

}  // namespace sdfields
