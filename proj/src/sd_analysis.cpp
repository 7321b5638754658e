#include "sdfields/sd_analysis.hpp"

#include <algorithm>
#include <cmath>

#include "sdfields/errors.hpp"

namespace sdfields {

namespace {

// n points spread over an interval; infinite ends are reached geometrically
// (up to a distance of 1e6 from the finite part).
std::vector<double> sample_points(Interval dom, int n) {
  std::vector<double> pts;
  pts.reserve(n);
  const bool lo_inf = std::isinf(dom.lo);
  const bool hi_inf = std::isinf(dom.hi);
  if (!lo_inf && !hi_inf) {
    for (int i = 0; i < n; ++i) pts.push_back(dom.lo + (i + 0.5) / n * (dom.hi - dom.lo));
    return pts;
  }
  auto spread = [](int i, int m) { return std::expm1(std::log1p(1e6) * (i + 0.5) / m); };
  if (lo_inf && hi_inf) {
    for (int i = 0; i < n / 2; ++i) pts.push_back(-spread(i, n / 2));
    for (int i = 0; i < n - n / 2; ++i) pts.push_back(spread(i, n - n / 2));
  } else if (lo_inf) {
    for (int i = 0; i < n; ++i) pts.push_back(dom.hi - spread(i, n));
  } else {
    for (int i = 0; i < n; ++i) pts.push_back(dom.lo + spread(i, n));
  }
  return pts;
}

// Mass of {x : x v in region} under rho: each box pulls back to an interval
// of x, and overlapping intervals are merged before measuring.
double pullback_mass(const LevyMeasure1D& rho, const std::vector<double>& v, const Region& region) {
  std::vector<Interval> pieces;
  for (const Box& box : region.boxes) {
    double lo = -kInf;
    double hi = kInf;
    bool empty = false;
    for (std::size_t j = 0; j < v.size() && !empty; ++j) {
      if (v[j] == 0.0) {
        empty = !(box.lo[j] <= 0.0 && box.hi[j] >= 0.0);
        continue;
      }
      double a = box.lo[j] / v[j];
      double b = box.hi[j] / v[j];
      if (v[j] < 0.0) std::swap(a, b);
      lo = std::max(lo, a);
      hi = std::min(hi, b);
      empty = !(hi >= lo);
    }
    if (empty) continue;
    if (lo <= 0.0 && hi >= 0.0) {
      // Only possible when every coordinate of v vanishes, which the box's
      // origin exclusion rules out; guard against rounding all the same.
      if (lo < 0.0) pieces.push_back({lo, -std::numeric_limits<double>::min()});
      if (hi > 0.0) pieces.push_back({std::numeric_limits<double>::min(), hi});
      continue;
    }
    pieces.push_back({lo, hi});
  }
  if (pieces.empty()) return 0.0;
  std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  double total = 0.0;
  Interval cur = pieces.front();
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    if (pieces[i].lo <= cur.hi && (cur.hi < 0.0) == (pieces[i].lo < 0.0)) {
      cur.hi = std::max(cur.hi, pieces[i].hi);
    } else {
      total += rho.mass(cur.lo, cur.hi);
      cur = pieces[i];
    }
  }
  total += rho.mass(cur.lo, cur.hi);
  return total;
}

}  // namespace

Interval master_s_domain(const MasterMeasureSpec& spec, const std::vector<double>& coords) {
  if (spec.basis.control.dim != 1)
    throw InvalidArgument("master measure evaluation needs a one-dimensional control measure");
  const Interval ks = spec.kernel.s_support(coords);
  return {std::max(ks.lo, spec.basis.control.lo[0]), std::min(ks.hi, spec.basis.control.hi[0])};
}

std::vector<double> master_s_breaks(const MasterMeasureSpec& spec, const std::vector<double>& coords) {
  std::vector<double> b = spec.kernel.s_breaks(coords);
  for (double x : {spec.basis.control.lo[0], spec.basis.control.hi[0]}) {
    if (std::isfinite(x)) b.push_back(x);
  }
  return b;
}

MasterMeasureSpec MasterMeasureSpec::make(LevyQuadruplet basis, KernelSpec kernel) {
  MasterMeasureSpec spec;
  spec.continuity = kernel.continuity;
  spec.basis = std::move(basis);
  spec.kernel = std::move(kernel);
  return spec;
}

void CylinderSet::validate() const {
  if (coords.empty() || coords.size() > kMaxCylinderCoords)
    throw InvalidArgument("a cylinder set needs between 1 and 8 coordinates");
  if (region.boxes.empty() || region.boxes.size() > kMaxCylinderBoxes)
    throw InvalidArgument("a cylinder region needs between 1 and 64 boxes");
  for (const Box& b : region.boxes) {
    if (b.lo.size() != coords.size() || b.hi.size() != coords.size())
      throw InvalidArgument("box dimension does not match the number of coordinates");
    double d2 = 0.0;
    for (std::size_t j = 0; j < coords.size(); ++j) {
      if (!(b.lo[j] <= b.hi[j])) throw InvalidArgument("box with lo > hi");
      const double d = b.lo[j] > 0.0 ? b.lo[j] : (b.hi[j] < 0.0 ? -b.hi[j] : 0.0);
      d2 += d * d;
    }
    if (std::sqrt(d2) < kOriginExclusion)
      throw InvalidArgument("cylinder boxes must stay 1e-8 away from the origin");
  }
}

CylinderSet CylinderSet::scaled(double q) const { return {coords, region.scaled(q)}; }

MasterMeasureValue master_measure_eval(const MasterMeasureSpec& spec, const CylinderSet& a) {
  a.validate();
  MasterMeasureValue out;
  const Interval dom = master_s_domain(spec, a.coords);
  const std::size_t n = a.coords.size();

  bool any_nonzero = false;
  for (double s : sample_points(dom, 1000)) {
    for (double u : a.coords) any_nonzero |= spec.kernel.eval(u, s) != 0.0;
    if (any_nonzero) break;
  }
  out.degenerate = !any_nonzero;
  if (out.degenerate || !(dom.hi > dom.lo)) return out;

  auto g = [&](SPos s) {
    const Point pt = point1(s.value());
    const double c = spec.basis.control.density_at(pt);
    if (c == 0.0) return 0.0;
    std::vector<double> v(n);
    bool zero = true;
    for (std::size_t j = 0; j < n; ++j) {
      v[j] = spec.kernel.eval(a.coords[j], s);
      zero &= v[j] == 0.0;
    }
    if (zero) return 0.0;
    const auto seed = spec.basis.seed(pt);
    if (seed->rho.is_zero()) return 0.0;
    return c * pullback_mass(seed->rho, v, a.region);
  };
  auto r = integrate_s<double>(g, dom, master_s_breaks(spec, a.coords));
  if (r.status == quad::Status::diverged) throw QuadratureDivergence("master measure of the cylinder diverges");
  out.value = r.value;
  out.status = r.status;
  return out;
}

std::vector<double> default_q_grid() { return {1.1, 1.5, 2.0, 5.0, 10.0}; }

std::vector<Interval> default_dilation_intervals() {
  std::vector<Interval> out;
  for (int k = 0; k < 40; ++k) {
    const double a = 0.1 * std::pow(2.0, 0.5 * k);
    out.push_back({a, 2.0 * a});
  }
  for (int k = 0; k < 40; ++k) {
    const double a = 0.1 * std::pow(2.0, 0.5 * k);
    out.push_back({-2.0 * a, -a});
  }
  return out;
}

std::vector<CylinderSet> default_cylinder_sets(const std::vector<double>& coords, int scales) {
  std::vector<CylinderSet> out;
  const std::size_t n = coords.size();
  for (int k = 0; k < scales; ++k) {
    const double a = 0.1 * std::pow(2.0, 0.5 * k);
    for (double sign : {1.0, -1.0}) {
      for (std::size_t j = 0; j < n; ++j) {
        Box b{std::vector<double>(n, -a / 8.0), std::vector<double>(n, a / 8.0)};
        b.lo[j] = sign > 0.0 ? a : -2.0 * a;
        b.hi[j] = sign > 0.0 ? 2.0 * a : -a;
        out.push_back({coords, Region{{b}}});
      }
      if (n > 1) {
        Box d{std::vector<double>(n, sign > 0.0 ? a : -2.0 * a), std::vector<double>(n, sign > 0.0 ? 2.0 * a : -a)};
        out.push_back({coords, Region{{d}}});
      }
    }
  }
  return out;
}

DilationResult dilation_check_1d(const LevyMeasure1D& m, const std::vector<double>& q_grid,
                                 const std::vector<Interval>& intervals) {
  for (double q : q_grid) {
    if (!(q > 1.0)) throw InvalidArgument("dilation factors must exceed 1");
  }
  for (const Interval& a : intervals) {
    if (a.lo <= 0.0 && a.hi >= 0.0) throw InvalidArgument("test intervals must exclude 0");
  }
  DilationResult out;
  if (m.is_zero()) {
    out.pairs_checked = q_grid.size() * intervals.size();
    return out;
  }
  std::vector<double> base(intervals.size());
  for (std::size_t i = 0; i < intervals.size(); ++i) base[i] = m.mass(intervals[i].lo, intervals[i].hi);
  for (double q : q_grid) {
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      ++out.pairs_checked;
      const double scaled = m.mass(q * intervals[i].lo, q * intervals[i].hi);
      if (scaled > base[i] + 1e-10) {
        out.pass = false;
        DilationWitness w;
        w.q = q;
        w.index = i;
        w.scaled_mass = scaled;
        w.mass = base[i];
        w.interval = intervals[i];
        out.witness = w;
        return out;
      }
    }
  }
  return out;
}

DilationResult dilation_check_sets(const std::function<double(const CylinderSet&)>& nu,
                                   const std::vector<double>& q_grid, const std::vector<CylinderSet>& sets) {
  for (double q : q_grid) {
    if (!(q > 1.0)) throw InvalidArgument("dilation factors must exceed 1");
  }
  DilationResult out;
  std::vector<double> base(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) base[i] = nu(sets[i]);
  for (double q : q_grid) {
    for (std::size_t i = 0; i < sets.size(); ++i) {
      ++out.pairs_checked;
      const double scaled = nu(sets[i].scaled(q));
      if (scaled > base[i] + 1e-9) {
        out.pass = false;
        DilationWitness w;
        w.q = q;
        w.index = i;
        w.scaled_mass = scaled;
        w.mass = base[i];
        w.set = sets[i];
        out.witness = w;
        return out;
      }
    }
  }
  return out;
}

DilationResult dilation_check_field(const MasterMeasureSpec& spec, const std::vector<double>& q_grid,
                                    const std::vector<CylinderSet>& sets) {
  return dilation_check_sets([&](const CylinderSet& a) { return master_measure_eval(spec, a).value; }, q_grid,
                             sets);
}

LevyMeasure1D urbanik_residual(const LevyMeasure1D& m, double q) {
  if (!(q > 1.0)) throw InvalidArgument("urbanik_residual needs q > 1");
  if (!m.atoms.empty()) throw InvalidArgument("Urbanik residuals need an absolutely continuous measure");
  LevyMeasure1D r;
  r.label = m.label + " residual";
  if (!m.density) return r;
  // The scaled copy q u(qx) lives on support / q, so the residual lives on the hull.
  r.support = {std::min(m.support.lo, m.support.lo / q), std::max(m.support.hi, m.support.hi / q)};
  for (double b : m.breaks) {
    r.breaks.push_back(b);
    r.breaks.push_back(b / q);
  }
  for (double e : {m.support.lo, m.support.hi}) {
    if (std::isfinite(e) && e != 0.0) {
      r.breaks.push_back(e);
      r.breaks.push_back(e / q);
    }
  }
  r.density = [m, q](double x) { return m.density_at(x) - q * m.density_at(q * x); };
  return r;
}

namespace {

// A negative point of a residual density, if any, on a log-spaced probe grid.
std::optional<double> negative_point(const LevyMeasure1D& r) {
  if (!r.density) return std::nullopt;
  std::vector<double> probes;
  for (int i = 0; i <= 800; ++i) probes.push_back(std::pow(10.0, -8.0 + 16.0 * i / 800.0));
  for (double b : r.breaks) {
    const double y = std::abs(b);
    if (y > 0.0) {
      probes.push_back(y * (1.0 + 1e-9));
      probes.push_back(y * (1.0 - 1e-9));
    }
  }
  for (double side : {1.0, -1.0}) {
    for (double y : probes) {
      const double x = side * y;
      const double d = r.density_at(x);
      if (d < -1e-12 * (1.0 + std::abs(d))) return x;
    }
  }
  return std::nullopt;
}

}  // namespace

UrbanikDepth urbanik_depth_1d(const LevyMeasure1D& m, const std::vector<double>& q_grid, int max_m) {
  if (max_m < 0 || max_m > 6) throw InvalidArgument("max_m must lie in 0..6");
  if (!m.atoms.empty()) throw InvalidArgument("Urbanik depth needs an absolutely continuous measure");
  UrbanikDepth out;
  if (m.is_zero()) {
    out.depth = max_m;
    out.stop_reason = "zero measure";
    return out;
  }
  const auto intervals = default_dilation_intervals();
  auto sd = dilation_check_1d(m, q_grid, intervals);
  if (!sd.pass) {
    out.depth = -1;
    out.stop_reason = "dilation inequality fails";
    out.witness = sd.witness;
    return out;
  }
  std::vector<LevyMeasure1D> frontier{m};
  for (int level = 1; level <= max_m; ++level) {
    std::vector<LevyMeasure1D> next;
    for (const LevyMeasure1D& d : frontier) {
      for (double q : q_grid) {
        LevyMeasure1D r = urbanik_residual(d, q);
        if (auto x = negative_point(r)) {
          out.depth = level - 1;
          out.stop_reason = "negative residual at x = " + std::to_string(*x) + " for q = " + std::to_string(q);
          return out;
        }
        auto check = dilation_check_1d(r, q_grid, intervals);
        if (!check.pass) {
          out.depth = level - 1;
          out.stop_reason = "residual for q = " + std::to_string(q) + " fails the dilation inequality";
          out.witness = check.witness;
          return out;
        }
        next.push_back(std::move(r));
      }
    }
    frontier = std::move(next);
  }
  out.depth = max_m;
  out.stop_reason = "all levels passed";
  return out;
}

ChargeZero charge_zero_precondition(const MasterMeasureSpec& spec, const std::vector<double>& u_dense) {
  ChargeZero out;
  if (spec.continuity == Continuity::neither) {
    out.reason = "the kernel is neither lower nor upper continuous in u";
    return out;
  }
  if (u_dense.empty()) {
    out.reason = "no u points supplied";
    return out;
  }
  const auto [umin, umax] = std::minmax_element(u_dense.begin(), u_dense.end());
  Interval dom = master_s_domain(spec, u_dense);
  // Sample s where the u grid can see it: within a window around the grid.
  dom.lo = std::max(dom.lo, *umin - 10.0);
  dom.hi = std::min(dom.hi, *umax + 10.0);
  if (!(dom.hi > dom.lo)) {
    out.reason = "the kernel support does not meet the control domain";
    return out;
  }
  for (double s : sample_points(dom, 1000)) {
    bool nonzero = false;
    for (double u : u_dense) {
      if (spec.kernel.eval(u, s) != 0.0) {
        nonzero = true;
        break;
      }
    }
    if (!nonzero) {
      out.reason = "f(., s) vanishes on the u grid at s = " + std::to_string(s);
      return out;
    }
  }
  out.guaranteed = true;
  out.reason = std::string("kernel is ") + to_string(spec.continuity) +
               " continuous and f(., s) is not identically zero at 1000 sampled s";
  return out;
}

}  // namespace sdfields
