#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "sdfields/errors.hpp"
#include "sdfields/special.hpp"
#include "sdfields/volterra_sim.hpp"

using namespace sdfields;

namespace {

LevyQuadruplet homogeneous(LevySeed seed) { return make_factorizable(std::move(seed), ControlMeasure{}); }
LevyQuadruplet wiener() { return homogeneous({0.0, 1.0, zero_measure()}); }

SimGrid grid(double s0, double s1, double ds, std::vector<double> u, std::uint64_t seed = 7) {
  SimGrid g;
  g.s0 = s0;
  g.s1 = s1;
  g.ds = ds;
  g.u_points = std::move(u);
  g.seed = seed;
  return g;
}

double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / x.size();
}

double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

}  // namespace

TEST(Philox, KnownAnswers) {
  // Published Philox4x32-10 test vectors.
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (PhiloxBlock{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (PhiloxBlock{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (PhiloxBlock{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, PoissonMoments) {
  for (double mu : {0.3, 4.0, 25.0, 400.0}) {
    double s = 0.0, s2 = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
      CellRng rng(11, 0, i, StreamTag::aux);
      const double k = static_cast<double>(rng.poisson(mu));
      s += k;
      s2 += k * k;
    }
    const double m = s / n;
    const double v = s2 / n - m * m;
    EXPECT_NEAR(m, mu, 4.0 * std::sqrt(mu / n)) << mu;
    EXPECT_NEAR(v / mu, 1.0, 0.05) << mu;
  }
}

TEST(Increments, WienerCells) {
  auto g = grid(0.0, 1000.0, 0.01, {});
  auto inc = simulate_basis_increments(wiener(), g);
  ASSERT_EQ(inc.values.size(), 100000u);
  const double v = variance(inc.values);
  // Standard error of a sample variance of normals: ds * sqrt(2 / n).
  EXPECT_NEAR(v, 0.01, 3.0 * 0.01 * std::sqrt(2.0 / 1e5));
}

TEST(Increments, PoissonCounts) {
  // Unit jumps at rate 1 with gamma = tau(1) = 1: increments are jump counts.
  auto q = homogeneous({1.0, 0.0, dirac_measure(1.0, 1.0)});
  auto g = grid(0.0, 10.0, 0.01, {});
  IncrementSampler sampler(q, g);
  std::vector<double> totals;
  std::vector<double> inc;
  for (int r = 0; r < 1000; ++r) {
    sampler.fill(r, inc);
    double t = 0.0;
    for (double x : inc) t += x;
    EXPECT_NEAR(t, std::round(t), 1e-9);
    totals.push_back(t);
  }
  EXPECT_NEAR(mean(totals), 10.0, 3.0 * std::sqrt(10.0 / 1000.0));
}

TEST(Increments, GammaSubordinatorMean) {
  auto rho = gamma_measure(1.0, 1.0);
  auto q = homogeneous({tau_integral(rho), 0.0, rho});
  auto g = grid(0.0, 1.0, 0.01, {});
  g.eps = 1e-3;
  IncrementSampler sampler(q, g);
  std::vector<double> totals;
  std::vector<double> inc;
  for (int r = 0; r < 20000; ++r) {
    sampler.fill(r, inc);
    double t = 0.0;
    for (double x : inc) t += x;
    totals.push_back(t);
  }
  EXPECT_NEAR(mean(totals), 1.0, 3.0 * std::sqrt(variance(totals) / totals.size()));
  EXPECT_NEAR(variance(totals), 1.0, 0.05);  // the Gamma(1, 1) variance
}

TEST(Increments, JumpTableIsExactForBins) {
  auto rho = exponential_measure(2.0, 0.5);
  auto t = build_jump_table(rho, 1e-3);
  EXPECT_NEAR(t.rate, 2.0 * std::exp(-1e-3 / 0.5), 1e-12);
  EXPECT_LT(t.dropped_tail_mass, 1e-13);
  EXPECT_NEAR(t.small_variance, oracle::finite([](double x) { return x * x * 4.0 * std::exp(-2.0 * x); }, 0.0, 1e-3),
              1e-18);
  EXPECT_THROW(
      {
        auto q = homogeneous({0.0, 0.0, exponential_measure(1e9, 1.0)});
        IncrementSampler s(q, grid(0.0, 1.0, 0.01, {}));
      },
      JumpRateOverflow);
}

TEST(Increments, SeedDeterminism) {
  auto q = homogeneous({0.0, 0.5, exponential_measure(1.0, 1.0)});
  auto g = grid(0.0, 5.0, 0.01, {});
  IncrementSampler sampler(q, g);
  std::vector<double> forward;
  sampler.fill(3, forward);
  for (std::size_t i = forward.size(); i-- > 0;) EXPECT_EQ(sampler.cell_increment(3, i), forward[i]);
  IncrementSampler again(q, g);
  std::vector<double> second;
  again.fill(3, second);
  EXPECT_EQ(forward, second);
  std::vector<double> other;
  sampler.fill(4, other);
  EXPECT_NE(forward, other);
}

TEST(Fields, ZeroKernelAndLinearity) {
  auto g = grid(-10.0, 1.0, 0.01, {0.0, 1.0});
  auto inc = std::make_shared<BasisIncrements>(simulate_basis_increments(wiener(), g));
  auto zero = custom_kernel(Expression::parse("0"), Continuity::upper, true, {0.0, kInf});
  for (double v : simulate_field(zero, inc, g).values) EXPECT_EQ(v, 0.0);
  for (const KernelSpec& k : {ou_kernel(), gamma_kernel(-0.3), fractional_kernel(0.25)}) {
    auto a = simulate_field(k, inc, g);
    auto b = simulate_field(k.scaled(2.0), inc, g);
    for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_EQ(b.values[i], 2.0 * a.values[i]);
  }
}

TEST(Fields, OuWienerVarianceAndCorrelation) {
  auto g = grid(0.0, 31.0, 0.01, {30.0, 31.0});
  auto paths = simulate_paths(wiener(), ou_kernel(), g, 10000);
  std::vector<double> a, b;
  for (const auto& p : paths) {
    a.push_back(p.values[0]);
    b.push_back(p.values[1]);
  }
  const double va = variance(a);
  EXPECT_NEAR(va, 0.5, 3.0 * 0.5 * std::sqrt(2.0 / a.size()));
  double cov = 0.0;
  const double ma = mean(a), mb = mean(b);
  for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - ma) * (b[i] - mb);
  cov /= a.size() - 1;
  const double rho = cov / std::sqrt(va * variance(b));
  const double want = std::exp(-1.0);
  EXPECT_NEAR(rho, want, 3.0 * (1.0 - want * want) / std::sqrt(a.size()));
}

TEST(Oracle, Examples) {
  EXPECT_EQ(cumulant_oracle(wiener(), ou_kernel(), {0.0}, {0.0}), cplx(0.0, 0.0));
  EXPECT_NEAR(std::abs(cumulant_oracle(wiener(), ou_kernel(), {0.0}, {1.0}) - cplx(-0.25, 0.0)), 0.0, 1e-12);
  auto poisson = homogeneous({0.0, 0.0, dirac_measure(1.0, 1.0)});
  const cplx got = cumulant_oracle(poisson, ou_kernel(), {0.0}, {1.0});
  const cplx want = oracle::half_line_c(
      [](double s) {
        const double e = std::exp(-s);
        return std::exp(cplx(0.0, e)) - 1.0 - cplx(0.0, e);
      },
      0.0, 60.0);
  EXPECT_NEAR(std::abs(got - want), 0.0, 1e-8);
}

TEST(Oracle, Stationarity) {
  auto rho = gamma_measure(1.0, 1.0);
  auto q = homogeneous({-(std::exp(-1.0) - special::expint_e1(1.0)), 0.3, rho});
  for (const KernelSpec& k : {ou_kernel(), gamma_kernel(0.25), gamma_kernel(-0.25)}) {
    const cplx ref = cumulant_oracle(q, k, {0.0}, {1.3});
    for (double u : {-5.0, -1.0, 2.0, 10.0, 100.0}) {
      EXPECT_LE(std::abs(cumulant_oracle(q, k, {u}, {1.3}) - ref), 1e-8) << k.label << " " << u;
    }
  }
}

TEST(EmpiricalCf, ZeroPathsAndOu) {
  std::vector<FieldPath> zeros(100);
  for (auto& p : zeros) {
    p.u_points = {0.0};
    p.values = {0.0};
  }
  auto e = empirical_cf(zeros, {0.0}, {1.0});
  EXPECT_EQ(e.value, cplx(1.0, 0.0));
  EXPECT_EQ(e.se, 0.0);

  auto g = grid(0.0, 31.0, 0.01, {30.0, 31.0});
  std::vector<CfTarget> targets{{{30.0}, {1.0}}, {{30.0, 31.0}, {1.0, -0.5}}};
  auto r = streaming_cf(wiener(), ou_kernel(), g, 100000, targets, 1);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const cplx want = std::exp(cumulant_oracle(wiener(), ou_kernel(), targets[t].u, targets[t].theta));
    EXPECT_LE(std::abs(r.estimates[t].value - want), 3.0 * r.estimates[t].se) << t;
  }
  EXPECT_NEAR(std::abs(std::exp(cumulant_oracle(wiener(), ou_kernel(), {30.0}, {1.0})) - std::exp(-0.25)), 0.0,
              1e-12);
}

TEST(EmpiricalCf, IndependentOfThreadCount) {
  auto q = homogeneous({0.0, 0.0, exponential_measure(1.0, 1.0)});
  auto g = grid(0.0, 10.0, 0.01, {10.0});
  std::vector<CfTarget> targets{{{10.0}, {0.7}}};
  auto one = streaming_cf(q, ou_kernel(), g, 3000, targets, 1);
  auto three = streaming_cf(q, ou_kernel(), g, 3000, targets, 3);
  EXPECT_EQ(one.estimates[0].value, three.estimates[0].value);
  EXPECT_EQ(one.estimates[0].se, three.estimates[0].se);
}

TEST(EmpiricalCf, SmallJumpRefinement) {
  // Halving eps changes the CF by at most the third-cumulant bound of the
  // Gaussian substitution plus Monte Carlo noise.
  auto rho = gamma_measure(1.0, 1.0);
  auto q = homogeneous({-(std::exp(-1.0) - special::expint_e1(1.0)), 0.0, rho});
  auto g = grid(0.0, 20.0, 0.01, {20.0});
  g.eps = 0.2;
  const double theta = 2.0;
  std::vector<CfTarget> targets{{{20.0}, {theta}}};
  auto a = streaming_cf(q, ou_kernel(), g, 20000, targets, 1);
  g.eps = 0.1;
  auto b = streaming_cf(q, ou_kernel(), g, 20000, targets, 1);
  // |x|^3 moment below eps times the integral of |f|^3 = 1/3.
  const double m3 = rho.abs_moment(3.0, 0.0, 0.2).value;
  const double bound = std::pow(theta, 3) / 6.0 * m3 / 3.0;
  const double noise = 3.0 * std::hypot(a.estimates[0].se, b.estimates[0].se);
  EXPECT_LE(std::abs(a.estimates[0].value - b.estimates[0].value), bound + noise);
}
