#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "oracle.hpp"
#include "sdfields/errors.hpp"
#include "sdfields/orlicz.hpp"

using namespace sdfields;

namespace {

LevyQuadruplet homogeneous(LevySeed seed) { return make_factorizable(std::move(seed), ControlMeasure{}); }

OrliczContext ctx_of(LevySeed seed, int p) { return OrliczContext::make(homogeneous(std::move(seed)), p); }

LevyMeasure1D density_only(std::function<double(double)> d, Interval support, std::vector<double> breaks = {}) {
  LevyMeasure1D m;
  m.density = std::move(d);
  m.support = support;
  m.breaks = std::move(breaks);
  return m;
}

LevyMeasure1D exp_density() { return density_only([](double x) { return std::exp(-x); }, {0.0, kInf}); }

SFunction indicator(double a, double b) { return plain_function([](double) { return 1.0; }, {a, b}); }

// Reference h(r) for the density e^{-x} on x > 0 with drift gamma.
double h_oracle(double gamma, double r) {
  if (r == 0.0) return 0.0;
  auto tau = [](double x) { return x / std::max(1.0, std::abs(x)); };
  auto f = [&](double x) { return (tau(x * r) - r * tau(x)) * std::exp(-x); };
  const double k1 = std::min(1.0, 1.0 / r);
  const double k2 = std::max(1.0, 1.0 / r);
  return gamma * r + oracle::finite(f, 0.0, k1) + oracle::finite(f, k1, k2) + oracle::half_line(f, k2);
}

}  // namespace

TEST(Orlicz, HEvalExamples) {
  auto drift = ctx_of({2.0, 0.0, zero_measure()}, 0);
  EXPECT_DOUBLE_EQ(H_eval(drift, 3.0, point1(0.0)), 6.0);
  EXPECT_DOUBLE_EQ(H_eval(drift, 0.0, point1(0.0)), 0.0);
  auto atom = ctx_of({0.0, 0.0, dirac_measure(2.0, 1.0)}, 0);
  EXPECT_NEAR(H_eval(atom, 1.0, point1(0.0)), 0.0, 1e-15);
  EXPECT_NEAR(H_eval(atom, 0.4, point1(0.0)), 0.4, 1e-15);
}

TEST(Orlicz, DriftFunctionalMatchesReference) {
  for (double g : {0.0, -std::exp(-1.0), 0.7}) {
    LevySeed seed{g, 0.0, exp_density()};
    LevySeed closed{g, 0.0, exponential_measure(1.0, 1.0)};
    for (double r : {0.05, 0.3, 1.0, 2.5, 40.0}) {
      const double want = h_oracle(g, r);
      EXPECT_NEAR(drift_functional(seed, r), want, 1e-8) << g << " " << r;
      EXPECT_NEAR(drift_functional(closed, r), want, 1e-8);
      EXPECT_NEAR(drift_functional(closed, -r), -want, 1e-8);
    }
  }
}

TEST(Orlicz, SupDriftMatchesBruteForce) {
  LevySeed seed{-0.2, 0.0, exponential_measure(1.0, 1.0)};
  for (double r : {0.5, 3.0, 20.0}) {
    double best = 0.0;
    for (int i = 0; i <= 4000; ++i) best = std::max(best, std::abs(h_oracle(-0.2, r * i / 4000.0)));
    EXPECT_NEAR(sup_drift(seed, r), best, 1e-6 * std::max(1.0, best)) << r;
    EXPECT_GE(sup_drift(seed, r), best - 1e-12);
  }
  // Symmetric measure and zero drift: identically zero.
  EXPECT_EQ(sup_drift({0.0, 1.0, laplace_measure(1.0, 1.0)}, 5.0), 0.0);
}

TEST(Orlicz, PhiExamples) {
  auto gauss = ctx_of({0.0, 1.0, zero_measure()}, 0);
  EXPECT_DOUBLE_EQ(phi_p_eval(gauss, 2.0, point1(0.0)), 4.0);
  EXPECT_DOUBLE_EQ(phi_p_eval(gauss, 0.0, point1(0.0)), 0.0);

  // Jump part of Phi_0 at r = 1 for the density e^{-x}.
  const double want = oracle::finite([](double x) { return x * x * std::exp(-x); }, 0.0, 1.0) +
                      oracle::half_line([](double x) { return std::exp(-x); }, 1.0);
  for (const auto& m : {exp_density(), exponential_measure(1.0, 1.0)}) {
    LevySeed seed{0.0, 0.0, m};
    const JumpTerms j = jump_terms(seed, 1.0, 0);
    EXPECT_NEAR(j.origin + j.tail, want, 1e-10);
    // The full modular adds the drift supremum.
    auto ctx = ctx_of(seed, 0);
    EXPECT_NEAR(phi_p_eval(ctx, 1.0, point1(0.0)), want + sup_drift(seed, 1.0), 1e-12);
  }
}

TEST(Orlicz, PhiNondecreasing) {
  for (int p : {0, 1, 2}) {
    auto ctx = ctx_of({0.3, 0.5, exponential_measure(2.0, 0.5)}, p);
    double prev = 0.0;
    for (double r = 0.0; r <= 20.0; r += 0.37) {
      const double v = phi_p_eval(ctx, r, point1(0.0));
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
  }
}

TEST(Orlicz, PhiIntegralExamples) {
  auto gauss = ctx_of({0.0, 1.0, zero_measure()}, 0);
  auto zero = plain_function([](double) { return 0.0; }, {-kInf, kInf});
  auto rep = phi_integral(gauss, zero);
  EXPECT_EQ(rep.member, Member::yes);
  EXPECT_EQ(rep.phi_integral, 0.0);
  EXPECT_EQ(rep.norm, 0.0);

  auto sing = plain_function([](double s) { return 1.0 / std::sqrt(s); }, {0.0, 1.0});
  auto bad = phi_integral(gauss, sing);
  EXPECT_EQ(bad.member, Member::no);
  ASSERT_TRUE(bad.diverging_term.has_value());
  EXPECT_EQ(*bad.diverging_term, DivergingTerm::gaussian);
}

TEST(Orlicz, OuJumpReduction) {
  // Integral over s >= 0 of the Phi_1 jump term at e^{-s}, for Exp(1) jumps:
  // 1/2 of the integral of 1 ^ x^2 plus the integral over x > 1 of (x - 1).
  auto ctx = ctx_of({-std::exp(-1.0), 0.0, exponential_measure(1.0, 1.0)}, 1);
  auto rep = phi_integral(ctx, kernel_section(ou_kernel(), 0.0), false);
  ASSERT_EQ(rep.member, Member::yes);
  const double closed = 0.5 * (oracle::finite([](double x) { return x * x * std::exp(-x); }, 0.0, 1.0) +
                               std::exp(-1.0)) +
                        oracle::half_line([](double x) { return (x - 1.0) * std::exp(-x); }, 1.0);
  EXPECT_NEAR(rep.jump_origin_term + rep.jump_tail_term, closed, 1e-8);
}

TEST(Orlicz, LuxemburgExamples) {
  auto gauss = ctx_of({0.0, 1.0, zero_measure()}, 0);
  EXPECT_NEAR(luxemburg_norm(gauss, indicator(0.0, 1.0)), 1.0, 1e-8);
  EXPECT_NEAR(luxemburg_norm(gauss, indicator(0.0, 4.0)), 2.0, 2e-8);
  EXPECT_EQ(luxemburg_norm(gauss, plain_function([](double) { return 0.0; }, {0.0, 1.0})), 0.0);
  EXPECT_EQ(luxemburg_norm(gauss, plain_function([](double) { return 1.0; }, {0.0, kInf})), kInf);
}

TEST(Orlicz, LuxemburgProperties) {
  auto ctx = ctx_of({-std::exp(-1.0), 0.5, exponential_measure(1.0, 1.0)}, 1);
  auto f = kernel_section(ou_kernel(), 0.0);
  const double n = luxemburg_norm(ctx, f);
  ASSERT_TRUE(n > 0.0 && std::isfinite(n));
  EXPECT_NEAR(modular(ctx, f, n).value, 1.0, 1e-6);
  for (double c : {0.5, 2.0, 10.0}) {
    const double nc = luxemburg_norm(ctx, kernel_section(ou_kernel().scaled(c), 0.0));
    EXPECT_NEAR(nc / (c * n), 1.0, 1e-6);
  }
  // Monotonicity: |e^{-2t}| <= |e^{-t}|.
  auto g = plain_function([](double s) { return std::exp(2.0 * s); }, {-kInf, 0.0});
  EXPECT_LE(luxemburg_norm(ctx, g), n + 1e-8);
  // Stationarity: the norm of f(u, .) does not depend on u.
  for (double u : {-3.0, 1.0, 7.5}) {
    EXPECT_NEAR(luxemburg_norm(ctx, kernel_section(ou_kernel(), u)), n, 1e-8);
  }
}

TEST(Orlicz, GammaKernelIntegrableExamples) {
  auto a = gamma_kernel_integrable({0.0, 1.0, exponential_measure(1.0, 1.0)}, 0.25);
  EXPECT_TRUE(a.yes);
  EXPECT_EQ(a.criterion, "alpha_above_half");
  auto b = gamma_kernel_integrable({0.0, 1.0, exponential_measure(1.0, 1.0)}, -0.5);
  EXPECT_FALSE(b.yes);
  EXPECT_NE(b.reason.find("b != 0"), std::string::npos);
  auto c = gamma_kernel_integrable({0.0, 0.0, density_only([](double x) { return 1.0 / std::sqrt(x); }, {0.0, 1.0})},
                                   -0.75);
  EXPECT_TRUE(c.yes);
  EXPECT_EQ(c.criterion, "alpha_below_half_power");
  EXPECT_THROW(gamma_kernel_integrable({}, -1.0), InvalidArgument);
}

TEST(Orlicz, FourierChecks) {
  std::vector<double> grid;
  for (double x = -20.0; x <= 20.0; x += 0.25) grid.push_back(x);
  EXPECT_TRUE(fourier_nonvanishing_check(ou_kernel(), grid).nonvanishing);
  auto g = fourier_nonvanishing_check(gamma_kernel(0.5), grid);
  EXPECT_TRUE(g.nonvanishing);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double want = boost::math::tgamma(1.5) / std::sqrt(2.0 * M_PI) * std::pow(1.0 + grid[i] * grid[i], -0.75);
    EXPECT_NEAR(std::abs(g.values[i]), want, 1e-14);
  }
  // 1_[0,1] - 1_[1,2] has a lattice of zeros at 2 pi k.
  auto diff = custom_kernel(Expression::parse("ind(t < 1) - ind(t >= 1)"), Continuity::upper, true, {0.0, 2.0},
                            {1.0});
  auto d = fourier_nonvanishing_check(diff, grid);
  EXPECT_FALSE(d.nonvanishing);
  bool found = false;
  for (double z : d.vanishes_at) found |= std::abs(std::abs(z) - 2.0 * M_PI) < 1e-6;
  EXPECT_TRUE(found);
  auto heavy = custom_kernel(Expression::parse("1 / (1 + t)"), Continuity::upper, true, {0.0, kInf});
  EXPECT_THROW(fourier_nonvanishing_check(heavy, grid), NotL1);
}
