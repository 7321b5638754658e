#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "sdfields/errors.hpp"
#include "sdfields/integrated_fields.hpp"

using namespace sdfields;

namespace {

LevyQuadruplet homogeneous(LevySeed seed) { return make_factorizable(std::move(seed), ControlMeasure{}); }
LevyQuadruplet wiener() { return homogeneous({0.0, 1.0, zero_measure()}); }
LevyQuadruplet centered_cp() {
  LevySeed s;
  s.rho = exponential_measure(1.0, 1.0);
  s.gamma = centering_drift(s.rho);
  return homogeneous(s);
}

KernelSpec zero_kernel() {
  return custom_kernel(Expression::parse("0"), Continuity::upper, true, {0.0, 1.0});
}

SimGrid grid(double s0, double s1, double ds, std::uint64_t seed = 11) {
  SimGrid g;
  g.s0 = s0;
  g.s1 = s1;
  g.ds = ds;
  g.seed = seed;
  return g;
}

}  // namespace

TEST(MuSection, ZeroKernelAndOuClosedForm) {
  const auto leb = IntegratorMeasure::lebesgue({-kInf, kInf});
  EXPECT_EQ(mu_f_section(zero_kernel(), leb, {0.0, 1.0}, 0.5), 0.0);
  for (double s : {-0.7, -3.0}) {
    for (double t : {0.5, 2.0}) {
      EXPECT_NEAR(mu_f_section(ou_kernel(), leb, {0.0, t}, s), std::exp(s) * (1.0 - std::exp(-t)), 1e-12);
    }
  }
  // s inside A: only u >= s contributes.
  EXPECT_NEAR(mu_f_section(ou_kernel(), leb, {0.0, 1.0}, 0.3), 1.0 - std::exp(-0.7), 1e-12);
}

TEST(MuSection, SingularKernelAgainstWeight) {
  const auto mu = IntegratorMeasure::weighted([](double u) { return u * u; }, {0.0, 2.0});
  const double s = 0.2;
  // u = s + v^2 removes the singularity.
  const double expect = oracle::finite(
      [&](double v) { return 2.0 * (s + v * v) * (s + v * v) * std::exp(-v * v); }, 0.0, std::sqrt(1.5 - s));
  EXPECT_NEAR(mu_f_section(gamma_kernel(-0.5), mu, {0.0, 1.5}, s), expect, 1e-9);
  EXPECT_THROW(mu_f_section(ou_kernel(), mu, {0.0, 3.0}, s), InvalidArgument);
}

TEST(IntegratorMeasure, MassAndEquivalence) {
  const auto leb = IntegratorMeasure::lebesgue({0.0, kInf});
  EXPECT_DOUBLE_EQ(leb.mass({1.0, 3.0}).value, 2.0);
  EXPECT_EQ(leb.mass({1.0, kInf}).status, quad::Status::diverged);
  const auto w = IntegratorMeasure::weighted([](double u) { return std::exp(-u); }, {0.0, kInf});
  EXPECT_NEAR(w.mass({0.0, kInf}).value, 1.0, 1e-9);
  EXPECT_TRUE(w.equivalent_to_lebesgue());
  const auto gap = IntegratorMeasure::weighted([](double u) { return u < 0.5 ? 0.0 : 1.0; }, {0.0, 1.0});
  EXPECT_FALSE(gap.equivalent_to_lebesgue());
}

TEST(GammaConvolution, ExamplesAndSymmetry) {
  EXPECT_NEAR(gamma_convolution_constant(0.0, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(gamma_convolution_constant(-0.5, -0.5), M_PI, 1e-10);
  EXPECT_NEAR(gamma_convolution_constant(1.0, 2.0), 1.0 / 12.0, 1e-15);
  for (auto [a, b] : {std::pair{0.3, -0.6}, std::pair{-0.9, 2.5}, std::pair{-0.25, -0.75}}) {
    EXPECT_EQ(gamma_convolution_constant(a, b), gamma_convolution_constant(b, a));
    const double expect = std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 2.0);
    EXPECT_NEAR(gamma_convolution_constant(a, b), expect, 1e-9 * expect);
  }
  EXPECT_THROW(gamma_convolution_constant(-1.0, 0.0), InvalidArgument);
}

TEST(FubiniCondition, OuWithCenteredCompoundPoissonHolds) {
  const auto ctx = OrliczContext::make(centered_cp(), 1);
  const auto leb = IntegratorMeasure::lebesgue({-kInf, kInf});
  const auto r = fubini_condition_check(ou_kernel(), leb, {0.0, 1.0}, ctx);
  EXPECT_EQ(r.verdict, Verdict::holds);
  ASSERT_TRUE(r.moment_verdict.has_value());
  EXPECT_EQ(*r.moment_verdict, Verdict::holds);
  EXPECT_TRUE(r.agree);
  // Stationary kernel: the norm does not depend on u.
  const double norm = luxemburg_norm(ctx, kernel_section(ou_kernel(), 0.0));
  EXPECT_NEAR(r.norm_integral, norm, 1e-6 * norm);
  const auto shifted = fubini_condition_check(ou_kernel(), leb, {5.0, 6.0}, ctx);
  EXPECT_NEAR(shifted.norm_integral, r.norm_integral, 1e-6 * norm);
  // Infinite mu(A) makes the condition fail.
  const auto unbounded = fubini_condition_check(ou_kernel(), leb, {0.0, kInf}, ctx);
  EXPECT_EQ(unbounded.verdict, Verdict::fails);
  EXPECT_FALSE(unbounded.mu_finite);
}

TEST(FubiniCondition, InverseNormFailsAndZeroHolds) {
  const auto ctx = OrliczContext::make(wiener(), 1);
  const auto leb = IntegratorMeasure::lebesgue({0.0, 1.0});
  // f(u, s) = 1{0 <= s <= 1} / u has norm 1 / u against a standard Wiener basis.
  const auto k = custom_kernel(Expression::parse("1 / u"), Continuity::upper, false, {0.0, 1.0});
  EXPECT_NEAR(luxemburg_norm(ctx, kernel_section(k, 0.25)), 4.0, 1e-8);
  const auto r = fubini_condition_check(k, leb, {0.0, 1.0}, ctx);
  EXPECT_EQ(r.verdict, Verdict::fails);
  ASSERT_TRUE(r.moment_verdict.has_value());
  EXPECT_EQ(*r.moment_verdict, Verdict::fails);
  EXPECT_TRUE(r.agree);

  const auto z = fubini_condition_check(zero_kernel(), leb, {0.0, 1.0}, ctx);
  EXPECT_EQ(z.verdict, Verdict::holds);
  EXPECT_EQ(z.norm_integral, 0.0);
}

TEST(FubiniCondition, Preconditions) {
  LevySeed s;
  s.rho = exponential_measure(1.0, 1.0);
  const auto leb = IntegratorMeasure::lebesgue({0.0, 1.0});
  EXPECT_THROW(fubini_condition_check(ou_kernel(), leb, {0.0, 1.0}, OrliczContext::make(homogeneous(s), 1)),
               NotCentered);
  EXPECT_THROW(fubini_condition_check(ou_kernel(), leb, {0.0, 1.0}, OrliczContext::make(wiener(), 0)),
               InvalidArgument);
}

TEST(IntegratedField, ZeroKernelGivesZeroSides) {
  const auto g = grid(-2.0, 1.0, 0.01);
  const auto inc = simulate_basis_increments(wiener(), g, 3);
  const auto sides =
      integrated_field_sim(zero_kernel(), IntegratorMeasure::lebesgue({0.0, 1.0}), {{0.0, 1.0}}, inc, g);
  ASSERT_EQ(sides.size(), 1u);
  EXPECT_EQ(sides[0].left, 0.0);
  EXPECT_EQ(sides[0].right, 0.0);
}

TEST(IntegratedField, RightSideUsesEffectiveKernel) {
  // OU kernel, A = [0, 1]: mu_f(A, s) = e^s (1 - e^{-1}) for s < 0 and 1 - e^{-(1 - s)} on [0, 1].
  const auto g = grid(-5.0, 1.0, 0.01);
  const auto inc = simulate_basis_increments(wiener(), g, 5);
  const auto sides = integrated_field_sim(ou_kernel(), IntegratorMeasure::lebesgue({-kInf, kInf}), {{0.0, 1.0}}, inc, g);
  double expect = 0.0;
  for (std::size_t i = 0; i < g.cells(); ++i) {
    const double a = g.cell_lo(i);
    const double b = g.cell_hi(i);
    const double avg = oracle::finite(
        [](double s) { return s < 0.0 ? std::exp(s) * (1.0 - std::exp(-1.0)) : 1.0 - std::exp(-(1.0 - s)); }, a, b) /
        (b - a);
    expect += avg * inc.values[i];
  }
  EXPECT_NEAR(sides[0].right, expect, 1e-10);
  EXPECT_LT(std::abs(sides[0].gap), 1e-3);
}

TEST(IntegratedField, GapShrinksUnderRefinement) {
  for (const auto& q : {wiener(), centered_cp()}) {
    const auto r = fubini_refinement(q, ou_kernel(), IntegratorMeasure::lebesgue({0.0, 1.0}), {0.0, 1.0},
                                     grid(-10.0, 1.0, 0.02), 3, 50);
    ASSERT_EQ(r.ratios.size(), 2u);
    for (double x : r.ratios) EXPECT_GE(x, 1.8);
  }
}

TEST(IntegratedField, LangevinIdentity) {
  for (const auto& q : {wiener(), centered_cp()}) {
    const auto r = langevin_check(q, grid(-2.0, 1.0, 1e-3), 1.0, 50);
    EXPECT_GT(r.levy_l2, 0.5);
    EXPECT_LT(r.ratio, 1e-3);
  }
  EXPECT_THROW(langevin_check(wiener(), grid(0.0, 1.0, 1e-3), 1.0, 10), InvalidArgument);
}

TEST(GammaCollapse, ZeroNoiseAndPreconditions) {
  const auto zero = homogeneous({0.0, 0.0, zero_measure()});
  const auto r = gamma_ou_collapse_check(-0.5, zero, grid(-5.0, 5.0, 0.01), 0.0);
  EXPECT_EQ(r.relative_error, 0.0);
  EXPECT_NEAR(r.k_alpha, M_PI, 1e-10);
  // The Gaussian part needs a square-integrable kernel, which fails at alpha = -1/2.
  EXPECT_THROW(gamma_ou_collapse_check(-0.5, wiener(), grid(-5.0, 5.0, 0.01), 0.0), IntegrabilityFailure);
  EXPECT_THROW(gamma_ou_collapse_check(0.5, zero, grid(-5.0, 5.0, 0.01), 0.0), InvalidArgument);
}

TEST(GammaCollapse, CompoundPoissonCollapsesToOu) {
  const auto q = centered_cp();
  const auto half = gamma_ou_collapse_check(-0.5, q, grid(-10.0, 5.0, 0.005), -5.0, 10);
  EXPECT_LE(half.relative_error, 0.05);
  const auto coarse = gamma_ou_collapse_check(-0.5, q, grid(-10.0, 5.0, 0.02), -5.0, 10);
  EXPECT_LT(half.relative_error, coarse.relative_error);
  const auto quarter = gamma_ou_collapse_check(-0.25, q, grid(-10.0, 5.0, 0.005), -5.0, 10);
  EXPECT_NEAR(quarter.k_alpha, gamma_convolution_constant(-0.25, -0.75), 1e-15);
  EXPECT_LE(quarter.relative_error, 0.05);
}

TEST(FubiniCondition, NonStationaryNormIntegral) {
  // f(u, s) = u s on s in [0, 1]: against a standard Wiener basis the norm is
  // u / sqrt(3) and the moment form is u^2 / 3.
  const auto ctx = OrliczContext::make(wiener(), 1);
  const auto k = custom_kernel(Expression::parse("u * s"), Continuity::upper, false, {0.0, 1.0});
  const auto r = fubini_condition_check(k, IntegratorMeasure::lebesgue({0.0, 1.0}), {0.0, 1.0}, ctx);
  EXPECT_EQ(r.verdict, Verdict::holds);
  EXPECT_NEAR(r.norm_integral, 0.5 / std::sqrt(3.0), 1e-6);
  ASSERT_TRUE(r.moment_integral.has_value());
  EXPECT_NEAR(*r.moment_integral, 1.0 / 9.0, 1e-6);
}
