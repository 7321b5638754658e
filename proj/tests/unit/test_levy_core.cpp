#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "sdfields/errors.hpp"
#include "sdfields/levy_core.hpp"

using namespace sdfields;

namespace {

LevyQuadruplet homogeneous(LevySeed seed) { return make_factorizable(std::move(seed), ControlMeasure{}); }

LevyMeasure1D density_only(std::function<double(double)> d, Interval support) {
  LevyMeasure1D m;
  m.density = std::move(d);
  m.support = support;
  return m;
}

}  // namespace

TEST(LevyCore, Truncate) {
  EXPECT_EQ(truncate(0.5), 0.5);
  EXPECT_EQ(truncate(2.0), 1.0);
  std::vector<double> x{-3.0, 0.25};
  auto t = truncate(x);
  EXPECT_EQ(t[0], -1.0);
  EXPECT_EQ(t[1], 0.25);
}

TEST(LevyCore, CumulantExamples) {
  auto gauss = homogeneous({0.0, 1.0, zero_measure()});
  EXPECT_NEAR(std::abs(cumulant_exponent(gauss, 2.0, point1(7.0)) - cplx(-2.0, 0.0)), 0.0, 1e-15);

  auto poisson = homogeneous({1.0, 0.0, dirac_measure(1.0, 1.0)});
  EXPECT_NEAR(std::abs(cumulant_exponent(poisson, M_PI, point1(0.0)) - cplx(-2.0, 0.0)), 0.0, 1e-12);

  // Density e^{-x} on x > 0 through generic quadrature, against a reference.
  auto expo = homogeneous({0.0, 0.0, density_only([](double x) { return std::exp(-x); }, {0.0, kInf})});
  const cplx got = cumulant_exponent(expo, 1.0, point1(0.0));
  auto integrand = [](double x) {
    return std::exp(std::complex<double>(0.0, x)) - 1.0 - std::complex<double>(0.0, truncate(x));
  };
  const cplx want = oracle::half_line_c([&](double x) { return integrand(x) * std::exp(-x); }, 0.0);
  EXPECT_NEAR(std::abs(got - want), 0.0, 1e-8);
}

TEST(LevyCore, ClosedFormsMatchQuadrature) {
  for (const auto& m : {exponential_measure(1.3, 0.7), gamma_measure(2.0, 1.5), laplace_measure(0.8, 1.2),
                        tempered_stable_measure(1.0, 0.5, 0.7, 1.0, 2.0)}) {
    LevyMeasure1D plain = m;
    plain.jump_exponent_closed = nullptr;
    plain.positive_moment = nullptr;
    plain.negative_moment = nullptr;
    for (double th : {-2.0, 0.5, 3.0}) {
      EXPECT_NEAR(std::abs(m.jump_exponent(th) - plain.jump_exponent(th)), 0.0, 1e-8) << m.label << " " << th;
    }
    for (double k : {0.0, 1.0, 2.0}) {
      EXPECT_NEAR(m.abs_moment(k, 0.3, 2.5).value, plain.abs_moment(k, 0.3, 2.5).value, 1e-9);
    }
  }
}

TEST(LevyCore, BasisCumulant) {
  auto gauss = homogeneous({0.0, 1.0, zero_measure()});
  EXPECT_NEAR(basis_cumulant(gauss, 1.0, point1(0.0), point1(1.0)).real(), -0.5, 1e-12);
  EXPECT_NEAR(basis_cumulant(gauss, 1.0, point1(0.0), point1(2.0)).real(), -1.0, 1e-12);
  auto poisson = homogeneous({1.0, 0.0, dirac_measure(1.0, 1.0)});
  const cplx c = basis_cumulant(poisson, 1.0, point1(0.0), point1(1.0));
  EXPECT_NEAR(std::abs(c - (std::exp(cplx(0.0, 1.0)) - 1.0)), 0.0, 1e-12);
}

TEST(LevyCore, BasisCumulantAdditiveForNonHomogeneousBasis) {
  // gamma(s) = s, b(s) = 1 + s^2 / 4, rho(s) = (1 + s) Exp(1); control density 1 + s.
  LevyQuadruplet q;
  q.seed_at = [](const Point& s) {
    auto seed = std::make_shared<LevySeed>();
    seed->gamma = s[0];
    seed->b = 1.0 + s[0] * s[0] / 4.0;
    seed->rho = exponential_measure(1.0 + s[0], 1.0);
    return std::shared_ptr<const LevySeed>(seed);
  };
  q.control.constant = false;
  q.control.lo[0] = 0.0;
  q.control.density = [](const Point& s) { return 1.0 + s[0]; };
  for (double th : {-1.0, 0.7}) {
    const cplx ab = basis_cumulant(q, th, point1(0.0), point1(2.0));
    const cplx a = basis_cumulant(q, th, point1(0.0), point1(0.6));
    const cplx b = basis_cumulant(q, th, point1(0.6), point1(2.0));
    EXPECT_LE(std::abs(ab - a - b), 1e-9);
  }
}

TEST(LevyCore, CumulantInvariants) {
  auto sym = homogeneous({0.0, 0.5, laplace_measure(2.0, 1.5)});
  auto asym = homogeneous({0.3, 0.2, gamma_measure(1.0, 1.0)});
  for (double th : {-3.0, -1.0, -0.2, 0.2, 1.0, 3.0}) {
    EXPECT_EQ(cumulant_exponent(asym, 0.0, point1(0.0)), cplx(0.0, 0.0));
    const cplx a = cumulant_exponent(asym, th, point1(0.0));
    const cplx b = cumulant_exponent(asym, -th, point1(0.0));
    EXPECT_LE(std::abs(std::conj(a) - b), 1e-10);
    EXPECT_LE(cumulant_exponent(sym, th, point1(0.0)).real(), 0.0);
    // Lévy process scaling: [0, t] is t times [0, 1].
    const cplx one = basis_cumulant(asym, th, point1(0.0), point1(1.0));
    const cplx t = basis_cumulant(asym, th, point1(0.0), point1(3.5));
    EXPECT_LE(std::abs(t - 3.5 * one), 1e-9);
  }
}

TEST(LevyCore, LogMomentCheck) {
  auto e = density_only([](double x) { return std::exp(-x); }, {1.0, kInf});
  EXPECT_EQ(log_moment_check(e).verdict, MomentVerdict::holds);
  auto p = density_only([](double x) { return 1.0 / (x * x); }, {1.0, kInf});
  auto r = log_moment_check(p);
  EXPECT_EQ(r.verdict, MomentVerdict::holds);
  EXPECT_NEAR(r.value, oracle::half_line([](double x) { return std::log(x) / (x * x); }, 1.0), 1e-6);
  auto bad = density_only([](double x) { return 1.0 / (x * std::pow(std::log(x), 2)); }, {M_E, kInf});
  EXPECT_EQ(log_moment_check(bad).verdict, MomentVerdict::fails);
}

TEST(LevyCore, CenteringDrift) {
  // Exp(1) jumps at unit rate: integral over x > 1 of (x - 1) e^{-x} = 1/e.
  EXPECT_NEAR(centering_drift(exponential_measure(1.0, 1.0)), -std::exp(-1.0), 1e-12);
  EXPECT_THROW(centering_drift(density_only([](double x) { return std::pow(x, -1.5); }, {1.0, kInf})),
               IntegrabilityFailure);
}

TEST(LevyCore, QuadrupletValidation) {
  auto ok = homogeneous({0.0, 0.0, exponential_measure(1.0, 1.0)});
  EXPECT_TRUE(ok.validate().empty());
  ok.poissonian = true;
  ok.control.constant = false;
  ok.control.density = [](const Point& s) { return std::exp(-s[0] * s[0]); };
  EXPECT_FALSE(ok.validate().empty());  // homogeneous flag with a varying density
}

TEST(LevyCore, TripletCovariance) {
  auto t = TripletND::zero(2);
  EXPECT_TRUE(t.covariance_valid());
  t.B << 1.0, 2.0, 2.0, 1.0;
  EXPECT_FALSE(t.covariance_valid());
}
