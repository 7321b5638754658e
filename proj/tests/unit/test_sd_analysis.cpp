#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "oracle.hpp"
#include "sdfields/errors.hpp"
#include "sdfields/sd_analysis.hpp"

using namespace sdfields;

namespace {

LevyQuadruplet homogeneous(LevySeed seed) { return make_factorizable(std::move(seed), ControlMeasure{}); }

LevyMeasure1D density_only(std::function<double(double)> d, Interval support) {
  LevyMeasure1D m;
  m.density = std::move(d);
  m.support = support;
  return m;
}

CylinderSet half_line(std::vector<double> coords, std::size_t j, double a) {
  const std::size_t n = coords.size();
  Box b{std::vector<double>(n, -kInf), std::vector<double>(n, kInf)};
  b.lo[j] = a;
  return {std::move(coords), Region{{b}}};
}

}  // namespace

TEST(MasterMeasure, OuCompoundPoisson) {
  auto spec = MasterMeasureSpec::make(homogeneous({0.0, 0.0, exponential_measure(1.0, 1.0)}), ou_kernel());
  const double want = oracle::half_line([](double x) { return std::log(x) * std::exp(-x); }, 1.0);
  auto one = master_measure_eval(spec, half_line({0.0}, 0, 1.0));
  EXPECT_NEAR(one.value, want, 1e-8);
  EXPECT_FALSE(one.degenerate);
  // Same through a two-point cylinder.
  auto two = master_measure_eval(spec, half_line({0.0, 1.0}, 0, 1.0));
  EXPECT_NEAR(two.value, want, 1e-8);
  // Negative half line: the jumps are positive and the kernel is positive.
  CylinderSet neg{{0.0}, Region{{Box{{-kInf}, {-1.0}}}}};
  EXPECT_EQ(master_measure_eval(spec, neg).value, 0.0);
}

TEST(MasterMeasure, ProjectionConsistencyAndScaling) {
  auto basis = homogeneous({0.0, 0.0, gamma_measure(1.0, 1.0)});
  auto spec = MasterMeasureSpec::make(basis, gamma_kernel(0.5));
  for (double a : {0.05, 0.3, 1.0, 2.0}) {
    CylinderSet small{{0.0}, Region{{Box{{a}, {3.0 * a}}}}};
    CylinderSet big{{0.0, 0.7}, Region{{Box{{a, -kInf}, {3.0 * a, kInf}}}}};
    const double x = master_measure_eval(spec, small).value;
    const double y = master_measure_eval(spec, big).value;
    EXPECT_NEAR(x, y, 1e-6 * x);
    // Scaling: kernel 2 f on R equals kernel f on R / 2.
    auto spec2 = MasterMeasureSpec::make(basis, gamma_kernel(0.5).scaled(2.0));
    const double z = master_measure_eval(spec2, small).value;
    const double w = master_measure_eval(spec, small.scaled(0.5)).value;
    EXPECT_NEAR(z, w, 1e-6 * w);
  }
}

TEST(MasterMeasure, DegenerateKernel) {
  auto zero = custom_kernel(Expression::parse("0"), Continuity::upper, true, {0.0, 1.0});
  auto spec = MasterMeasureSpec::make(homogeneous({0.0, 0.0, exponential_measure(1.0, 1.0)}), zero);
  auto v = master_measure_eval(spec, half_line({0.0}, 0, 1.0));
  EXPECT_TRUE(v.degenerate);
  EXPECT_EQ(v.value, 0.0);
}

TEST(MasterMeasure, RejectsRegionsAtOrigin) {
  auto spec = MasterMeasureSpec::make(homogeneous({0.0, 0.0, exponential_measure(1.0, 1.0)}), ou_kernel());
  CylinderSet bad{{0.0}, Region{{Box{{-1.0}, {1.0}}}}};
  EXPECT_THROW(master_measure_eval(spec, bad), InvalidArgument);
}

TEST(Dilation, OneDimensionalExamples) {
  auto gamma_sub = gamma_measure(1.0, 1.0);
  EXPECT_TRUE(dilation_check_1d(gamma_sub, default_q_grid(), default_dilation_intervals()).pass);
  auto cp = exponential_measure(1.0, 1.0);
  auto r = dilation_check_1d(cp, {5.0}, default_dilation_intervals());
  ASSERT_FALSE(r.pass);
  EXPECT_EQ(r.witness->q, 5.0);
  EXPECT_DOUBLE_EQ(r.witness->interval->lo, 0.1);
  EXPECT_DOUBLE_EQ(r.witness->interval->hi, 0.2);
  EXPECT_NEAR(r.witness->scaled_mass, std::exp(-0.5) - std::exp(-1.0), 1e-12);
  EXPECT_NEAR(r.witness->mass, std::exp(-0.1) - std::exp(-0.2), 1e-12);
  EXPECT_FALSE(dilation_check_1d(cp, default_q_grid(), default_dilation_intervals()).pass);
  EXPECT_TRUE(dilation_check_1d(zero_measure(), default_q_grid(), default_dilation_intervals()).pass);
}

TEST(Dilation, FieldInheritanceAndConverse) {
  auto gamma_basis = homogeneous({0.0, 0.0, gamma_measure(1.0, 1.0)});
  auto cp_basis = homogeneous({0.0, 0.0, exponential_measure(1.0, 1.0)});
  const std::vector<double> coords{0.5, 1.5};
  const auto sets = default_cylinder_sets(coords, 16);
  auto ou_gamma = MasterMeasureSpec::make(gamma_basis, ou_kernel());
  EXPECT_TRUE(dilation_check_field(ou_gamma, default_q_grid(), sets).pass);
  auto frac_cp = MasterMeasureSpec::make(cp_basis, fractional_kernel(0.25));
  auto r = dilation_check_field(frac_cp, default_q_grid(), sets);
  EXPECT_FALSE(r.pass);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_GT(r.witness->scaled_mass, r.witness->mass);
  auto none = MasterMeasureSpec::make(homogeneous({0.0, 1.0, zero_measure()}), ou_kernel());
  EXPECT_TRUE(dilation_check_field(none, default_q_grid(), sets).pass);
}

TEST(Dilation, TransferFromSdSeeds) {
  // Seeds that pass the one-dimensional test give SD fields for every kernel.
  std::vector<LevyMeasure1D> seeds{gamma_measure(1.0, 1.0), tempered_stable_measure(1.0, 0.5, 0.6, 1.0, 2.0)};
  std::vector<KernelSpec> kernels{ou_kernel(), gamma_kernel(0.5), fractional_kernel(0.25)};
  const std::vector<double> coords{0.0, 1.0};
  const auto sets = default_cylinder_sets(coords, 8);
  for (const auto& m : seeds) {
    ASSERT_TRUE(dilation_check_1d(m, default_q_grid(), default_dilation_intervals()).pass);
    for (const auto& k : kernels) {
      auto spec = MasterMeasureSpec::make(homogeneous({0.0, 0.0, m}), k);
      EXPECT_TRUE(dilation_check_field(spec, default_q_grid(), sets).pass) << m.label << " " << k.label;
    }
  }
}

TEST(Urbanik, Depths) {
  const auto q = default_q_grid();
  EXPECT_EQ(urbanik_depth_1d(gamma_measure(1.0, 1.0), q, 2).depth, 0);
  EXPECT_EQ(urbanik_depth_1d(exponential_measure(1.0, 1.0), q, 2).depth, -1);
  EXPECT_EQ(urbanik_depth_1d(zero_measure(), q, 3).depth, 3);
  // x^{-1-beta}: every residual is a multiple of the same density.
  auto stable = density_only([](double x) { return std::pow(x, -1.5); }, {0.0, kInf});
  for (int m = 0; m <= 2; ++m) EXPECT_EQ(urbanik_depth_1d(stable, q, m).depth, m);
  // log(1/x) / x on (0, 1): SD, its residuals are SD, the next level is not.
  auto log_density = density_only([](double x) { return std::log(1.0 / x) / x; }, {0.0, 1.0});
  EXPECT_EQ(urbanik_depth_1d(log_density, q, 2).depth, 1);
  EXPECT_EQ(urbanik_depth_1d(log_density, q, 0).depth, 0);
  EXPECT_THROW(urbanik_depth_1d(dirac_measure(1.0, 1.0), q, 1), InvalidArgument);
}

TEST(ChargeZero, Examples) {
  auto basis = homogeneous({0.0, 0.0, gamma_measure(1.0, 1.0)});
  const std::vector<double> u_dense{-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0};
  EXPECT_TRUE(charge_zero_precondition(MasterMeasureSpec::make(basis, ou_kernel()), u_dense).guaranteed);
  EXPECT_TRUE(charge_zero_precondition(MasterMeasureSpec::make(basis, gamma_kernel(0.5)), u_dense).guaranteed);
  auto path = custom_kernel(Expression::parse("ind(u == 0)"), Continuity::neither, false, {-kInf, kInf});
  EXPECT_FALSE(charge_zero_precondition(MasterMeasureSpec::make(basis, path), u_dense).guaranteed);
}
