#include <gtest/gtest.h>

#include <cmath>

#include "sdfields/kernel.hpp"
#include "sdfields/quadrature.hpp"

using namespace sdfields;

TEST(Quadrature, SmoothFinite) {
  auto r = quad::integrate_real([](double x) { return std::sin(x); }, 0.0, M_PI);
  EXPECT_EQ(r.status, quad::Status::converged);
  EXPECT_NEAR(r.value, 2.0, 1e-12);
}

TEST(Quadrature, IntegrableEndpointSingularity) {
  auto r = quad::integrate_real([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
  EXPECT_EQ(r.status, quad::Status::converged);
  EXPECT_NEAR(r.value, 2.0, 2e-8);  // relative tolerance 1e-8
}

TEST(Quadrature, PowerTailConverges) {
  auto r = quad::integrate_real([](double x) { return std::pow(x, -1.1); }, 1.0, kInf);
  EXPECT_NE(r.status, quad::Status::diverged);
  EXPECT_NEAR(r.value, 10.0, 1e-3);
}

TEST(Quadrature, DetectsDivergence) {
  auto tail = quad::integrate_real([](double x) { return 1.0 / x; }, 1.0, kInf);
  EXPECT_EQ(tail.status, quad::Status::diverged);
  auto origin = quad::integrate_real([](double x) { return 1.0 / x; }, 0.0, 1.0);
  EXPECT_EQ(origin.status, quad::Status::diverged);
  auto slow = quad::integrate_real([](double x) { return 1.0 / (x * std::log(x)); }, M_E, kInf);
  EXPECT_EQ(slow.status, quad::Status::diverged);
}

TEST(Quadrature, OffsetCoordinatesResolveSingularEnd) {
  // (1 - s)^{-0.9} on [0, 1]: written in offset coordinates from s = 1.
  auto g = [](SPos s) { return std::pow((1.0 - s.base) - s.offset, -0.9); };
  auto r = integrate_s<double>(g, {0.0, 1.0}, {});
  EXPECT_EQ(r.status, quad::Status::converged);
  EXPECT_NEAR(r.value, 10.0, 1e-7);
}
