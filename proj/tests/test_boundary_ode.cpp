#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "goldstop/bessel.hpp"
#include "goldstop/boundary_ode.hpp"
#include "oracles.hpp"

using namespace goldstop;

TEST(Boundary, LinearAndInterpolation) {
  const auto b = Boundary::linear(2.5, geometric_grid(0.1, 10, 33));
  EXPECT_NEAR(b(1.234), 2.5 * 1.234, 1e-12);
  EXPECT_NEAR(b.derivative(3.3), 2.5, 1e-12);
  EXPECT_NEAR(b.inverse(5.0), 2.0, 1e-10);
  EXPECT_TRUE(b.covers(5.0));
  EXPECT_FALSE(b.covers(20.0));
}

TEST(Boundary, RejectsNonIncreasing) {
  EXPECT_THROW(Boundary({1, 2, 3}, {2, 2, 4}, provenance::Imported{}), DomainError);
  EXPECT_THROW(Boundary({1, 3, 2}, {2, 3, 4}, provenance::Imported{}), DomainError);
}

TEST(Boundary, CsvRoundTrip) {
  const auto m = make_bessel_model(3);
  const auto b = Boundary::linear(2.618, geometric_grid(0.5, 2, 17));
  std::stringstream ss;
  b.write_csv(ss, m);
  const auto header = ss.str().substr(0, ss.str().find('\n'));
  EXPECT_EQ(header, "i,f,h");
  const auto back = Boundary::read_csv(ss);
  ASSERT_EQ(back.grid().size(), b.grid().size());
  for (std::size_t k = 0; k < b.grid().size(); ++k) {
    EXPECT_EQ(back.grid()[k], b.grid()[k]);
    EXPECT_EQ(back.values()[k], b.values()[k]);
  }
}

TEST(BoundaryOde, LinearSolutionSlope) {
  for (double d : {3.0, 4.0, 5.0}) {
    const double lam = bessel_lambda(d);
    const auto m = make_bessel_model(d);
    EXPECT_NEAR(boundary_ode_rhs(m, 1.0, lam), lam, 1e-8) << d;
    EXPECT_NEAR(boundary_ode_rhs(m, 3.0, 3 * lam), lam, 1e-8) << d;
  }
}

TEST(BoundaryOde, BlowsUpAboveH) {
  const auto m = make_bessel_model(3);
  EXPECT_GT(boundary_ode_rhs(m, 1.0, 2.0 + 1e-6), 1e3);
  EXPECT_THROW(boundary_ode_rhs(m, 1.0, 2.0), SingularPointError);
}

TEST(BoundaryOde, InverseIsReciprocal) {
  const auto m = make_bessel_model(4);
  EXPECT_NEAR(boundary_ode_inverse_rhs(m, 1.0, 1.6) * boundary_ode_rhs(m, 1.0, 1.6), 1.0, 1e-12);
}

TEST(Shooting, FromSmallStartApproachesGoldenLine) {
  const auto m = make_bessel_model(3);
  const auto b = shoot_from_h(m, 1e-4, 2.0, 64);
  EXPECT_NEAR(b(1.0), 1 + kGoldenRatio, 1e-2);
}

TEST(Shooting, LateStartStaysBelowLine) {
  const auto m = make_bessel_model(3);
  const auto b = shoot_from_h(m, 0.5, 2.0, 64);
  for (std::size_t k = 0; k < b.grid().size(); ++k) {
    if (b.grid()[k] <= 0.5) continue;
    EXPECT_LT(b.values()[k], (1 + kGoldenRatio) * b.grid()[k]);
    EXPECT_GT(b.values()[k], h_curve(m, b.grid()[k]));
  }
  EXPECT_THROW(shoot_from_h(m, 2.0, 2.0, 64), DomainError);
}

TEST(Shooting, NoCrossing) {
  const auto m = make_bessel_model(3);
  const auto grid = geometric_grid(0.5, 2, 41);
  const auto early = shoot_on_grid(m, 1e-2, grid);
  const auto late = shoot_on_grid(m, 1e-1, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_GT(early.values[k], late.values[k]);
}

TEST(MinimalBoundary, GoldenRatioForDimensionThree) {
  const auto m = make_bessel_model(3);
  const auto rep = minimal_boundary_report(m, 0.5, 2, 41, {1e-1, 1e-2, 1e-3, 1e-4});
  for (std::size_t k = 0; k < rep.boundary.grid().size(); ++k)
    EXPECT_NEAR(rep.boundary.values()[k] / rep.boundary.grid()[k], 1 + kGoldenRatio, 1e-2);
  for (std::size_t k = 1; k < rep.successive_gaps.size(); ++k)
    EXPECT_LT(rep.successive_gaps[k], rep.successive_gaps[k - 1]);
  EXPECT_TRUE(is_admissible(rep.boundary, m));
}

TEST(MinimalBoundary, DimensionFiveMatchesBisectionRoot) {
  const auto m = make_bessel_model(5);
  const auto b = minimal_boundary(m, 0.5, 2, 41, {1e-1, 1e-2, 1e-3, 1e-4});
  const double lam = oracle::lambda_bisection(5);
  for (std::size_t k = 0; k < b.grid().size(); ++k)
    EXPECT_NEAR(b.values()[k] / b.grid()[k], lam, 1e-2);
}

TEST(MinimalBoundary, ScaleInvariance) {
  const auto m = make_bessel_model(3);
  const auto b = minimal_boundary(m, 0.25, 4, 129, default_shot_starts(0.25));
  for (double i : {0.5, 1.0, 1.5})
    for (double alpha : {0.5, 2.0})
      EXPECT_NEAR(b(alpha * i), alpha * b(i), 1e-6 * alpha * b(i));
}

TEST(MinimalBoundary, RejectsBadStarts) {
  const auto m = make_bessel_model(3);
  EXPECT_THROW(minimal_boundary(m, 0.5, 2, 41, {}), DomainError);
  EXPECT_THROW(minimal_boundary(m, 0.5, 2, 41, {1e-3, 1e-2}), DomainError);
  EXPECT_THROW(minimal_boundary(m, 0.5, 2, 41, {0.7}), DomainError);
}

TEST(ValueFunction, ClosedFormAgreement) {
  oracle::Lcg g(8);
  for (double d : {3.0, 4.0, 5.0}) {
    const double lam = bessel_lambda(d);
    const auto m = make_bessel_model(d);
    const auto b = Boundary::linear(lam, geometric_grid(0.05, 20, 64));
    EXPECT_NEAR(value_function_numeric(m, b, 1, 1), bessel_value(d, lam, 1, 1), 1e-10);
    for (int k = 0; k < 20; ++k) {
      const double i = g.uniform(0.1, 5), x = i * g.uniform(1, lam);
      EXPECT_NEAR(value_function_numeric(m, b, i, x), bessel_value(d, lam, i, x), 1e-8);
    }
  }
}

TEST(ValueFunction, SignAndBoundaryValue) {
  const auto m = make_bessel_model(3);
  const auto b = Boundary::linear(1 + kGoldenRatio, geometric_grid(0.1, 10, 64));
  EXPECT_EQ(value_function_numeric(m, b, 1, b(1)), 0.0);
  EXPECT_LT(value_function_numeric(m, b, 1, 2), 0.0);
}

TEST(ValueFunction, DecreasingInTheBoundary) {
  // raising f inside the region where c >= 0 lowers V
  const auto m = make_bessel_model(3);
  const auto grid = geometric_grid(0.1, 10, 64);
  const auto low = Boundary::linear(2.2, grid);
  const auto high = Boundary::linear(2.5, grid);
  oracle::Lcg g(10);
  for (int k = 0; k < 20; ++k) {
    const double i = g.uniform(0.2, 4), x = i * g.uniform(1, 2.6);
    EXPECT_LE(value_function_numeric(m, high, i, x), value_function_numeric(m, low, i, x) + 1e-14);
  }
}

TEST(Residuals, MinimalBoundarySatisfiesFreeBoundarySystem) {
  const auto m = make_bessel_model(3);
  const auto b = minimal_boundary(m, 0.5, 2, 41, default_shot_starts(0.5, 4));
  const auto r = free_boundary_residuals(m, b, 1.0, 2.0);
  EXPECT_LE(std::abs(r.pde), 1e-4);
  EXPECT_LE(std::abs(r.smooth_fit), 1e-3);
  EXPECT_LE(std::abs(r.normal_reflection), 1e-3);
}

TEST(Residuals, SuboptimalLineBreaksNormalReflection) {
  // V_f(i, .) meets zero smoothly at f(i) for any f; the ODE is what enforces V_i = 0
  const auto m = make_bessel_model(3);
  const auto b = Boundary::linear(3.3, geometric_grid(0.1, 10, 64));
  const auto r = free_boundary_residuals(m, b, 1.0, 2.0);
  EXPECT_LE(std::abs(r.smooth_fit), 1e-3);
  EXPECT_GT(std::abs(r.normal_reflection), 1e-2);
}
