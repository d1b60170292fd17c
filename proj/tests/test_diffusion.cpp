#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "goldstop/diffusion.hpp"
#include "goldstop/simulator.hpp"
#include "oracles.hpp"

using namespace goldstop;

TEST(BesselModel, ScaleAndSpeed) {
  const auto m3 = make_bessel_model(3);
  EXPECT_DOUBLE_EQ(m3.scale(2), -0.5);
  EXPECT_DOUBLE_EQ(make_bessel_model(4).speed_density(1), 1.0);
  EXPECT_DOUBLE_EQ(m3.drift(2), 0.5);
  EXPECT_DOUBLE_EQ(m3.volatility(7), 1.0);
  for (double d : {2.5, 3.0, 5.5}) {
    const auto m = make_bessel_model(d);
    for (double x : {0.1, 1.0, 3.7}) {
      EXPECT_DOUBLE_EQ(m.scale(x), -std::pow(x, 2 - d));
      EXPECT_NEAR(m.speed_density(x), 2 / (d - 2) * std::pow(x, d - 1), 1e-13 * m.speed_density(x));
      EXPECT_NEAR(m.scale_inverse(m.scale(x)), x, 1e-10 * (1 + x));
    }
    if (d >= 3) {
      EXPECT_GT(m.scale(1e6), -1e-3);
    }
  }
}

TEST(BesselModel, RejectsRecurrentDimension) {
  EXPECT_THROW(make_bessel_model(2), DomainError);
  EXPECT_THROW(make_bessel_model(1.5), DomainError);
  try {
    make_bessel_model(2);
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("recurrent-or-invalid dimension"), std::string::npos);
  }
}

TEST(CValue, Examples) {
  const auto m = make_bessel_model(3);
  EXPECT_DOUBLE_EQ(c_value(m, 1, 2), 0.0);
  EXPECT_DOUBLE_EQ(c_value(m, 1, 1), -1.0);
  EXPECT_NEAR(c_value(m, 1, 1e12), 1.0, 1e-11);
  EXPECT_THROW(c_value(m, 2, 1), DomainError);
}

TEST(HCurve, Examples) {
  EXPECT_DOUBLE_EQ(h_curve(make_bessel_model(3), 1), 2.0);
  EXPECT_NEAR(h_curve(make_bessel_model(4), 1), 1.41421356237, 1e-10);
  EXPECT_NEAR(h_curve(make_bessel_model(5), 3), 3 * std::cbrt(2.0), 1e-12);
}

TEST(HCurve, ZeroOfCAndScaleInvariant) {
  for (double d : {2.5, 3.0, 4.0, 7.0}) {
    const auto m = make_bessel_model(d);
    for (double i : {0.1, 1.0, 10.0}) {
      EXPECT_NEAR(c_value(m, i, h_curve(m, i)), 0.0, 1e-12);
      EXPECT_NEAR(h_curve(m, i) / i, std::pow(2.0, 1 / (d - 2)), 1e-12);
    }
  }
}

TEST(Hitting, Examples) {
  const auto m = make_bessel_model(3);
  auto p = hitting_probabilities(m, 1, 1, 2);
  EXPECT_EQ(p.p_a, 1.0);
  EXPECT_EQ(p.p_b, 0.0);
  EXPECT_NEAR(hitting_probabilities(m, 1, 1.5, 2).p_b, 2.0 / 3.0, 1e-15);
  p = hitting_probabilities(m, 1, 2, 2);
  EXPECT_EQ(p.p_a, 0.0);
  EXPECT_EQ(p.p_b, 1.0);
  EXPECT_THROW(hitting_probabilities(m, 2, 1, 3), DomainError);
}

TEST(Hitting, InvariantUnderAffineScale) {
  const auto m = make_bessel_model(3);
  DiffusionModel::Evaluators ev{[](double x) { return 1 / x; }, [](double) { return 1.0; },
                                [](double x) { return 3.0 * (-1 / x) + 7.0; },
                                [](double x) { return 3.0 / (x * x); }, {}};
  const DiffusionModel shifted(DiffusionModel::Kind::custom, std::nan(""), ev);
  oracle::Lcg g(5);
  for (int k = 0; k < 50; ++k) {
    const double a = g.uniform(0.1, 2), b = a + g.uniform(0.01, 5), x = g.uniform(a, b);
    EXPECT_NEAR(hitting_probabilities(m, a, x, b).p_a, hitting_probabilities(shifted, a, x, b).p_a,
                1e-12);
  }
}

TEST(Green, BoundaryZerosAndSeam) {
  const auto m = make_bessel_model(3);
  EXPECT_EQ(green_function(m, 1, 4, 1, 2.5), 0.0);
  EXPECT_EQ(green_function(m, 1, 4, 2.5, 4), 0.0);
  // both branch formulas at x = y = 2
  const double la = -1, lb = -0.25, l2 = -0.5;
  const double lower = (lb - l2) * (l2 - la) / (lb - la);
  const double upper = (lb - l2) * (l2 - la) / (lb - la);
  EXPECT_NEAR(green_function(m, 1, 4, 2, 2), lower, 1e-15);
  EXPECT_NEAR(lower, upper, 1e-15);
}

TEST(Green, SymmetricAndNonnegative) {
  oracle::Lcg g(11);
  for (double d : {3.0, 4.5}) {
    const auto m = make_bessel_model(d);
    for (int k = 0; k < 100; ++k) {
      const double a = g.uniform(0.1, 1), b = a + g.uniform(0.1, 4);
      const double x = g.uniform(a, b), y = g.uniform(a, b);
      const double gxy = green_function(m, a, b, x, y);
      EXPECT_GE(gxy, 0.0);
      EXPECT_NEAR(gxy, green_function(m, a, b, y, x), 1e-12);
    }
  }
}

TEST(ExitIntegral, TrivialCases) {
  const auto m = make_bessel_model(3);
  EXPECT_EQ(expected_exit_integral(m, [](double) { return 0.0; }, 1, 2, 4), 0.0);
  EXPECT_EQ(expected_exit_integral(m, [](double) { return 1.0; }, 1, 1, 4), 0.0);
}

TEST(ExitIntegral, MeanExitTimeMatchesClosedForm) {
  // For d = 3, u(x) = E_x tau solves u''/2 + u'/x = -1, u(a) = u(b) = 0:
  // u = -x^2/3 + A - B/x with A, B fixed by the endpoints.
  const auto m = make_bessel_model(3);
  const double a = 1, b = 4, x = 2;
  const double B = (b * b - a * a) / 3 / (1 / a - 1 / b);
  const double A = a * a / 3 + B / a;
  const double exact = -x * x / 3 + A - B / x;
  EXPECT_NEAR(expected_exit_integral(m, [](double) { return 1.0; }, a, x, b), exact, 1e-10);
}

TEST(ExitIntegral, MeanExitTimeMatchesMonteCarlo) {
  const auto m = make_bessel_model(3);
  const double exact = expected_exit_integral(m, [](double) { return 1.0; }, 1, 2, 4);
  SimulationConfig cfg;
  cfg.scheme = Scheme::exact;
  cfg.step = 1e-3;
  std::vector<double> tau(4000);
  for (std::size_t p = 0; p < tau.size(); ++p) {
    PathStream s(9, p);
    double x = 2, t = 0;
    while (x > 1 && x < 4) {
      x = detail::Stepper(m, Scheme::exact).advance(x, cfg.step, s);
      t += cfg.step;
    }
    tau[p] = t;
  }
  const auto mo = sample_moments(tau);
  // discrete monitoring lengthens exits by O(sqrt(step))
  EXPECT_NEAR(mo.mean, exact, 3 * mo.std_error + 0.03 * exact);
}

TEST(ExitIntegral, IncreasingInUpperEnd) {
  const auto m = make_bessel_model(3);
  double prev = 0;
  for (double b : {2.5, 3.0, 4.0, 6.0, 10.0}) {
    const double v = expected_exit_integral(m, [](double) { return 1.0; }, 1, 2, b);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(CustomModel, RecoversBesselScaleUpToAffineMap) {
  CustomModelOptions opt;
  opt.x_min = 1e-3;
  opt.x_max = 1e5;
  const auto m = make_custom_model([](double x) { return 1 / x; }, [](double) { return 1.0; }, opt);
  for (double x : {0.01, 0.5, 1.0, 3.0, 100.0}) {
    // -1/x shifted to vanish at x_max and rescaled so that L(1) = -1
    const double exact = (-1 / x + 1e-5) / (1 - 1e-5);
    EXPECT_NEAR(m.scale(x), exact, 1e-8 * std::abs(exact));
    EXPECT_NEAR(m.scale_inverse(m.scale(x)), x, 1e-10 * (1 + x));
  }
  EXPECT_NEAR(h_curve(m, 1.0), 2.0, 1e-3);
}

TEST(CustomModel, ScaleIsIncreasingAndNegative) {
  const auto m = make_custom_model([](double x) { return 1.5 / x + 0.1; },
                                   [](double x) { return 1.0 + 0.1 * x; });
  double prev = -std::numeric_limits<double>::infinity();
  for (double x = 1e-3; x < 1e4; x *= 1.3) {
    const double l = m.scale(x);
    EXPECT_LT(l, 0.0);
    EXPECT_GT(l, prev);
    prev = l;
  }
}

TEST(CustomModel, CsvLoader) {
  std::ostringstream table;
  table << "x,mu,sigma\n";
  for (double x = 1e-2; x < 1.01e3; x *= 1.01) table << x << ',' << 1 / x << ",1\n";
  std::istringstream csv(table.str());
  const auto m = load_model_csv(csv, 1.0);
  EXPECT_NEAR(m.drift(1.0), 1.0, 1e-4);
  EXPECT_NEAR(h_curve(m, 1.0), 2.0, 1e-2);
  std::istringstream bad("x,mu\n1,2\n");
  EXPECT_THROW(load_model_csv(bad, 1.0), DomainError);
}

TEST(CustomModel, WithoutInverseHasNoHCurve) {
  const auto m = make_custom_model_with_scale([](double x) { return 1 / x; },
                                              [](double) { return 1.0; },
                                              [](double x) { return -1 / x; },
                                              [](double x) { return 1 / (x * x); });
  EXPECT_THROW(h_curve(m, 1.0), UnsupportedOperation);
}

TEST(Transience, BesselHasNoWarnings) {
  EXPECT_TRUE(check_transience(make_bessel_model(3), 1e-3, 1e3).empty());
}
