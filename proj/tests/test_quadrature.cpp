#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "goldstop/ode.hpp"
#include "goldstop/quadrature.hpp"
#include "goldstop/rng.hpp"
#include "goldstop/roots.hpp"
#include "goldstop/stats.hpp"
#include "oracles.hpp"

using namespace goldstop;

TEST(Quadrature, PolynomialExact) {
  auto r = integrate([](double x) { return 3 * x * x; }, 0.0, 2.0);
  EXPECT_NEAR(r.value, 8.0, 1e-13);
}

TEST(Quadrature, ReversedLimitsFlipSign) {
  auto f = [](double x) { return std::exp(x); };
  EXPECT_NEAR(integrate(f, 1.0, 0.0).value, -(std::numbers::e - 1), 1e-12);
  EXPECT_EQ(integrate(f, 0.5, 0.5).value, 0.0);
}

TEST(Quadrature, KinkWithSplit) {
  auto f = [](double x) { return std::abs(x - 0.3); };
  EXPECT_NEAR(integrate_split(f, 0.0, 0.3, 1.0).value, 0.045 + 0.245, 1e-13);
}

TEST(Quadrature, IntegrableEndpointSingularity) {
  auto r = integrate([](double x) { return 1 / std::sqrt(x); }, 0.0, 1.0, {1e-10, 1e-9, 5000});
  EXPECT_NEAR(r.value, 2.0, 1e-7);
}

TEST(Quadrature, NonFiniteThrows) {
  EXPECT_THROW(integrate([](double) { return std::nan(""); }, 0.0, 1.0), NumericalError);
}

TEST(Roots, NewtonBracketedMatchesBisection) {
  auto f = [](double x) { return std::cos(x) - x; };
  auto df = [](double x) { return -std::sin(x) - 1; };
  const double a = newton_bracketed(f, df, 0.0, 1.0).root;
  const double b = bisect(f, 0.0, 1.0).root;
  EXPECT_NEAR(a, 0.7390851332151607, 1e-12);
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(Roots, RejectsUnbracketed) {
  auto f = [](double x) { return x * x + 1; };
  EXPECT_THROW(bisect(f, -1.0, 1.0), DomainError);
}

TEST(Ode, ExponentialGrowthAtNodes) {
  std::vector<double> nodes{0.5, 1.0, 1.5};
  auto run = integrate_rk45([](double, double y) { return y; }, 0.0, 1.0, 2.0, nodes,
                            [](double, double) { return false; });
  ASSERT_EQ(run.node_values.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(run.node_values[k], std::exp(nodes[k]), 1e-8);
  EXPECT_NEAR(run.y, std::exp(2.0), 1e-8);
}

TEST(Ode, StopPredicateHalts) {
  auto run = integrate_rk45([](double, double) { return 1.0; }, 0.0, 0.0, 10.0, {},
                            [](double, double y) { return y > 3.0; });
  EXPECT_TRUE(run.stopped);
  EXPECT_LT(run.t, 10.0);
}

TEST(Stats, PairwiseSumIsOrderFixed) {
  std::vector<double> v(1001);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 1.0 / (1.0 + k);
  const double a = pairwise_sum(v);
  EXPECT_EQ(a, pairwise_sum(v));
  long double h = 0;
  for (std::size_t k = v.size(); k-- > 0;) h += 1.0L / (1.0L + k);
  EXPECT_NEAR(a, static_cast<double>(h), 1e-13);
}

TEST(Stats, MomentsOfKnownSample) {
  std::vector<double> v{1, 2, 3, 4};
  auto m = sample_moments(v);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.std_dev, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(m.std_error, std::sqrt(5.0 / 3.0) / 2, 1e-15);
  EXPECT_THROW(sample_moments(std::vector<double>{1.0}), DomainError);
}

TEST(Stats, KsOfPerfectUniformGrid) {
  std::vector<double> v;
  for (int k = 0; k < 100; ++k) v.push_back((k + 0.5) / 100);
  EXPECT_NEAR(ks_statistic(v, [](double x) { return x; }), 0.005, 1e-15);
  EXPECT_EQ(ks_two_sample(v, v), 0.0);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  PathStream a(42, 7), b(42, 7), c(42, 8);
  const double x = a.normal();
  EXPECT_EQ(x, b.normal());
  EXPECT_NE(x, c.normal());
}

TEST(Rng, NormalAndChiSquareMoments) {
  PathStream s(1, 0);
  std::vector<double> z(200000), q(200000);
  for (auto& v : z) v = s.normal();
  for (auto& v : q) v = s.chi_square(2.5);
  auto mz = sample_moments(z);
  auto mq = sample_moments(q);
  EXPECT_NEAR(mz.mean, 0.0, 4 * mz.std_error);
  EXPECT_NEAR(mz.std_dev, 1.0, 0.01);
  EXPECT_NEAR(mq.mean, 2.5, 4 * mq.std_error);
  EXPECT_NEAR(mq.std_dev * mq.std_dev, 5.0, 0.1);
}

TEST(Rng, UniformIsInOpenUnitInterval) {
  PathStream s(3, 3);
  for (int k = 0; k < 100000; ++k) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}
