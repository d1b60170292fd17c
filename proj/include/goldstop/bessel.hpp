#pragma once

// Closed forms for transient Bessel processes: the ratio lambda of the
// optimal rule X >= lambda I, its value function, and the law of X at the
// optimal stopping time.

#include <cmath>
#include <numbers>
#include <sstream>

#include "goldstop/boundary.hpp"
#include "goldstop/diffusion.hpp"
#include "goldstop/errors.hpp"
#include "goldstop/quadrature.hpp"
#include "goldstop/roots.hpp"

namespace goldstop {

inline constexpr double kGoldenRatio = std::numbers::phi;

namespace detail {

// Below this distance from 4 the logarithmic branch is used.
inline constexpr double kDimFourBand = 1e-8;

inline bool is_dim_four(double d) { return std::abs(d - 4.0) < kDimFourBand; }

inline void require_dimension(double d) {
  if (!(d > 2.0) || !std::isfinite(d)) {
    std::ostringstream msg;
    msg << "recurrent-or-invalid dimension d = " << d << " (need d > 2)";
    throw DomainError(msg.str());
  }
}

}  // namespace detail

/// F(lambda); its root above 2^(1/(d-2)) is the optimal ratio.
inline double bessel_characteristic(double d, double lam) {
  detail::require_dimension(d);
  if (!(lam > 0.0)) throw DomainError("bessel_characteristic needs lambda > 0");
  if (detail::is_dim_four(d)) return std::pow(lam, 4) - 5 * lam * lam + 4 * std::log(lam) + 4;
  return std::pow(lam, d) - (1 + d) * lam * lam + 4 / (4 - d) * std::pow(lam, 4 - d) -
         (d - 2) * (d - 2) / (4 - d);
}

/// F'(lambda) = d lambda^(3-d) (lambda^(d-2) - 2/d) (lambda^(d-2) - 2).
inline double bessel_characteristic_derivative(double d, double lam) {
  detail::require_dimension(d);
  if (!(lam > 0.0)) throw DomainError("bessel_characteristic_derivative needs lambda > 0");
  const double p = std::pow(lam, d - 2);
  return d * std::pow(lam, 3 - d) * (p - 2 / d) * (p - 2);
}

/// The unique root of F in (2^(1/(d-2)), inf).
inline double bessel_lambda(double d) {
  detail::require_dimension(d);
  const double lam1 = std::pow(2.0, 1.0 / (d - 2));
  const double lo = lam1 * (1 + 1e-9);
  double hi = 2 * lam1;
  auto f = [d](double l) { return bessel_characteristic(d, l); };
  while (f(hi) <= 0.0) {
    hi *= 2;
    if (!std::isfinite(hi)) throw NumericalError("bessel_lambda: no upper bracket");
  }
  auto df = [d](double l) { return bessel_characteristic_derivative(d, l); };
  return newton_bracketed(f, df, lo, hi, 1e-12).root;
}

/// Closed-form value function for the rule X >= lam I; 0 for x >= lam i.
inline double bessel_value(double d, double lam, double i, double x) {
  detail::require_dimension(d);
  detail::require_state(i, "i");
  detail::require_state(x, "x");
  if (i > x) throw DomainError("bessel_value needs i <= x");
  if (x >= lam * i) return 0.0;
  const double r = lam * i / x;
  const double q = i / x;
  if (detail::is_dim_four(d)) {
    return x * x * (0.5 + q * q) * (r * r - 1) - x * x / 4 * (std::pow(r, 4) - 1) -
           2 * i * i * std::log(r);
  }
  return 2 / (d - 2) *
         (x * x * (0.5 + std::pow(q, d - 2)) * (r * r - 1) - x * x / d * (std::pow(r, d) - 1) -
          2 * std::pow(lam, 4 - d) / (d - 4) * i * i * (std::pow(r, d - 4) - 1));
}

/// Law of X at the stopping time of the rule X >= lambda I started from x0:
/// P(X <= y) = (y / (lambda x0))^p with p = (d-2) / (1 - lambda^-(d-2)).
class StoppedDistribution {
 public:
  StoppedDistribution(double d, double lambda, double x0) : d_(d), lambda_(lambda), x0_(x0) {
    detail::require_dimension(d);
    detail::require_state(x0, "x0");
    if (!(lambda > 1.0)) throw DomainError("stopped distribution needs lambda > 1");
    p_ = (d - 2) / (1 - std::pow(lambda, -(d - 2)));
  }

  /// Distribution under the optimal ratio for dimension d.
  static StoppedDistribution optimal(double d, double x0) {
    return StoppedDistribution(d, bessel_lambda(d), x0);
  }

  double dimension() const noexcept { return d_; }
  double lambda() const noexcept { return lambda_; }
  double x0() const noexcept { return x0_; }
  double exponent() const noexcept { return p_; }
  double upper() const noexcept { return lambda_ * x0_; }

  double cdf(double y) const {
    detail::require_state(y, "y");
    if (y >= upper()) return 1.0;
    return std::pow(y / upper(), p_);
  }
  double pdf(double y) const {
    detail::require_state(y, "y");
    if (y >= upper()) return 0.0;
    return p_ * std::pow(y, p_ - 1) / std::pow(upper(), p_);
  }
  double mean() const noexcept { return upper() * p_ / (p_ + 1); }
  double quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    return upper() * std::pow(q, 1 / p_);
  }

 private:
  double d_, lambda_, x0_, p_;
};

inline double stopped_cdf(const StoppedDistribution& dist, double y) { return dist.cdf(y); }
inline double stopped_pdf(const StoppedDistribution& dist, double y) { return dist.pdf(y); }
inline double stopped_mean(const StoppedDistribution& dist) { return dist.mean(); }

/// P_x0(X_tau <= y) = exp(- int_{f^-1(y)}^{x0} L'(z) / (L(f(z)) - L(z)) dz)
/// for a general boundary rule X >= f(I).
inline double stopped_cdf_general(const DiffusionModel& model, const Boundary& boundary,
                                  double x0, double y) {
  model.check_state(x0, "x0");
  detail::require_state(y, "y");
  if (!boundary.covers(x0)) throw DomainError("boundary grid does not cover x0");
  const double top = boundary(x0);
  if (!(y <= top)) throw DomainError("stopped_cdf_general needs 0 < y <= f(x0)");
  if (y == top) return 1.0;
  if (y < boundary.values().front())
    throw DomainError("f^-1(y) lies below the boundary grid; extend the grid downwards");
  const double lower = boundary.inverse(y);
  if (lower >= x0) return 1.0;
  auto integrand = [&](double z) {
    return model.scale_deriv(z) / (model.scale(boundary(z)) - model.scale(z));
  };
  const double exponent = integrate(integrand, lower, x0, {1e-14, 1e-12, 2000}).value;
  return std::exp(-exponent);
}

}  // namespace goldstop
