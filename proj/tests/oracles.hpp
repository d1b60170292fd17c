#pragma once

// Reference computations for the test suite, written independently of the
// library code paths they check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

// Characteristic function written out term by term (no shared helpers).
inline double characteristic(double d, double lam) {
  if (d == 4.0) return lam * lam * lam * lam - 5.0 * lam * lam + 4.0 * std::log(lam) + 4.0;
  return std::exp(d * std::log(lam)) - (1.0 + d) * lam * lam +
         4.0 / (4.0 - d) * std::exp((4.0 - d) * std::log(lam)) - (d - 2.0) * (d - 2.0) / (4.0 - d);
}

// Plain bisection on F over (2^(1/(d-2)), 64) to width 1e-14.
inline double lambda_bisection(double d) {
  double lo = std::exp(std::log(2.0) / (d - 2.0)) * (1.0 + 1e-12);
  double hi = 64.0;
  for (int k = 0; k < 400 && hi - lo > 1e-14; ++k) {
    const double mid = 0.5 * (lo + hi);
    (characteristic(d, mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Value of the ratio rule for Bessel(d) by Simpson on the defining integral
// V = -int_x^{lam i} (1 - 2 (i/y)^(d-2)) (y^(2-d) - x^(2-d)) (-1) 2/(d-2) y^(d-1) dy.
inline double bessel_ratio_value(double d, double lam, double i, double x) {
  if (x >= lam * i) return 0.0;
  auto g = [&](double y) {
    const double c = 1.0 - 2.0 * std::pow(i / y, d - 2.0);
    const double dl = std::pow(x, 2.0 - d) - std::pow(y, 2.0 - d);  // L(y) - L(x)
    return c * dl * 2.0 / (d - 2.0) * std::pow(y, d - 1.0);
  };
  return -simpson(g, x, lam * i);
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Small deterministic generator for property tests.
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : s_(seed * 6364136223846793005ULL + 1442695040888963407ULL) {}
  double uniform(double lo, double hi) {
    s_ = s_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return lo + (hi - lo) * static_cast<double>(s_ >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t s_;
};

// Binet's formula rounded; exact in double precision for n <= 70.
inline std::uint64_t fibonacci_binet(int n) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  return static_cast<std::uint64_t>(std::llround(std::pow(phi, n) / std::sqrt(5.0)));
}

}  // namespace oracle
