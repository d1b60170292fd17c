#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature with a global error estimate,
// in the style of QUADPACK's QAG.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "goldstop/errors.hpp"

namespace goldstop {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_intervals = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

namespace detail {

// Kronrod abscissae (positive half, descending) and weights for the 15-point rule;
// the even-indexed nodes carry the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gk15(F& f, double a, double b, int& evals) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double sum = f(centre - dx) + f(centre + dx);
    kronrod += kKronrodWeights[j] * sum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }
  evals += 15;
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Integrates f over [a, b]. Reversed limits flip the sign; a == b gives 0.
/// Throws NumericalError when the integrand produces non-finite values or the
/// tolerance cannot be met within max_intervals subdivisions.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opts = {}) {
  if (a == b) return {};
  if (a > b) {
    auto r = integrate(f, b, a, opts);
    r.value = -r.value;
    return r;
  }
  int evals = 0;
  std::priority_queue<detail::Segment> heap;
  auto first = detail::gk15(f, a, b, evals);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  int intervals = 1;
  while (total_err > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
    if (!std::isfinite(total) || !std::isfinite(total_err)) break;
    if (intervals >= opts.max_intervals) {
      // Accept the estimate if it is merely limited by floating-point resolution.
      if (total_err <= 1e3 * std::numeric_limits<double>::epsilon() * std::abs(total)) break;
      std::ostringstream msg;
      msg << "quadrature on [" << a << ", " << b << "] did not converge: estimate " << total
          << ", error " << total_err << " after " << intervals << " intervals";
      throw NumericalError(msg.str());
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;  // interval cannot be split further
    }
    auto left = detail::gk15(f, worst.a, mid, evals);
    auto right = detail::gk15(f, mid, worst.b, evals);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  if (!std::isfinite(total)) {
    std::ostringstream msg;
    msg << "quadrature on [" << a << ", " << b << "] produced a non-finite value";
    throw NumericalError(msg.str());
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  double value = 0.0, err = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {value, err, evals};
}

/// Integrates over [a, b] split at an interior point (a kink of the integrand).
template <class F>
QuadratureResult integrate_split(F&& f, double a, double split, double b,
                                 const QuadratureOptions& opts = {}) {
  split = std::clamp(split, std::min(a, b), std::max(a, b));
  auto left = integrate(f, a, split, opts);
  auto right = integrate(f, split, b, opts);
  return {left.value + right.value, left.error + right.error,
          left.evaluations + right.evaluations};
}

}  // namespace goldstop
