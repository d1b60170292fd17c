#pragma once

#include <cmath>
#include <sstream>
#include <utility>

#include "goldstop/errors.hpp"

namespace goldstop {

struct RootResult {
  double root = 0.0;
  int iterations = 0;
};

/// Newton's method safeguarded by a maintained sign-change bracket [lo, hi].
/// Falls back to bisection whenever the Newton iterate leaves the bracket or
/// fails to halve the bracket width. Stops when the step is below abs_tol.
template <class F, class DF>
RootResult newton_bracketed(F&& f, DF&& df, double lo, double hi, double abs_tol = 1e-12,
                            int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return {lo, 0};
  if (fhi == 0.0) return {hi, 0};
  if ((flo < 0.0) == (fhi < 0.0)) {
    std::ostringstream msg;
    msg << "root not bracketed by [" << lo << ", " << hi << "]";
    throw DomainError(msg.str());
  }
  // Orient so that f(lo) < 0 < f(hi).
  if (flo > 0.0) std::swap(lo, hi);

  double x = 0.5 * (lo + hi);
  double dx_old = std::abs(hi - lo);
  double dx = dx_old;
  double fx = f(x);
  double dfx = df(x);
  for (int it = 1; it <= max_iter; ++it) {
    const bool newton_leaves = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0.0;
    const bool newton_slow = std::abs(2.0 * fx) > std::abs(dx_old * dfx);
    dx_old = dx;
    if (newton_leaves || newton_slow || dfx == 0.0) {
      dx = 0.5 * (hi - lo);
      x = lo + dx;
    } else {
      dx = fx / dfx;
      x -= dx;
    }
    if (std::abs(dx) <= abs_tol) return {x, it};
    fx = f(x);
    dfx = df(x);
    if (fx == 0.0) return {x, it};
    if (fx < 0.0)
      lo = x;
    else
      hi = x;
  }
  throw NumericalError("bracketed Newton iteration did not converge");
}

/// Plain bisection on a sign-change bracket, to an absolute width of abs_tol.
template <class F>
RootResult bisect(F&& f, double lo, double hi, double abs_tol = 1e-13, int max_iter = 400) {
  double flo = f(lo);
  if (flo == 0.0) return {lo, 0};
  const double fhi = f(hi);
  if (fhi == 0.0) return {hi, 0};
  if ((flo < 0.0) == (fhi < 0.0)) throw DomainError("bisection: root not bracketed");
  int it = 0;
  while (std::abs(hi - lo) > abs_tol && it < max_iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = f(mid);
    ++it;
    if (fm == 0.0) return {mid, it};
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return {0.5 * (lo + hi), it};
}

}  // namespace goldstop
