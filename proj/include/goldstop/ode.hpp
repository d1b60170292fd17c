#pragma once

// Scalar explicit Runge-Kutta 5(4) integrator (Dormand-Prince coefficients)
// with error-per-step control. Output nodes are hit exactly by clamping the
// step, so recorded values carry no interpolation error.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <span>
#include <vector>

#include "goldstop/errors.hpp"

namespace goldstop {

struct OdeOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double initial_step = 1e-4;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 200000;
};

struct OdeRun {
  double t = 0.0;
  double y = 0.0;
  bool stopped = false;      // the stop predicate fired
  std::vector<double> node_values;  // one per output node reached, in order
  long accepted_steps = 0;
  long rejected_steps = 0;
};

/// Integrates y' = rhs(t, y) from (t0, y0) towards t_end > t0.
/// `nodes` must be ascending and lie in [t0, t_end]; the solution is recorded there.
/// `stop(t, y)` is consulted after every accepted step and ends the run when true.
template <class Rhs, class Stop>
OdeRun integrate_rk45(Rhs&& rhs, double t0, double y0, double t_end, std::span<const double> nodes,
                      Stop&& stop, const OdeOptions& opts = {}) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  OdeRun run;
  run.t = t0;
  run.y = y0;
  std::size_t next_node = 0;
  while (next_node < nodes.size() && nodes[next_node] <= t0) {
    run.node_values.push_back(y0);
    ++next_node;
  }
  if (stop(run.t, run.y)) {
    run.stopped = true;
    return run;
  }

  double h = std::min(opts.initial_step, opts.max_step);
  double k1 = rhs(run.t, run.y);
  while (run.t < t_end) {
    if (run.accepted_steps + run.rejected_steps > opts.max_steps)
      throw NumericalError("ODE integration exceeded the step budget");
    double target = t_end;
    if (next_node < nodes.size()) target = std::min(target, nodes[next_node]);
    bool clamped = false;
    double step = std::min(h, opts.max_step);
    if (run.t + step >= target) {
      step = target - run.t;
      clamped = true;
    }
    if (step <= std::abs(run.t) * 1e-15) {
      std::ostringstream msg;
      msg << "ODE step size underflow at t = " << run.t << ", y = " << run.y;
      throw NumericalError(msg.str());
    }

    const double t = run.t, y = run.y;
    const double k2 = rhs(t + c2 * step, y + step * a21 * k1);
    const double k3 = rhs(t + c3 * step, y + step * (a31 * k1 + a32 * k2));
    const double k4 = rhs(t + c4 * step, y + step * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 =
        rhs(t + c5 * step, y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double k6 =
        rhs(t + step, y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double y_new = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double k7 = std::isfinite(y_new) ? rhs(t + step, y_new) : y_new;
    const double err_est =
        step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale = opts.abs_tol + opts.rel_tol * std::max(std::abs(y), std::abs(y_new));
    const double err = std::abs(err_est) / scale;

    if (!std::isfinite(err) || !std::isfinite(y_new)) {
      ++run.rejected_steps;
      h = 0.25 * step;
      continue;
    }
    if (err > 1.0) {
      ++run.rejected_steps;
      h = step * std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }

    ++run.accepted_steps;
    run.t = clamped ? target : t + step;
    run.y = y_new;
    k1 = k7;  // first-same-as-last
    const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
    // A step shortened to land on a node says nothing about the achievable size.
    h = clamped ? std::max(h, step * grow) : step * grow;
    while (next_node < nodes.size() && nodes[next_node] <= run.t) {
      run.node_values.push_back(run.y);
      ++next_node;
    }
    if (stop(run.t, run.y)) {
      run.stopped = true;
      return run;
    }
  }
  return run;
}

}  // namespace goldstop
