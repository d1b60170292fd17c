#pragma once

// Optimal stopping boundary for the running-minimum problem of a transient
// diffusion: the nonlinear ODE for i -> f(i), shots started on the singular
// curve h, their monotone limit (the minimal solution above h), and the value
// function generated by a boundary.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "goldstop/boundary.hpp"
#include "goldstop/diffusion.hpp"
#include "goldstop/errors.hpp"
#include "goldstop/ode.hpp"
#include "goldstop/quadrature.hpp"

namespace goldstop {

struct ShootingOptions {
  double handoff_c = 0.05;          // switch from the inverse to the direct equation here
  double divergence_factor = 1e6;   // f > factor * h(i) counts as escape to +inf
  double singular_tol = 1e-12;      // |c(i, f)| below this is the singular curve
  double convergence_tol = 1e-6;    // relative sup-norm between successive shots
  double monotone_tol = 1e-9;       // allowed relative decrease between shots
  OdeOptions ode{1e-9, 1e-12, 1e-3, 0.25, 200000};
};

namespace detail {

inline const QuadratureOptions kInnerQuad{0.0, 1e-12, 400};

// J(i, f) = int_i^f c_i'(i,y) [L(y) - L(i)] / (sigma^2(y) L'(y)) dy with
// c_i'(i,y) = 2 L(y) L'(i) / L(i)^2. Strictly negative for f > i.
inline double boundary_inner_integral(const DiffusionModel& model, double i, double f) {
  const double li = model.scale(i);
  const double dli = model.scale_deriv(i);
  const double coef = 2.0 * dli / (li * li);
  auto integrand = [&](double y) {
    const double ly = model.scale(y);
    const double s = model.volatility(y);
    return coef * ly * (ly - li) / (s * s * model.scale_deriv(y));
  };
  return integrate(integrand, i, f, kInnerQuad).value;
}

}  // namespace detail

/// Right-hand side Phi(i, f) of the boundary equation
///   f'(i) = - sigma^2(f) L'(f) / (c(i,f) [L(f) - L(i)]) * J(i, f).
/// Positive above h, singular on h.
inline double boundary_ode_rhs(const DiffusionModel& model, double i, double f,
                               double singular_tol = ShootingOptions{}.singular_tol) {
  model.check_state(i, "i");
  model.check_state(f, "f");
  if (!(i < f)) throw DomainError("boundary_ode_rhs needs i < f");
  const double li = model.scale(i);
  const double lf = model.scale(f);
  const double c = 1.0 - 2.0 * lf / li;
  if (std::abs(c) < singular_tol) {
    std::ostringstream msg;
    msg << "boundary ODE evaluated on the singular curve h: c(" << i << ", " << f << ") = " << c;
    throw SingularPointError(msg.str());
  }
  const double s = model.volatility(f);
  const double j = detail::boundary_inner_integral(model, i, f);
  return -s * s * model.scale_deriv(f) / (c * (lf - li)) * j;
}

/// di/df = 1 / Phi(i, f): the inverse form, regular (and zero) on h.
inline double boundary_ode_inverse_rhs(const DiffusionModel& model, double i, double f) {
  const double li = model.scale(i);
  const double lf = model.scale(f);
  const double c = 1.0 - 2.0 * lf / li;
  const double s = model.volatility(f);
  const double j = detail::boundary_inner_integral(model, i, f);
  return -c * (lf - li) / (s * s * model.scale_deriv(f) * j);
}

/// Whether f(i) > h(i) holds at every grid node.
inline bool is_admissible(const Boundary& boundary, const DiffusionModel& model) {
  const auto& g = boundary.grid();
  const auto& v = boundary.values();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!(v[k] > h_curve(model, g[k]))) return false;
  return true;
}

struct ShotTrajectory {
  double start = 0.0;          // i_n
  double handoff_i = 0.0;      // abscissa where the direct equation takes over
  double handoff_f = 0.0;
  std::vector<double> values;  // f at the requested grid nodes
};

namespace detail {

// Inverse phase: from (i_n, h(i_n)) integrate i as a function of log f
// until c(i, f) reaches the hand-off level.
inline std::pair<double, double> shoot_inverse_phase(const DiffusionModel& model, double i_n,
                                                     const ShootingOptions& opt) {
  const double f0 = h_curve(model, i_n);
  auto rhs = [&](double log_f, double i) {
    const double f = std::exp(log_f);
    return f * boundary_ode_inverse_rhs(model, i, f);
  };
  auto reached = [&](double log_f, double i) {
    return 1.0 - 2.0 * model.scale(std::exp(log_f)) / model.scale(i) >= opt.handoff_c;
  };
  OdeOptions ode = opt.ode;
  ode.max_step = std::min(ode.max_step, 0.01);
  ode.initial_step = std::min(ode.initial_step, 1e-4);
  double log_f_end = std::log(f0) + std::log(opt.divergence_factor);
  if (std::isfinite(model.upper_bound()))
    log_f_end = std::min(log_f_end, std::log(model.upper_bound()) - 1e-9);
  const auto run = integrate_rk45(rhs, std::log(f0), i_n, log_f_end, {}, reached, ode);
  if (!run.stopped) {
    std::ostringstream msg;
    msg << "inverse phase from i_n = " << i_n << " never reached c >= " << opt.handoff_c;
    throw NumericalError(msg.str());
  }
  return {run.y, std::exp(run.t)};
}

}  // namespace detail

/// The shot f_n through the singular point (i_n, h(i_n)), recorded on `grid`
/// (ascending, all nodes beyond the hand-off abscissa).
/// Throws DivergenceError when f escapes before grid.back().
inline ShotTrajectory shoot_on_grid(const DiffusionModel& model, double i_n,
                                    const std::vector<double>& grid,
                                    const ShootingOptions& opt = {}) {
  model.check_state(i_n, "i_n");
  if (grid.empty() || !(i_n < grid.front())) throw DomainError("shot start must precede the grid");
  ShotTrajectory shot;
  shot.start = i_n;
  std::tie(shot.handoff_i, shot.handoff_f) = detail::shoot_inverse_phase(model, i_n, opt);
  if (!(shot.handoff_i < grid.front())) {
    std::ostringstream msg;
    msg << "shot from i_n = " << i_n << " hands off at i = " << shot.handoff_i
        << ", beyond the first grid node " << grid.front() << "; start the shot lower";
    throw DomainError(msg.str());
  }

  std::vector<double> log_nodes(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) log_nodes[k] = std::log(grid[k]);
  auto rhs = [&](double log_i, double f) {
    const double i = std::exp(log_i);
    return i * boundary_ode_rhs(model, i, f, opt.singular_tol);
  };
  auto escaped = [&](double log_i, double f) {
    const double i = std::exp(log_i);
    return !(f < opt.divergence_factor * h_curve(model, i)) ||
           (std::isfinite(model.upper_bound()) && !(f < model.upper_bound()));
  };
  const auto run = integrate_rk45(rhs, std::log(shot.handoff_i), shot.handoff_f, log_nodes.back(),
                                  log_nodes, escaped, opt.ode);
  if (run.stopped) {
    const double at = std::exp(run.t);
    std::ostringstream msg;
    msg << "shot from i_n = " << i_n << " escapes to infinity near i = " << at;
    throw DivergenceError(msg.str(), at);
  }
  shot.values = run.node_values;
  return shot;
}

/// Shot f_n started on h at i_n, returned on a geometric grid of n_grid nodes
/// spanning [hand-off abscissa, i_max].
inline Boundary shoot_from_h(const DiffusionModel& model, double i_n, double i_max, int n_grid,
                             const ShootingOptions& opt = {}) {
  model.check_state(i_n, "i_n");
  model.check_state(i_max, "i_max");
  if (!(i_n < i_max)) throw DomainError("shoot_from_h needs i_n < i_max");
  if (n_grid < 16) throw DomainError("shoot_from_h needs n_grid >= 16");
  const auto [i_h, f_h] = detail::shoot_inverse_phase(model, i_n, opt);
  if (!(i_h < i_max)) throw DomainError("shot hands off beyond i_max");
  auto grid = geometric_grid(i_h, i_max, n_grid);
  // First node sits exactly on the hand-off point; nudge to keep the grid after it.
  grid.front() = i_h * (1.0 + 1e-12);
  auto shot = shoot_on_grid(model, i_n, grid, opt);
  return Boundary(std::move(grid), std::move(shot.values), provenance::Shot{i_n});
}

/// i_min * 10^-k for k = 1..n.
inline std::vector<double> default_shot_starts(double i_min, int n = 6) {
  std::vector<double> starts;
  for (int k = 1; k <= n; ++k) starts.push_back(i_min * std::pow(10.0, -k));
  return starts;
}

struct MinimalBoundaryReport {
  Boundary boundary;
  std::vector<ShotTrajectory> shots;     // in the order computed
  std::vector<double> successive_gaps;   // relative sup-norm between shot k and k+1
  bool converged = false;
};

/// Minimal solution above h as the monotone limit of shots started at
/// shot_starts (descending towards 0), sampled on a geometric grid over
/// [i_min, i_max]. Stops once successive shots agree to convergence_tol.
inline MinimalBoundaryReport minimal_boundary_report(const DiffusionModel& model, double i_min,
                                                     double i_max, int n_grid,
                                                     const std::vector<double>& shot_starts,
                                                     const ShootingOptions& opt = {}) {
  model.check_state(i_min, "i_min");
  model.check_state(i_max, "i_max");
  if (!(i_min < i_max)) throw DomainError("minimal_boundary needs i_min < i_max");
  if (n_grid < 16) throw DomainError("minimal_boundary needs n_grid >= 16");
  if (shot_starts.empty()) throw DomainError("minimal_boundary needs at least one shot start");
  for (std::size_t k = 0; k < shot_starts.size(); ++k) {
    if (!(shot_starts[k] > 0.0 && shot_starts[k] < i_min))
      throw DomainError("shot starts must lie in (0, i_min)");
    if (k > 0 && !(shot_starts[k] < shot_starts[k - 1]))
      throw DomainError("shot starts must be strictly descending");
  }
  const auto grid = geometric_grid(i_min, i_max, n_grid);

  std::vector<ShotTrajectory> shots;
  std::vector<double> gaps;
  bool converged = false;
  double last_blow_up = std::numeric_limits<double>::quiet_NaN();
  for (double start : shot_starts) {
    ShotTrajectory shot;
    try {
      shot = shoot_on_grid(model, start, grid, opt);
    } catch (const DivergenceError& e) {
      last_blow_up = e.blow_up_abscissa();
      if (!shots.empty()) {
        std::ostringstream msg;
        msg << "minimal solution is infinite on the grid: shot from " << start
            << " escapes near i = " << last_blow_up;
        throw DivergenceError(msg.str(), last_blow_up);
      }
      continue;
    }
    if (!shots.empty()) {
      const auto& prev = shots.back().values;
      double gap = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const double rel = (shot.values[k] - prev[k]) / prev[k];
        if (rel < -opt.monotone_tol) {
          std::ostringstream msg;
          msg << "shots are not increasing: f from " << start << " falls below the previous shot"
              << " at i = " << grid[k] << " (relative " << rel << ")";
          throw ConsistencyError(msg.str());
        }
        gap = std::max(gap, std::abs(rel));
      }
      gaps.push_back(gap);
      shots.push_back(std::move(shot));
      if (gap < opt.convergence_tol) {
        converged = true;
        break;
      }
    } else {
      shots.push_back(std::move(shot));
    }
  }
  if (shots.empty()) {
    std::ostringstream msg;
    msg << "minimal solution does not exist: every shot escapes to infinity (last near i = "
        << last_blow_up << ")";
    throw MinimalSolutionError(msg.str(), last_blow_up);
  }
  const int n_shots = static_cast<int>(shots.size());
  Boundary boundary(grid, shots.back().values, provenance::MinimalLimit{n_shots});
  return {std::move(boundary), std::move(shots), std::move(gaps), converged};
}

inline Boundary minimal_boundary(const DiffusionModel& model, double i_min, double i_max,
                                 int n_grid, const std::vector<double>& shot_starts,
                                 const ShootingOptions& opt = {}) {
  return minimal_boundary_report(model, i_min, i_max, n_grid, shot_starts, opt).boundary;
}

inline const QuadratureOptions kValueQuad{1e-15, 1e-12, 2000};

/// V_f(i, x) = - int_x^{level} c(i,y) [L(y) - L(x)] m(dy) for a stopping
/// level f(i) = level; zero when x >= level.
inline double value_for_level(const DiffusionModel& model, double i, double x, double level) {
  model.check_state(i, "i");
  model.check_state(x, "x");
  if (i > x) throw DomainError("value function needs i <= x");
  if (x >= level) return 0.0;
  const double li = model.scale(i);
  const double lx = model.scale(x);
  auto integrand = [&](double y) {
    const double ly = model.scale(y);
    return (1.0 - 2.0 * ly / li) * (ly - lx) * model.speed_density(y);
  };
  try {
    return -integrate(integrand, x, level, kValueQuad).value;
  } catch (const NumericalError& e) {
    std::ostringstream msg;
    msg << "value function at (i=" << i << ", x=" << x << "): " << e.what();
    throw NumericalError(msg.str());
  }
}

inline double value_function_numeric(const DiffusionModel& model, const Boundary& boundary,
                                     double i, double x) {
  return value_for_level(model, i, x, boundary(i));
}

struct FreeBoundaryResiduals {
  double pde;                // (L_X V)(i, x) + c(i, x) at an interior point
  double smooth_fit;         // V_x(i, f(i)-)
  double normal_reflection;  // V_i(i, i+)
};

/// Finite-difference checks of the free-boundary system for the value function
/// generated by `boundary`. Steps are 1e-3 (1 + x), shrunk to stay inside the
/// region; the one-sided limits use second-order one-sided stencils.
inline FreeBoundaryResiduals free_boundary_residuals(const DiffusionModel& model,
                                                     const Boundary& boundary, double i,
                                                     double x) {
  model.check_state(i, "i");
  model.check_state(x, "x");
  const double fi = boundary(i);
  if (!(i < x && x < fi)) throw DomainError("free_boundary_residuals needs i < x < f(i)");
  auto V = [&](double ii, double xx) { return value_for_level(model, ii, xx, boundary(ii)); };

  FreeBoundaryResiduals r{};
  {
    const double h = std::min({1e-3 * (1.0 + x), 0.5 * (x - i), 0.5 * (fi - x)});
    const double vp = V(i, x + h), v0 = V(i, x), vm = V(i, x - h);
    const double vx = (vp - vm) / (2 * h);
    const double vxx = (vp - 2 * v0 + vm) / (h * h);
    const double s = model.volatility(x);
    r.pde = model.drift(x) * vx + 0.5 * s * s * vxx + c_value(model, i, x);
  }
  {
    const double h = std::min(1e-3 * (1.0 + fi), 0.25 * (fi - i));
    r.smooth_fit = (3 * V(i, fi) - 4 * V(i, fi - h) + V(i, fi - 2 * h)) / (2 * h);
  }
  {
    double h = 1e-3 * (1.0 + i);
    if (i - 2 * h < boundary.i_min()) h = 0.5 * (i - boundary.i_min());
    if (!(h > 0.0)) throw DomainError("normal reflection check needs grid room below i");
    r.normal_reflection = (3 * V(i, i) - 4 * V(i - h, i) + V(i - 2 * h, i)) / (2 * h);
  }
  return r;
}

}  // namespace goldstop
