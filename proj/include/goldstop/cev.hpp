#pragma once

// CEV asset prices as reciprocal powers of Bessel processes:
// Z = K(X) = c_sigma X^(2-d) solves dZ = sigma Z^(1+beta) dB with
// beta = 1/(d-2) and sigma = (d-2)/c_sigma^(1/(d-2)). The running minimum of X
// maps to the running maximum S of Z, so X >= lambda I reads S >= lambda^(d-2) Z.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "goldstop/bessel.hpp"
#include "goldstop/diffusion.hpp"
#include "goldstop/errors.hpp"
#include "goldstop/rng.hpp"
#include "goldstop/simulator.hpp"
#include "goldstop/stats.hpp"

namespace goldstop {

class CevModel {
 public:
  CevModel(double d, double c_sigma) : d_(d), c_sigma_(c_sigma) {
    detail::require_dimension(d);
    if (!(c_sigma > 0.0) || !std::isfinite(c_sigma)) throw DomainError("c_sigma must be positive");
    beta_ = 1.0 / (d - 2.0);
    sigma_ = (d - 2.0) / std::pow(c_sigma, beta_);
  }

  double dimension() const noexcept { return d_; }
  double c_sigma() const noexcept { return c_sigma_; }
  double sigma() const noexcept { return sigma_; }
  double beta() const noexcept { return beta_; }
  DiffusionModel source() const { return make_bessel_model(d_); }

 private:
  double d_, c_sigma_, sigma_ = 0.0, beta_ = 0.0;
};

/// Z = c_sigma x^(2-d); strictly decreasing in x.
inline double cev_transform(const CevModel& cev, double x) {
  detail::require_state(x, "x");
  return cev.c_sigma() * std::pow(x, 2.0 - cev.dimension());
}

inline double cev_inverse_transform(const CevModel& cev, double z) {
  detail::require_state(z, "z");
  return std::pow(z / cev.c_sigma(), 1.0 / (2.0 - cev.dimension()));
}

/// lambda^(d-2): the drawdown multiple S/Z at which the optimal rule sells.
inline double cev_rule_threshold(const CevModel& cev) {
  return std::pow(bessel_lambda(cev.dimension()), cev.dimension() - 2.0);
}

/// 1/phi, the share of the drawdown S - Z in S when the d = 3 rule triggers.
inline double retracement_fraction() { return 1.0 / (bessel_lambda(3.0) - 1.0); }

/// F_n with F_0 = 0, F_1 = 1, exact for n <= 93.
inline std::uint64_t fibonacci(int n) {
  if (n < 0 || n > 93) throw DomainError("fibonacci index must lie in [0, 93]");
  std::uint64_t a = 0, b = 1;
  for (int k = 0; k < n; ++k) {
    const std::uint64_t next = a + b;
    a = b;
    b = next;
  }
  return a;
}

struct FibonacciLevels {
  double shallow;   // F_n / F_{n+3} -> phi^-3 (23.6%)
  double moderate;  // F_n / F_{n+2} -> phi^-2 (38.2%)
  double golden;    // F_n / F_{n+1} -> phi^-1 (61.8%)
};

/// Retracement ratios from exact Fibonacci numbers. By Binet's formula
/// F_n = (phi^n - psi^n)/sqrt(5) with psi = -1/phi, so each ratio tends to
/// its power of 1/phi with an alternating error of order phi^-2n.
inline FibonacciLevels fibonacci_levels(int n) {
  if (n < 2 || n > 90) throw DomainError("fibonacci_levels needs 2 <= n <= 90");
  const auto fn = static_cast<double>(fibonacci(n));
  return {fn / static_cast<double>(fibonacci(n + 3)), fn / static_cast<double>(fibonacci(n + 2)),
          fn / static_cast<double>(fibonacci(n + 1))};
}

namespace detail {
inline StoppingRule with_cev_scale(const StoppingRule& rule, const CevModel& cev) {
  const auto* dd = std::get_if<rules::Drawdown>(&rule.variant());
  if (!dd) throw DomainError("CEV objective needs a drawdown rule");
  return StoppingRule::drawdown(dd->kappa, cev.c_sigma());
}
}  // namespace detail

/// Objective of a drawdown rule on Z, computed on the Bessel source started at
/// x0 = K^-1(z0) where the objective is expressed through (I, X).
inline MonteCarloEstimate simulate_cev_objective(const CevModel& cev, double z0,
                                                 const StoppingRule& rule, std::size_t n_paths,
                                                 std::uint64_t seed,
                                                 const SimulationConfig& cfg = {}) {
  const double x0 = cev_inverse_transform(cev, z0);
  return estimate_objective(cev.source(), x0, detail::with_cev_scale(rule, cev), n_paths, seed,
                            cfg);
}

/// Drawdown sweep under common random numbers (one rule per kappa).
inline RuleComparison compare_cev_rules(const CevModel& cev, double z0,
                                        const std::vector<double>& kappas, std::size_t n_paths,
                                        std::uint64_t seed, const SimulationConfig& cfg = {}) {
  std::vector<StoppingRule> rules;
  for (double k : kappas) rules.push_back(StoppingRule::drawdown(k, cev.c_sigma()));
  return compare_rules(cev.source(), cev_inverse_transform(cev, z0), rules, n_paths, seed, cfg);
}

struct CevStoppedSample {
  std::vector<double> sorted_z;  // Z at the stopping time, ascending
  std::size_t n_excluded = 0;    // truncated or absorbed paths
};

/// Z at the stopping time of drawdown(kappa), via transformed Bessel paths.
inline CevStoppedSample sample_cev_transformed(const CevModel& cev, double z0, double kappa,
                                               std::size_t n_paths, std::uint64_t seed,
                                               const SimulationConfig& cfg = {}) {
  const auto cmp = compare_rules(cev.source(), cev_inverse_transform(cev, z0),
                                 {StoppingRule::drawdown(kappa, cev.c_sigma())}, n_paths, seed, cfg);
  CevStoppedSample s;
  for (const auto& o : cmp.outcomes.front()) {
    if (o.truncated)
      ++s.n_excluded;
    else
      s.sorted_z.push_back(cev_transform(cev, o.x_stop));
  }
  std::sort(s.sorted_z.begin(), s.sorted_z.end());
  return s;
}

inline constexpr double kCevAbsorbingGuard = 1e-10;

/// Z at the stopping time of drawdown(kappa), simulating dZ = sigma Z^(1+beta) dB
/// directly by Euler. The step is shortened to step / max(1, (sigma Z^beta)^2)
/// so the relative volatility per step never exceeds that at Z sigma^beta = 1;
/// Z at or below the absorbing guard is absorbed (and the path excluded).
inline CevStoppedSample sample_cev_direct(const CevModel& cev, double z0, double kappa,
                                          std::size_t n_paths, std::uint64_t seed,
                                          const SimulationConfig& cfg = {}) {
  detail::require_state(z0, "z0");
  detail::validate_run(z0, cfg);
  if (!(kappa > 1.0)) throw DomainError("drawdown rule needs kappa > 1");
  std::vector<double> z_stop(n_paths, std::numeric_limits<double>::quiet_NaN());
  const double sigma = cev.sigma(), beta = cev.beta();
  detail::parallel_for(n_paths, cfg.threads, [&](std::size_t p) {
    PathStream stream(seed ^ 0x5ce7a11d0ca1ULL, p);
    double z = z0, s = z0, t = 0.0;
    while (t < cfg.horizon) {
      const double local = sigma * std::pow(z, beta);
      const double dt = std::min(cfg.step / std::max(1.0, local * local), cfg.horizon - t);
      z += local * z * std::sqrt(dt) * stream.normal();
      t += dt;
      if (z <= kCevAbsorbingGuard) return;
      s = std::max(s, z);
      if (s >= kappa * z) {
        z_stop[p] = z;
        return;
      }
    }
  });
  CevStoppedSample out;
  for (double z : z_stop) {
    if (std::isnan(z))
      ++out.n_excluded;
    else
      out.sorted_z.push_back(z);
  }
  std::sort(out.sorted_z.begin(), out.sorted_z.end());
  return out;
}

struct MartingaleDiagnostic {
  std::vector<double> times;
  std::vector<MonteCarloEstimate> mean_z;  // E_z0 Z_T per time
};

/// Monte Carlo E_z0 Z_T from exact Bessel transitions X_T given X_0 = K^-1(z0).
/// A strict local martingale shows E Z_T decreasing in T; this is reported as
/// a trend without a pass/fail threshold.
inline MartingaleDiagnostic strict_local_martingale_diagnostic(const CevModel& cev, double z0,
                                                               const std::vector<double>& times,
                                                               std::size_t n_paths,
                                                               std::uint64_t seed) {
  const double x0 = cev_inverse_transform(cev, z0);
  const double d = cev.dimension();
  MartingaleDiagnostic diag;
  diag.times = times;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double T = times[k];
    if (!(T > 0.0)) throw DomainError("diagnostic times must be positive");
    std::vector<double> z(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
      PathStream stream(seed + k, p);
      const double a = x0 + std::sqrt(T) * stream.normal();
      const double x = std::sqrt(a * a + T * stream.chi_square(d - 1.0));
      z[p] = cev_transform(cev, x);
    }
    const auto m = sample_moments(z);
    MonteCarloEstimate e;
    e.mean = m.mean;
    e.std_error = m.std_error;
    e.n_paths = n_paths;
    e.seed = seed + k;
    e.step = T;
    e.rule_id = "E[Z_T]";
    diag.mean_z.push_back(e);
  }
  return diag;
}

}  // namespace goldstop
