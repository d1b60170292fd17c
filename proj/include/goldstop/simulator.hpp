#pragma once

// Monte Carlo engine for the running-minimum stopping problem. Paths of the
// diffusion are simulated on a time grid, the running minimum I and the
// objective A_t = int_0^t c(I_s, X_s) ds are tracked, and any number of
// stopping rules are evaluated on the same path (common random numbers).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "goldstop/bessel.hpp"
#include "goldstop/boundary.hpp"
#include "goldstop/diffusion.hpp"
#include "goldstop/errors.hpp"
#include "goldstop/rng.hpp"
#include "goldstop/stats.hpp"

namespace goldstop {

namespace rules {
struct BoundaryRule {
  std::shared_ptr<const Boundary> boundary;
};
struct Ratio {
  double lambda;
};
// Drawdown of Z = K(X) = c_sigma X^(2-d) from its running maximum S = K(I):
// stop once S >= kappa Z.
struct Drawdown {
  double kappa;
  double c_sigma;
};
struct FixedTime {
  double time;
};
}  // namespace rules

class StoppingRule {
 public:
  using Variant = std::variant<rules::BoundaryRule, rules::Ratio, rules::Drawdown, rules::FixedTime>;

  static StoppingRule boundary(Boundary b) {
    return StoppingRule(rules::BoundaryRule{std::make_shared<const Boundary>(std::move(b))});
  }
  static StoppingRule ratio(double lambda) {
    if (!(lambda > 1.0) || !std::isfinite(lambda))
      throw DomainError("ratio rule needs lambda > 1");
    return StoppingRule(rules::Ratio{lambda});
  }
  static StoppingRule drawdown(double kappa, double c_sigma = 1.0) {
    if (!(kappa > 1.0) || !std::isfinite(kappa)) throw DomainError("drawdown rule needs kappa > 1");
    if (!(c_sigma > 0.0)) throw DomainError("drawdown rule needs c_sigma > 0");
    return StoppingRule(rules::Drawdown{kappa, c_sigma});
  }
  static StoppingRule fixed_time(double time) {
    if (!(time >= 0.0) || !std::isfinite(time)) throw DomainError("fixed-time rule needs T >= 0");
    return StoppingRule(rules::FixedTime{time});
  }

  const Variant& variant() const noexcept { return rule_; }

  std::string id() const {
    char buf[64];
    return std::visit(
        [&](const auto& r) -> std::string {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, rules::BoundaryRule>) {
            return "boundary[" + describe(r.boundary->provenance()) + "]";
          } else if constexpr (std::is_same_v<T, rules::Ratio>) {
            std::snprintf(buf, sizeof buf, "ratio(%.10g)", r.lambda);
            return buf;
          } else if constexpr (std::is_same_v<T, rules::Drawdown>) {
            std::snprintf(buf, sizeof buf, "drawdown(%.10g)", r.kappa);
            return buf;
          } else {
            std::snprintf(buf, sizeof buf, "fixed_time(%.10g)", r.time);
            return buf;
          }
        },
        rule_);
  }

 private:
  explicit StoppingRule(Variant v) : rule_(std::move(v)) {}
  Variant rule_;
};

enum class Scheme {
  euler,  // Euler-Maruyama with a drift guard
  exact   // squared-Bessel transition (Bessel models only)
};

enum class MinimumMonitor {
  grid,   // running minimum over the time grid only
  bridge  // also samples the minimum of the Brownian bridge within each step
};

struct SimulationConfig {
  double step = 1e-4;
  double horizon = 50.0;
  Scheme scheme = Scheme::euler;
  MinimumMonitor monitor = MinimumMonitor::bridge;
  unsigned threads = 1;
};

struct PathOutcome {
  double stop_time = 0.0;
  double x_stop = 0.0;
  double i_stop = 0.0;
  double objective_integral = 0.0;  // int_0^tau c(I_t, X_t) dt
  double theta_proxy = 0.0;         // time of the discrete running minimum
  long n_steps = 0;
  bool truncated = false;
};

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  double step = 0.0;
  std::string rule_id;
  std::size_t n_truncated = 0;
  bool truncation_warning = false;  // more than 1% of paths hit the horizon
};

namespace detail {

inline constexpr double kUnderflow = 1e-12;

// L(x)/L(i) specialised for the hot loop.
class ScaleRatio {
 public:
  explicit ScaleRatio(const DiffusionModel& model) : model_(&model) {
    if (model.is_bessel()) {
      power_ = model.dimension() - 2.0;
      const double r = std::round(power_);
      integer_ = (r == power_ && r >= 1.0 && r <= 8.0) ? static_cast<int>(r) : 0;
    }
  }
  double operator()(double x, double i) const {
    if (!model_->is_bessel()) return model_->scale(x) / model_->scale(i);
    const double q = i / x;
    if (integer_ == 1) return q;
    if (integer_ == 2) return q * q;
    if (integer_ > 0) {
      double out = q;
      for (int k = 1; k < integer_; ++k) out *= q;
      return out;
    }
    return std::pow(q, power_);
  }

 private:
  const DiffusionModel* model_;
  double power_ = 0.0;
  int integer_ = 0;
};

// One increment of the state process over dt.
class Stepper {
 public:
  Stepper(const DiffusionModel& model, Scheme scheme) : model_(&model), scheme_(scheme) {
    if (scheme == Scheme::exact && !model.is_bessel())
      throw UnsupportedOperation("the exact scheme is available for Bessel models only");
    if (model.is_bessel()) {
      d_ = model.dimension();
      half_dm1_ = 0.5 * (d_ - 1.0);
    }
  }

  // Advances x over dt. When `low` is given it receives the smallest value of
  // the path over the step, sampled from the Brownian bridge between the
  // endpoints with the local volatility frozen.
  double advance(double x, double dt, PathStream& rng, double* low = nullptr) const {
    if (scheme_ == Scheme::exact) {
      const double sdt = std::sqrt(dt);
      const double a = x + sdt * rng.normal();
      const double next = std::sqrt(a * a + dt * rng.chi_square(d_ - 1.0));
      if (low) *low = bridge_minimum(x, next, dt, rng);
      return next;
    }
    // Euler with a guard: refine while the drift move exceeds 10% of the state.
    int pieces = 1;
    while (std::abs(drift(x)) * dt / pieces > 0.1 * x && pieces < (1 << 20)) pieces *= 2;
    const double h = dt / pieces;
    const double sh = std::sqrt(h);
    if (low) *low = x;
    for (int k = 0; k < pieces; ++k) {
      const double prev = x;
      x = std::abs(x + drift(x) * h + vol(x) * sh * rng.normal());
      if (x < kUnderflow) {
        std::ostringstream msg;
        msg << "state underflow below " << kUnderflow << " in the Euler scheme";
        throw NumericalError(msg.str());
      }
      if (low) *low = std::min(*low, bridge_minimum(prev, x, h, rng));
    }
    return x;
  }

  // Minimum of a Brownian bridge from a to b over time h with volatility
  // vol(min(a, b)); falls back to min(a, b) if the sample leaves (0, inf).
  double bridge_minimum(double a, double b, double h, PathStream& rng) const {
    const double s = vol(std::min(a, b));
    const double m =
        0.5 * (a + b - std::sqrt((b - a) * (b - a) - 2.0 * s * s * h * std::log(rng.uniform())));
    return m > 0.0 ? m : std::min(a, b);
  }

 private:
  double drift(double x) const {
    return model_->is_bessel() ? half_dm1_ / x : model_->drift(x);
  }
  double vol(double x) const { return model_->is_bessel() ? 1.0 : model_->volatility(x); }

  const DiffusionModel* model_;
  Scheme scheme_;
  double d_ = 0.0;
  double half_dm1_ = 0.0;
};

// Rule trigger with the model-dependent pieces resolved once.
class Trigger {
 public:
  Trigger(const StoppingRule& rule, const DiffusionModel& model) : rule_(&rule.variant()) {
    if (const auto* dd = std::get_if<rules::Drawdown>(rule_)) {
      if (!model.is_bessel())
        throw UnsupportedOperation("drawdown rules need a Bessel source model");
      expo_ = 2.0 - model.dimension();
      c_sigma_ = dd->c_sigma;
    }
  }

  bool operator()(double t, double x, double i) const {
    switch (rule_->index()) {
      case 0: {
        const auto& b = *std::get<rules::BoundaryRule>(*rule_).boundary;
        return x >= boundary_level(b, i);
      }
      case 1:
        return x >= std::get<rules::Ratio>(*rule_).lambda * i;
      case 2: {
        const double z = c_sigma_ * std::pow(x, expo_);
        const double s = c_sigma_ * std::pow(i, expo_);
        return s >= std::get<rules::Drawdown>(*rule_).kappa * z;
      }
      default:
        return t >= std::get<rules::FixedTime>(*rule_).time;
    }
  }

  // Outside its grid a boundary is continued with constant f(i)/i.
  static double boundary_level(const Boundary& b, double i) {
    if (i < b.i_min()) return i * b.values().front() / b.i_min();
    if (i > b.i_max()) return i * b.values().back() / b.i_max();
    return b(i);
  }

 private:
  const StoppingRule::Variant* rule_;
  double expo_ = 0.0;
  double c_sigma_ = 1.0;
};

inline void validate_run(double x0, const SimulationConfig& cfg) {
  require_state(x0, "x0");
  if (!(cfg.step > 0.0) || !std::isfinite(cfg.step)) throw DomainError("step must be positive");
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon))
    throw DomainError("horizon must be positive");
}

// Runs fn(k) for k in [0, n) on `threads` workers with static blocks.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t lo = n * w / threads;
    const std::size_t hi = n * (w + 1) / threads;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t k = lo; k < hi; ++k) fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Simulates one path from x0 and evaluates every rule on it. Rules see the
/// same increments; each outcome freezes at that rule's first trigger (or at
/// the horizon, flagged truncated). The objective uses the trapezoidal
/// average of c over each step. With the bridge monitor the running minimum
/// includes the sampled minimum within each step.
inline std::vector<PathOutcome> simulate_path_multi(const DiffusionModel& model, double x0,
                                                    std::span<const StoppingRule> rules,
                                                    const SimulationConfig& cfg,
                                                    PathStream& stream) {
  detail::validate_run(x0, cfg);
  model.check_state(x0, "x0");
  const detail::Stepper stepper(model, cfg.scheme);
  const detail::ScaleRatio ratio(model);
  std::vector<detail::Trigger> triggers;
  triggers.reserve(rules.size());
  for (const auto& r : rules) triggers.emplace_back(r, model);

  std::vector<PathOutcome> out(rules.size());
  std::vector<char> alive(rules.size(), 1);
  std::size_t n_alive = rules.size();

  double x = x0, running_min = x0, objective = 0.0, theta = 0.0, t = 0.0;
  double c_prev = 1.0 - 2.0 * ratio(x, running_min);
  long n = 0;
  auto record = [&](std::size_t k, bool truncated) {
    out[k] = {t, x, running_min, objective, theta, n, truncated};
    alive[k] = 0;
    --n_alive;
  };
  for (std::size_t k = 0; k < rules.size(); ++k)
    if (triggers[k](t, x, running_min)) record(k, false);

  const bool bridge = cfg.monitor == MinimumMonitor::bridge;
  const long n_max = static_cast<long>(std::ceil(cfg.horizon / cfg.step - 1e-9));
  while (n_alive > 0 && n < n_max) {
    double low = x;
    x = stepper.advance(x, cfg.step, stream, bridge ? &low : nullptr);
    ++n;
    t = static_cast<double>(n) * cfg.step;
    low = std::min(low, x);
    if (low < running_min) {
      running_min = low;
      theta = t;
    }
    const double c = 1.0 - 2.0 * ratio(x, running_min);
    objective += 0.5 * (c_prev + c) * cfg.step;
    c_prev = c;
    for (std::size_t k = 0; k < rules.size(); ++k)
      if (alive[k] && triggers[k](t, x, running_min)) record(k, false);
  }
  for (std::size_t k = 0; k < rules.size(); ++k)
    if (alive[k]) record(k, true);
  return out;
}

inline PathOutcome simulate_path(const DiffusionModel& model, double x0, const StoppingRule& rule,
                                 const SimulationConfig& cfg, PathStream& stream) {
  return simulate_path_multi(model, x0, std::span<const StoppingRule>(&rule, 1), cfg, stream)
      .front();
}

/// Paired comparison of several rules under common random numbers.
struct RuleComparison {
  std::vector<MonteCarloEstimate> estimates;
  std::vector<std::vector<PathOutcome>> outcomes;  // [rule][path]

  std::vector<double> objectives(std::size_t rule) const {
    std::vector<double> v(outcomes[rule].size());
    for (std::size_t p = 0; p < v.size(); ++p) v[p] = outcomes[rule][p].objective_integral;
    return v;
  }

  /// Mean and standard error of objective(a) - objective(b), path by path.
  SampleMoments paired_difference(std::size_t a, std::size_t b) const {
    std::vector<double> diff(outcomes[a].size());
    for (std::size_t p = 0; p < diff.size(); ++p)
      diff[p] = outcomes[a][p].objective_integral - outcomes[b][p].objective_integral;
    return sample_moments(diff);
  }

  /// sqrt(se_a^2 + se_b^2): the unpaired standard error of a difference.
  double pooled_std_error(std::size_t a, std::size_t b) const {
    return std::hypot(estimates[a].std_error, estimates[b].std_error);
  }
};

namespace detail {

inline MonteCarloEstimate summarise(std::span<const PathOutcome> outcomes, std::uint64_t seed,
                                    double step, std::string rule_id) {
  std::vector<double> obj(outcomes.size());
  std::size_t truncated = 0;
  for (std::size_t p = 0; p < outcomes.size(); ++p) {
    obj[p] = outcomes[p].objective_integral;
    truncated += outcomes[p].truncated ? 1 : 0;
  }
  const auto m = sample_moments(obj);
  MonteCarloEstimate e;
  e.mean = m.mean;
  e.std_error = m.std_error;
  e.n_paths = outcomes.size();
  e.seed = seed;
  e.step = step;
  e.rule_id = std::move(rule_id);
  e.n_truncated = truncated;
  e.truncation_warning = static_cast<double>(truncated) > 0.01 * static_cast<double>(outcomes.size());
  return e;
}

}  // namespace detail

inline RuleComparison compare_rules(const DiffusionModel& model, double x0,
                                    const std::vector<StoppingRule>& rules, std::size_t n_paths,
                                    std::uint64_t seed, const SimulationConfig& cfg = {}) {
  if (rules.empty()) throw DomainError("compare_rules needs at least one rule");
  if (n_paths < 2) throw DomainError("need at least two paths");
  detail::validate_run(x0, cfg);
  model.check_state(x0, "x0");
  std::vector<std::vector<PathOutcome>> by_path(n_paths);
  detail::parallel_for(n_paths, cfg.threads, [&](std::size_t p) {
    PathStream stream(seed, p);
    by_path[p] = simulate_path_multi(model, x0, rules, cfg, stream);
  });
  RuleComparison cmp;
  cmp.outcomes.assign(rules.size(), std::vector<PathOutcome>(n_paths));
  for (std::size_t p = 0; p < n_paths; ++p)
    for (std::size_t r = 0; r < rules.size(); ++r) cmp.outcomes[r][p] = by_path[p][r];
  for (std::size_t r = 0; r < rules.size(); ++r)
    cmp.estimates.push_back(detail::summarise(cmp.outcomes[r], seed, cfg.step, rules[r].id()));
  return cmp;
}

/// Sample mean and standard error of the objective under one rule.
inline MonteCarloEstimate estimate_objective(const DiffusionModel& model, double x0,
                                             const StoppingRule& rule, std::size_t n_paths,
                                             std::uint64_t seed,
                                             const SimulationConfig& cfg = {}) {
  return compare_rules(model, x0, {rule}, n_paths, seed, cfg).estimates.front();
}

struct StoppedSample {
  std::vector<double> sorted;  // x_stop of non-truncated paths, ascending
  std::size_t n_excluded = 0;  // truncated paths
  bool exclusion_warning = false;
  double ks = 0.0;             // against the theoretical law
  double mean = 0.0;
};

/// Theoretical CDF of X at the stopping time of a ratio or boundary rule.
inline std::function<double(double)> stopped_law(const DiffusionModel& model, double x0,
                                                 const StoppingRule& rule) {
  if (const auto* r = std::get_if<rules::Ratio>(&rule.variant())) {
    if (model.is_bessel()) {
      StoppedDistribution dist(model.dimension(), r->lambda, x0);
      return [dist](double y) { return dist.cdf(y); };
    }
    auto b = std::make_shared<const Boundary>(
        Boundary::linear(r->lambda, geometric_grid(x0 * 1e-6, x0, 2001)));
    return [model, b, x0](double y) {
      return y >= b->values().back() ? 1.0 : stopped_cdf_general(model, *b, x0, y);
    };
  }
  if (const auto* br = std::get_if<rules::BoundaryRule>(&rule.variant())) {
    auto b = br->boundary;
    return [model, b, x0](double y) {
      const double top = (*b)(x0);
      if (y >= top) return 1.0;
      if (y < b->values().front()) return 0.0;
      return stopped_cdf_general(model, *b, x0, y);
    };
  }
  throw DomainError("stopped distribution is defined for ratio and boundary rules only");
}

inline StoppedSample sample_stopped_distribution(const DiffusionModel& model, double x0,
                                                 const StoppingRule& rule, std::size_t n_paths,
                                                 std::uint64_t seed,
                                                 const SimulationConfig& cfg = {}) {
  const auto cdf = stopped_law(model, x0, rule);
  const auto cmp = compare_rules(model, x0, {rule}, n_paths, seed, cfg);
  StoppedSample s;
  for (const auto& o : cmp.outcomes.front()) {
    if (o.truncated)
      ++s.n_excluded;
    else
      s.sorted.push_back(o.x_stop);
  }
  s.exclusion_warning = static_cast<double>(s.n_excluded) > 0.01 * static_cast<double>(n_paths);
  if (s.sorted.size() < 2) throw NumericalError("too few non-truncated paths");
  s.mean = pairwise_sum(s.sorted) / static_cast<double>(s.sorted.size());
  std::sort(s.sorted.begin(), s.sorted.end());
  s.ks = ks_statistic(s.sorted, cdf);
  return s;
}

struct FutureMinEstimate {
  MonteCarloEstimate estimate;   // fraction of paths dipping below the level
  double truncation_bias = 0.0;  // mean over paths of P(later dip) for survivors
  std::size_t n_surviving = 0;
};

/// Estimates P_x0(I_horizon < level). For Bessel models the exact transition is
/// used with steps that grow while the path is far above the level (a move of
/// six standard deviations is needed to reach it within one step); other models
/// use Euler with the fixed step. The bridge monitor adds the Brownian-bridge
/// probability of a dip between grid points. Survivors contribute L(X_T)/L(level), the
/// probability of a later dip, to the reported truncation bias.
inline FutureMinEstimate estimate_future_min_prob(const DiffusionModel& model, double x0,
                                                  double level, std::size_t n_paths,
                                                  std::uint64_t seed,
                                                  const SimulationConfig& cfg = {}) {
  detail::validate_run(x0, cfg);
  model.check_state(x0, "x0");
  model.check_state(level, "level");
  if (!(level < x0)) throw DomainError("future-minimum level must lie below x0");
  if (n_paths < 2) throw DomainError("need at least two paths");
  const bool exact = model.is_bessel();
  const bool bridge = cfg.monitor == MinimumMonitor::bridge;
  const detail::Stepper stepper(model, exact ? Scheme::exact : Scheme::euler);
  std::vector<double> hit(n_paths, 0.0), tail(n_paths, 0.0);
  detail::parallel_for(n_paths, cfg.threads, [&](std::size_t p) {
    PathStream stream(seed, p);
    double x = x0, t = 0.0;
    while (t < cfg.horizon) {
      double dt = cfg.step;
      if (exact) {
        const double gap = (x - level) / 6.0;
        dt = std::max(cfg.step, gap * gap);
      }
      dt = std::min(dt, cfg.horizon - t);
      if (!(dt > 0.0)) break;
      const double prev = x;
      x = stepper.advance(x, dt, stream);
      t += dt;
      if (x < level) {
        hit[p] = 1.0;
        return;
      }
      if (bridge) {
        const double s = model.volatility(std::min(prev, x));
        const double cross = std::exp(-2.0 * (prev - level) * (x - level) / (s * s * dt));
        if (stream.uniform() < cross) {
          hit[p] = 1.0;
          return;
        }
      }
    }
    tail[p] = model.scale(x) / model.scale(level);
  });
  FutureMinEstimate out;
  const auto m = sample_moments(hit);
  out.estimate.mean = m.mean;
  out.estimate.std_error = m.std_error;
  out.estimate.n_paths = n_paths;
  out.estimate.seed = seed;
  out.estimate.step = cfg.step;
  char buf[64];
  std::snprintf(buf, sizeof buf, "future_min(%.10g)", level);
  out.estimate.rule_id = buf;
  out.truncation_bias = pairwise_sum(tail) / static_cast<double>(n_paths);
  for (double h : hit) out.n_surviving += h == 0.0 ? 1 : 0;
  return out;
}

}  // namespace goldstop
