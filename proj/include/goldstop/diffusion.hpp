#pragma once

// One-dimensional transient diffusions dX = mu(X) dt + sigma(X) dB on (0, inf),
// described through their scale function L and speed measure m. The scale
// function is normalised so that L < 0 and L(inf-) = 0.

#include <algorithm>
#include <cctype>
#include <limits>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "goldstop/errors.hpp"
#include "goldstop/quadrature.hpp"
#include "goldstop/roots.hpp"

namespace goldstop {

using Evaluator = std::function<double(double)>;

namespace detail {

inline void require_state(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    std::ostringstream msg;
    msg << name << " must be a finite positive state, got " << x;
    throw DomainError(msg.str());
  }
}

// Integer powers are common (d = 3, 4, 5) and much cheaper than std::pow.
inline double fast_pow(double base, double exponent) {
  const double r = std::round(exponent);
  if (r == exponent && std::abs(r) <= 8.0) {
    const int n = static_cast<int>(std::abs(r));
    double out = 1.0;
    for (int k = 0; k < n; ++k) out *= base;
    return r < 0 ? 1.0 / out : out;
  }
  return std::pow(base, exponent);
}

}  // namespace detail

class DiffusionModel {
 public:
  enum class Kind { bessel, custom };

  struct Evaluators {
    Evaluator drift;
    Evaluator volatility;
    Evaluator scale;
    Evaluator scale_deriv;
    Evaluator scale_inverse;  // may be empty
  };

  DiffusionModel(Kind kind, double dimension, Evaluators ev, double lower = 0.0,
                 double upper = std::numeric_limits<double>::infinity())
      : kind_(kind), dimension_(dimension), ev_(std::move(ev)), lower_(lower), upper_(upper) {}

  Kind kind() const noexcept { return kind_; }
  bool is_bessel() const noexcept { return kind_ == Kind::bessel; }
  /// Bessel dimension d; NaN for custom models.
  double dimension() const noexcept { return dimension_; }
  /// Open window (lower, upper) on which the evaluators are defined. (0, inf) for Bessel.
  double lower_bound() const noexcept { return lower_; }
  double upper_bound() const noexcept { return upper_; }

  double drift(double x) const { return ev_.drift(x); }
  double volatility(double x) const { return ev_.volatility(x); }
  double scale(double x) const { return ev_.scale(x); }
  double scale_deriv(double x) const { return ev_.scale_deriv(x); }
  bool has_scale_inverse() const noexcept { return static_cast<bool>(ev_.scale_inverse); }
  double scale_inverse(double v) const {
    if (!ev_.scale_inverse)
      throw UnsupportedOperation("scale inverse is not available for this model");
    return ev_.scale_inverse(v);
  }
  /// Density of the speed measure: 1 / ((sigma^2/2)(x) L'(x)).
  double speed_density(double x) const {
    if (is_bessel()) return 2.0 / (dimension_ - 2.0) * detail::fast_pow(x, dimension_ - 1.0);
    const double s = volatility(x);
    return 1.0 / (0.5 * s * s * scale_deriv(x));
  }
  /// L(x)/L(i); the Bessel case avoids two divisions and a pow where possible.
  double scale_ratio(double x, double i) const {
    if (is_bessel()) return detail::fast_pow(i / x, dimension_ - 2.0);
    return scale(x) / scale(i);
  }

  void check_state(double x, const char* name) const {
    detail::require_state(x, name);
    if (!(x > lower_ && x < upper_)) {
      std::ostringstream msg;
      msg << name << " = " << x << " lies outside the model window (" << lower_ << ", " << upper_
          << ")";
      throw DomainError(msg.str());
    }
  }

 private:
  Kind kind_;
  double dimension_;
  Evaluators ev_;
  double lower_;
  double upper_;
};

/// The d-dimensional Bessel process dX = (d-1)/(2X) dt + dB with
/// L(x) = -x^(2-d) and m(dx) = 2/(d-2) x^(d-1) dx. Requires d > 2.
inline DiffusionModel make_bessel_model(double d) {
  if (!(d > 2.0) || !std::isfinite(d)) {
    std::ostringstream msg;
    msg << "recurrent-or-invalid dimension d = " << d << " (need d > 2)";
    throw DomainError(msg.str());
  }
  DiffusionModel::Evaluators ev;
  ev.drift = [d](double x) { return (d - 1.0) / (2.0 * x); };
  ev.volatility = [](double) { return 1.0; };
  ev.scale = [d](double x) { return -detail::fast_pow(x, 2.0 - d); };
  ev.scale_deriv = [d](double x) { return (d - 2.0) * detail::fast_pow(x, 1.0 - d); };
  ev.scale_inverse = [d](double v) {
    if (!(v < 0.0)) throw DomainError("Bessel scale inverse needs a negative argument");
    return std::pow(-v, 1.0 / (2.0 - d));
  };
  return DiffusionModel(DiffusionModel::Kind::bessel, d, std::move(ev));
}

struct CustomModelOptions {
  double x_min = 1e-4;    // lower end of the tabulation window
  double x_ref = 1.0;     // anchor: L(x_ref) = -1
  double x_max = 1e4;     // L is truncated to vanish here
  int table_size = 4001;  // log-spaced tabulation nodes
};

namespace detail {

// Scale function of a custom model, tabulated with exact derivatives and
// evaluated by cubic Hermite interpolation on a logarithmic grid.
class ScaleTable {
 public:
  ScaleTable(const Evaluator& drift, const Evaluator& vol, const CustomModelOptions& opt)
      : log_lo_(std::log(opt.x_min)), log_hi_(std::log(opt.x_max)) {
    const int n = opt.table_size;
    xs_.resize(n);
    for (int k = 0; k < n; ++k)
      xs_[k] = std::exp(log_lo_ + (log_hi_ - log_lo_) * k / (n - 1));
    xs_.front() = opt.x_min;
    xs_.back() = opt.x_max;
    dlog_ = (log_hi_ - log_lo_) / (n - 1);

    auto log_density = [&](double y) {
      const double s = vol(y);
      return 2.0 * drift(y) / (s * s);
    };
    // A(x) = int_{x_min}^x 2 mu / sigma^2; re-anchored at x_ref below.
    QuadratureOptions q{1e-13, 1e-12, 200};
    a_.assign(n, 0.0);
    da_.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
      if (k > 0) a_[k] = a_[k - 1] + integrate(log_density, xs_[k - 1], xs_[k], q).value;
      da_[k] = log_density(xs_[k]);
    }
    const double a_ref = interp_a_raw(opt.x_ref);
    for (auto& v : a_) v -= a_ref;

    // R(x) = -int_x^{x_max} exp(-A), accumulated from the top.
    auto lprime = [&](double y) { return std::exp(-eval_a(y)); };
    r_.assign(n, 0.0);
    for (int k = n - 2; k >= 0; --k)
      r_[k] = r_[k + 1] - integrate(lprime, xs_[k], xs_[k + 1], q).value;
    const double r_ref = -eval_r_raw(opt.x_ref);
    if (!(r_ref > 0.0)) throw NumericalError("custom scale function is degenerate at x_ref");
    norm_ = 1.0 / r_ref;
    for (auto& v : r_) v *= norm_;
  }

  double scale(double x) const { return eval_r_raw(x); }
  double scale_deriv(double x) const { return norm_ * std::exp(-eval_a(x)); }
  double inverse(double v) const {
    if (!(v < 0.0) || v < r_.front())
      throw DomainError("custom scale inverse: argument outside the tabulated range");
    const double tol = 1e-12;
    double lo = xs_.front(), hi = xs_.back();
    // Relative bisection in x.
    while (hi - lo > tol * lo) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (scale(mid) < v)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  // Index of the grid interval containing x (clamped to the table).
  std::size_t locate(double x) const {
    const double u = (std::log(x) - log_lo_) / dlog_;
    auto k = static_cast<std::ptrdiff_t>(std::floor(u));
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(xs_.size()) - 2);
    return static_cast<std::size_t>(k);
  }

  static double hermite(double x0, double x1, double y0, double y1, double d0, double d1,
                        double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * d1;
  }

  double interp_a_raw(double x) const {
    const auto k = locate(x);
    return hermite(xs_[k], xs_[k + 1], a_[k], a_[k + 1], da_[k], da_[k + 1], x);
  }
  double eval_a(double x) const { return interp_a_raw(x); }
  double eval_r_raw(double x) const {
    const auto k = locate(x);
    const double d0 = norm_ * std::exp(-a_[k]);
    const double d1 = norm_ * std::exp(-a_[k + 1]);
    return hermite(xs_[k], xs_[k + 1], r_[k], r_[k + 1], d0, d1, x);
  }

  double log_lo_, log_hi_, dlog_ = 1.0;
  double norm_ = 1.0;
  std::vector<double> xs_, a_, da_, r_;
};

}  // namespace detail

/// Custom model from drift and volatility evaluators. L is obtained by
/// quadrature, anchored at L(x_ref) = -1 and truncated so that L(x_max) = 0;
/// the model is defined on the window (x_min, x_max).
inline DiffusionModel make_custom_model(Evaluator drift, Evaluator volatility,
                                        const CustomModelOptions& opt = {}) {
  if (!(opt.x_min > 0.0 && opt.x_min < opt.x_ref && opt.x_ref < opt.x_max))
    throw DomainError("custom model needs 0 < x_min < x_ref < x_max");
  if (opt.table_size < 16) throw DomainError("custom model table_size must be >= 16");
  for (double x : {opt.x_min, opt.x_ref, opt.x_max}) {
    if (!(volatility(x) > 0.0)) throw DomainError("volatility must be strictly positive");
  }
  auto table = std::make_shared<const detail::ScaleTable>(drift, volatility, opt);
  DiffusionModel::Evaluators ev;
  ev.drift = std::move(drift);
  ev.volatility = std::move(volatility);
  ev.scale = [table](double x) { return table->scale(x); };
  ev.scale_deriv = [table](double x) { return table->scale_deriv(x); };
  ev.scale_inverse = [table](double v) { return table->inverse(v); };
  return DiffusionModel(DiffusionModel::Kind::custom, std::numeric_limits<double>::quiet_NaN(),
                        std::move(ev), opt.x_min, opt.x_max);
}

/// Custom model with a caller-supplied scale function and derivative and no
/// inverse; operations that need L^-1 (the curve h) are unsupported.
inline DiffusionModel make_custom_model_with_scale(Evaluator drift, Evaluator volatility,
                                                   Evaluator scale, Evaluator scale_deriv) {
  DiffusionModel::Evaluators ev{std::move(drift), std::move(volatility), std::move(scale),
                                std::move(scale_deriv), {}};
  return DiffusionModel(DiffusionModel::Kind::custom, std::numeric_limits<double>::quiet_NaN(),
                        std::move(ev));
}

/// Reads a `x,mu,sigma` table (header required, strictly ascending x) and
/// builds a custom model with linearly interpolated coefficients. The
/// tabulation window defaults to the span of the table.
inline DiffusionModel load_model_csv(std::istream& in, double x_ref,
                                     int table_size = 4001) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("model CSV is empty");
  {
    std::string h = line;
    h.erase(std::remove_if(h.begin(), h.end(), [](unsigned char c) { return std::isspace(c); }),
            h.end());
    if (h != "x,mu,sigma") throw DomainError("model CSV header must be `x,mu,sigma`");
  }
  std::vector<double> xs, mus, sigmas;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    double vals[3];
    for (int k = 0; k < 3; ++k) {
      std::string cell;
      if (!std::getline(ss, cell, ',')) {
        throw DomainError("model CSV line " + std::to_string(line_no) + ": expected 3 columns");
      }
      try {
        std::size_t used = 0;
        vals[k] = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw DomainError("model CSV line " + std::to_string(line_no) + ": bad number `" + cell +
                          "`");
      }
    }
    if (!(vals[0] > 0.0)) throw DomainError("model CSV: x must be positive");
    if (!xs.empty() && !(vals[0] > xs.back()))
      throw DomainError("model CSV: x must be strictly ascending");
    if (!(vals[2] > 0.0)) throw DomainError("model CSV: sigma must be positive");
    xs.push_back(vals[0]);
    mus.push_back(vals[1]);
    sigmas.push_back(vals[2]);
  }
  if (xs.size() < 2) throw DomainError("model CSV needs at least two rows");
  auto table = std::make_shared<const std::vector<std::vector<double>>>(
      std::vector<std::vector<double>>{xs, mus, sigmas});
  auto lerp = [table](int col) {
    return [table, col](double x) {
      const auto& gx = (*table)[0];
      const auto& gy = (*table)[col];
      if (x <= gx.front()) return gy.front();
      if (x >= gx.back()) return gy.back();
      const auto it = std::upper_bound(gx.begin(), gx.end(), x);
      const auto k = static_cast<std::size_t>(it - gx.begin()) - 1;
      const double w = (x - gx[k]) / (gx[k + 1] - gx[k]);
      return (1 - w) * gy[k] + w * gy[k + 1];
    };
  };
  CustomModelOptions opt{xs.front(), x_ref, xs.back(), table_size};
  return make_custom_model(lerp(1), lerp(2), opt);
}

inline DiffusionModel load_model_csv(const std::string& path, double x_ref) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open model CSV `" + path + "`");
  return load_model_csv(in, x_ref);
}

/// Objective integrand c(i, x) = 1 - 2 L(x)/L(i) for 0 < i <= x. Lies in [-1, 1).
inline double c_value(const DiffusionModel& model, double i, double x) {
  model.check_state(i, "i");
  model.check_state(x, "x");
  if (i > x) throw DomainError("c_value needs i <= x");
  return 1.0 - 2.0 * model.scale_ratio(x, i);
}

/// The curve h(i) = L^-1(L(i)/2) where c changes sign; h(i) > i.
inline double h_curve(const DiffusionModel& model, double i) {
  model.check_state(i, "i");
  if (model.is_bessel()) return std::pow(2.0, 1.0 / (model.dimension() - 2.0)) * i;
  return model.scale_inverse(0.5 * model.scale(i));
}

struct HittingProbabilities {
  double p_a;  // exit through the lower end a
  double p_b;  // exit through the upper end b; p_a + p_b == 1
};

inline HittingProbabilities hitting_probabilities(const DiffusionModel& model, double a,
                                                  double x, double b) {
  model.check_state(a, "a");
  model.check_state(x, "x");
  model.check_state(b, "b");
  if (!(a <= x && x <= b)) throw DomainError("hitting_probabilities needs a <= x <= b");
  if (a == b) return {1.0, 0.0};
  const double la = model.scale(a), lx = model.scale(x), lb = model.scale(b);
  const double p_a = (lb - lx) / (lb - la);
  return {p_a, 1.0 - p_a};
}

/// Green function G_{a,b}(x, y) of the process killed on leaving (a, b).
inline double green_function(const DiffusionModel& model, double a, double b, double x,
                             double y) {
  model.check_state(a, "a");
  model.check_state(b, "b");
  model.check_state(x, "x");
  model.check_state(y, "y");
  if (!(a <= x && x <= b && a <= y && y <= b))
    throw DomainError("green_function needs a <= x, y <= b");
  if (a == b) return 0.0;
  const double la = model.scale(a), lb = model.scale(b);
  const double lo = model.scale(std::min(x, y));
  const double hi = model.scale(std::max(x, y));
  return (lb - hi) * (lo - la) / (lb - la);
}

/// E_x int_0^{tau_{a,b}} f(X_t) dt = int_a^b f(y) G_{a,b}(x, y) m(dy),
/// integrated adaptively with the kink of G at y = x as a split point.
template <class F>
double expected_exit_integral(const DiffusionModel& model, F&& f, double a, double x, double b,
                              const QuadratureOptions& opts = {}) {
  model.check_state(a, "a");
  model.check_state(x, "x");
  model.check_state(b, "b");
  if (!(a <= x && x <= b)) throw DomainError("expected_exit_integral needs a <= x <= b");
  if (x == a || x == b) return 0.0;
  const double la = model.scale(a), lb = model.scale(b), lx = model.scale(x);
  const double width = lb - la;
  auto integrand = [&](double y) {
    const double ly = model.scale(y);
    const double g = y <= x ? (lb - lx) * (ly - la) / width : (lb - ly) * (lx - la) / width;
    return f(y) * g * model.speed_density(y);
  };
  try {
    return integrate_split(integrand, a, x, b, opts).value;
  } catch (const NumericalError& e) {
    std::ostringstream msg;
    msg << "expected_exit_integral(a=" << a << ", x=" << x << ", b=" << b << "): " << e.what();
    throw NumericalError(msg.str());
  }
}

/// Sampled evidence for the transience and entrance conditions on a log grid
/// spanning [x_lo, x_hi]. Returns human-readable warnings; empty means no
/// violation was observed. These are integrability conditions, so the check
/// is suggestive rather than decisive.
inline std::vector<std::string> check_transience(const DiffusionModel& model, double x_lo,
                                                 double x_hi, int samples = 64) {
  std::vector<std::string> warnings;
  const double lo = std::max(x_lo, model.lower_bound() * (1 + 1e-12));
  const double hi = std::min(x_hi, model.upper_bound() * (1 - 1e-12));
  if (!(lo > 0.0 && lo < hi)) {
    warnings.emplace_back("empty sampling window");
    return warnings;
  }
  double prev_l = -std::numeric_limits<double>::infinity();
  bool monotone = true, negative = true, positive_vol = true;
  for (int k = 0; k < samples; ++k) {
    const double x = lo * std::pow(hi / lo, static_cast<double>(k) / (samples - 1));
    const double l = model.scale(x);
    if (!(l > prev_l)) monotone = false;
    if (!(l < 0.0) && x < hi) negative = false;
    if (!(model.volatility(x) > 0.0)) positive_vol = false;
    prev_l = l;
  }
  if (!positive_vol) warnings.emplace_back("volatility is not strictly positive on the grid");
  if (!monotone) warnings.emplace_back("scale function is not strictly increasing on the grid");
  if (!negative) warnings.emplace_back("scale function is not negative on the grid");
  // L(0+) = -inf: the scale should grow large near the lower end.
  if (std::abs(model.scale(lo)) < 1e2 * std::abs(model.scale(std::sqrt(lo * hi))))
    warnings.emplace_back("L(0+) = -inf is not evident: |L| grows slowly towards the lower end");
  // L(inf-) = 0.
  if (std::abs(model.scale(hi)) > 1e-2 * std::abs(model.scale(std::sqrt(lo * hi))))
    warnings.emplace_back("L(inf-) = 0 is not evident at the upper end of the grid");
  // Entrance conditions: m and |L| m integrable near 0; compare the two
  // halves of the lower decade as a crude convergence signal.
  auto tail = [&](double a, double b, bool weighted) {
    auto g = [&](double y) {
      const double w = weighted ? std::abs(model.scale(y)) : 1.0;
      return w * model.speed_density(y);
    };
    return integrate(g, a, b, {1e-14, 1e-8, 500}).value;
  };
  const double mid = std::sqrt(lo * std::min(hi, 10 * lo));
  const double upper = std::min(hi, 10 * lo);
  for (bool weighted : {false, true}) {
    const double near0 = tail(lo, mid, weighted);
    const double outer = tail(mid, upper, weighted);
    if (near0 > outer)
      warnings.emplace_back(weighted ? "int |L| m(dy) near 0 may diverge"
                                     : "speed measure near 0 may not be finite");
  }
  return warnings;
}

}  // namespace goldstop
