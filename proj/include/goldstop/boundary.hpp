#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "goldstop/diffusion.hpp"
#include "goldstop/errors.hpp"

namespace goldstop {

namespace provenance {
struct ClosedFormRatio {
  double lambda;
};
struct Shot {
  double start;  // i_n
};
struct MinimalLimit {
  int n_shots;
};
struct Imported {};
}  // namespace provenance

using Provenance = std::variant<provenance::ClosedFormRatio, provenance::Shot,
                                provenance::MinimalLimit, provenance::Imported>;

inline std::string describe(const Provenance& p) {
  std::ostringstream out;
  out.precision(17);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, provenance::ClosedFormRatio>)
          out << "closed-form-ratio(" << v.lambda << ")";
        else if constexpr (std::is_same_v<T, provenance::Shot>)
          out << "shot(" << v.start << ")";
        else if constexpr (std::is_same_v<T, provenance::MinimalLimit>)
          out << "minimal-limit(" << v.n_shots << ")";
        else
          out << "imported";
      },
      p);
  return out.str();
}

/// Geometrically spaced grid of n points from lo to hi inclusive.
inline std::vector<double> geometric_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && lo < hi) || n < 2) throw DomainError("geometric_grid needs 0 < lo < hi, n >= 2");
  std::vector<double> g(n);
  const double ratio = std::log(hi / lo);
  for (int k = 0; k < n; ++k) g[k] = lo * std::exp(ratio * k / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

/// A strictly increasing stopping boundary i -> f(i) sampled on an ascending
/// grid and interpolated by monotone piecewise-cubic Hermite (Fritsch-Carlson).
class Boundary {
 public:
  Boundary(std::vector<double> i, std::vector<double> f, Provenance provenance)
      : i_(std::move(i)), f_(std::move(f)), provenance_(provenance) {
    if (i_.size() != f_.size() || i_.size() < 2)
      throw DomainError("boundary needs at least two (i, f) nodes of equal length");
    for (std::size_t k = 0; k < i_.size(); ++k) {
      if (!(i_[k] > 0.0) || !std::isfinite(f_[k]))
        throw DomainError("boundary nodes must be positive and finite");
      if (k > 0 && !(i_[k] > i_[k - 1])) throw DomainError("boundary grid must be ascending");
      if (k > 0 && !(f_[k] > f_[k - 1]))
        throw DomainError("boundary values must be strictly increasing");
    }
    build_slopes();
  }

  /// f(i) = lambda * i sampled on `grid`.
  static Boundary linear(double lambda, const std::vector<double>& grid) {
    std::vector<double> f(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) f[k] = lambda * grid[k];
    return Boundary(grid, std::move(f), provenance::ClosedFormRatio{lambda});
  }

  const std::vector<double>& grid() const noexcept { return i_; }
  const std::vector<double>& values() const noexcept { return f_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  double i_min() const noexcept { return i_.front(); }
  double i_max() const noexcept { return i_.back(); }
  std::size_t size() const noexcept { return i_.size(); }

  bool covers(double i) const noexcept { return i >= i_.front() && i <= i_.back(); }

  double operator()(double i) const {
    if (!covers(i)) {
      std::ostringstream msg;
      msg << "boundary evaluated at i = " << i << " outside its grid [" << i_.front() << ", "
          << i_.back() << "]";
      throw DomainError(msg.str());
    }
    const auto k = segment(i_, i);
    return hermite(k, i);
  }

  double derivative(double i) const {
    if (!covers(i)) throw DomainError("boundary derivative outside the grid");
    const auto k = segment(i_, i);
    const double h = i_[k + 1] - i_[k];
    const double t = (i - i_[k]) / h;
    return (6 * t * t - 6 * t) * f_[k] / h + (3 * t * t - 4 * t + 1) * d_[k] +
           (-6 * t * t + 6 * t) * f_[k + 1] / h + (3 * t * t - 2 * t) * d_[k + 1];
  }

  /// f^-1(y) for y in [f(i_min), f(i_max)], by bisection on the monotone interpolant.
  double inverse(double y) const {
    if (!(y >= f_.front() && y <= f_.back())) {
      std::ostringstream msg;
      msg << "boundary inverse at y = " << y << " outside [" << f_.front() << ", " << f_.back()
          << "]";
      throw DomainError(msg.str());
    }
    const auto k = segment(f_, y);
    double lo = i_[k], hi = i_[k + 1];
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (hermite(k, mid) < y)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  /// Writes `i,f,h` rows (17 significant digits) with a header.
  void write_csv(std::ostream& out, const DiffusionModel& model) const {
    out << "i,f,h\n";
    char buf[96];
    for (std::size_t k = 0; k < i_.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", i_[k], f_[k], h_curve(model, i_[k]));
      out << buf;
    }
  }

  /// Reads an `i,f,h` (or `i,f`) table; the h column is informational only.
  static Boundary read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("boundary CSV is empty");
    line.erase(std::remove_if(line.begin(), line.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               line.end());
    if (line != "i,f,h" && line != "i,f") throw DomainError("boundary CSV header must be `i,f,h`");
    std::vector<double> is, fs;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::stringstream ss(line);
      std::string a, b;
      if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
        throw DomainError("boundary CSV row needs at least two columns");
      try {
        is.push_back(std::stod(a));
        fs.push_back(std::stod(b));
      } catch (const std::exception&) {
        throw DomainError("boundary CSV: bad number in `" + line + "`");
      }
    }
    return Boundary(std::move(is), std::move(fs), provenance::Imported{});
  }

 private:
  static std::size_t segment(const std::vector<double>& xs, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    auto k = static_cast<std::ptrdiff_t>(it - xs.begin()) - 1;
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(xs.size()) - 2);
    return static_cast<std::size_t>(k);
  }

  double hermite(std::size_t k, double x) const {
    const double h = i_[k + 1] - i_[k];
    const double t = (x - i_[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f_[k] + (t3 - 2 * t2 + t) * h * d_[k] +
           (-2 * t3 + 3 * t2) * f_[k + 1] + (t3 - t2) * h * d_[k + 1];
  }

  // Fritsch-Carlson slopes (as in PCHIP): weighted harmonic means of the
  // secants, one-sided three-point formulas at the ends.
  void build_slopes() {
    const std::size_t n = i_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = i_[k + 1] - i_[k];
      delta[k] = (f_[k + 1] - f_[k]) / h[k];
    }
    d_.assign(n, 0.0);
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
      return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double w1 = 2 * h[k] + h[k - 1];
      const double w2 = h[k] + 2 * h[k - 1];
      d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (d <= 0.0) return 0.0;
      if (d > 3 * d0) d = 3 * d0;
      return d;
    };
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  std::vector<double> i_;
  std::vector<double> f_;
  std::vector<double> d_;
  Provenance provenance_;
};

}  // namespace goldstop
