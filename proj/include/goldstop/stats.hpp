#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "goldstop/errors.hpp"

namespace goldstop {

/// Pairwise (tree) summation with a topology fixed by the length alone, so
/// the result does not depend on how the values were produced.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const auto half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct SampleMoments {
  double mean = 0.0;
  double std_error = 0.0;
  double std_dev = 0.0;
};

inline SampleMoments sample_moments(std::span<const double> v) {
  if (v.size() < 2) throw DomainError("sample moments need at least two values");
  const double n = static_cast<double>(v.size());
  const double mean = pairwise_sum(v) / n;
  std::vector<double> sq(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) sq[k] = (v[k] - mean) * (v[k] - mean);
  const double var = pairwise_sum(sq) / (n - 1);
  const double sd = std::sqrt(var);
  return {mean, sd / std::sqrt(n), sd};
}

/// One-sample Kolmogorov-Smirnov statistic sup |F_n - F| for a sorted sample.
template <class Cdf>
double ks_statistic(std::span<const double> sorted, Cdf&& cdf) {
  if (sorted.empty()) throw DomainError("KS statistic needs a nonempty sample");
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double f = cdf(sorted[k]);
    d = std::max({d, f - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - f});
  }
  return d;
}

/// Two-sample Kolmogorov-Smirnov statistic for sorted samples.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS statistic needs nonempty samples");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace goldstop
