#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace tgadv::stats {

/// Two-sided Kolmogorov-Smirnov statistic between two samples.
inline auto ks_two_sample(std::vector<double> a, std::vector<double> b) -> double {
  if (a.empty() || b.empty()) return 0.0;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Two-sided one-sample KS statistic against a continuous CDF.
template <class Cdf>
auto ks_one_sample(std::vector<double> xs, Cdf&& cdf) -> double {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic Kolmogorov coefficient c(alpha) = sqrt(-ln(alpha/2)/2).
inline auto ks_coefficient(double alpha) -> double { return std::sqrt(-0.5 * std::log(alpha / 2.0)); }

/// One-sample critical value with Stephens' small-sample correction.
inline auto ks_critical_one_sample(std::size_t n, double alpha) -> double {
  const double rn = std::sqrt(static_cast<double>(n));
  return ks_coefficient(alpha) / (rn + 0.12 + 0.11 / rn);
}

inline auto ks_critical_two_sample(std::size_t n, std::size_t m, double alpha) -> double {
  const auto a = static_cast<double>(n);
  const auto b = static_cast<double>(m);
  return ks_coefficient(alpha) * std::sqrt((a + b) / (a * b));
}

inline auto mean(const std::vector<double>& xs) -> double {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline auto sample_std(const std::vector<double>& xs) -> double {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace tgadv::stats
