#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "lfgo/core/types.hpp"

namespace lfgo::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw DomainError("mean of empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Sample standard deviation with the (n-1) denominator; 0 for a single value.
inline double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

/// Linear-interpolated quantile (type 7), p in [0, 1].
inline double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw DomainError("quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double h = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// log N(x; mean, var)
inline double normal_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

/// log(sum(exp(v))) without overflow.
inline double logsumexp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Per-column mean and sample standard deviation of a row-sample matrix.
inline Vector column_means(const Matrix& x) { return x.colwise().mean().transpose(); }

inline Vector column_stddevs(const Matrix& x) {
  Vector sd(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (x.rows() < 2) {
      sd[j] = 0.0;
      continue;
    }
    const double m = x.col(j).mean();
    sd[j] = std::sqrt((x.col(j).array() - m).square().sum() / static_cast<double>(x.rows() - 1));
  }
  return sd;
}

}  // namespace lfgo::stats
