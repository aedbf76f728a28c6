#pragma once

#include <cmath>
#include <random>

#include "lfgo/core/rng.hpp"
#include "lfgo/core/stats.hpp"
#include "lfgo/core/types.hpp"

namespace lfgo {

inline double sample_uniform(double lower, double upper, PhiloxEngine& rng) {
  return lower + (upper - lower) * rng.uniform01();
}

inline double sample_normal(double mean, double sd, PhiloxEngine& rng) {
  std::normal_distribution<double> dist(mean, sd);
  return dist(rng);
}

/// Normal(mean, sd^2) conditioned on [lower, upper], by rejection from the
/// untruncated normal.
inline double sample_truncated_normal(double mean, double sd, double lower, double upper, PhiloxEngine& rng) {
  if (!(lower < upper)) throw DomainError("truncated normal needs lower < upper");
  if (!(sd > 0.0)) throw DomainError("truncated normal needs sd > 0");
  const double mass = stats::normal_cdf((upper - mean) / sd) - stats::normal_cdf((lower - mean) / sd);
  if (!(mass > 1e-6)) throw DomainError("truncation interval carries too little mass for rejection sampling");
  std::normal_distribution<double> dist(mean, sd);
  for (;;) {
    const double x = dist(rng);
    if (x >= lower && x <= upper) return x;
  }
}

/// Analytic CDF of the truncated normal, used by tests as an oracle.
inline double truncated_normal_cdf(double x, double mean, double sd, double lower, double upper) {
  if (x <= lower) return 0.0;
  if (x >= upper) return 1.0;
  const double a = stats::normal_cdf((lower - mean) / sd);
  const double b = stats::normal_cdf((upper - mean) / sd);
  return (stats::normal_cdf((x - mean) / sd) - a) / (b - a);
}

inline int sample_binomial(int n, double p, PhiloxEngine& rng) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<int> dist(n, p);
  return dist(rng);
}

}  // namespace lfgo
