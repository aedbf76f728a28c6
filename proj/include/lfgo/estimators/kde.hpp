#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "lfgo/core/stats.hpp"
#include "lfgo/core/types.hpp"

namespace lfgo::est {

/// Gaussian product-kernel density estimate with Silverman's rule of thumb per
/// dimension: h_d = sd_d (4 / ((d + 2) n))^(1 / (d + 4)).
class GaussianKde {
 public:
  GaussianKde(Matrix samples, const Vector& min_bandwidth) : x_(std::move(samples)) {
    if (x_.rows() < 1) throw DomainError("KDE needs at least one sample");
    const auto n = static_cast<double>(x_.rows());
    const auto d = static_cast<double>(x_.cols());
    const double factor = std::pow(4.0 / ((d + 2.0) * n), 1.0 / (d + 4.0));
    h_ = (stats::column_stddevs(x_) * factor).cwiseMax(min_bandwidth);
    log_norm_ = -std::log(n) - 0.5 * d * std::log(2.0 * std::numbers::pi) - h_.array().log().sum();
  }

  const Vector& bandwidth() const noexcept { return h_; }

  double log_density(const Vector& z) const {
    const Vector inv = h_.cwiseInverse();
    std::vector<double> terms(static_cast<std::size_t>(x_.rows()));
    for (Eigen::Index i = 0; i < x_.rows(); ++i)
      terms[static_cast<std::size_t>(i)] = -0.5 * (x_.row(i).transpose() - z).cwiseProduct(inv).squaredNorm();
    return stats::logsumexp(terms) + log_norm_;
  }

 private:
  Matrix x_;
  Vector h_;
  double log_norm_ = 0.0;
};

}  // namespace lfgo::est
