#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lfgo/core/rng.hpp"
#include "lfgo/core/stats.hpp"
#include "lfgo/core/types.hpp"

namespace lfgo::densratio {

/// Lower bound applied to every ratio evaluation, so that logs stay finite.
inline constexpr double kRatioFloor = 1e-12;

inline constexpr double kKernelCutoff = -100.0;

/// Per-coordinate affine standardization x -> (x - offset) / scale.
struct Standardizer {
  Vector offset;
  Vector scale;

  static Standardizer identity(Eigen::Index dim) {
    return {Vector::Zero(dim), Vector::Ones(dim)};
  }

  /// Mean and standard deviation of the pooled rows of a and b (scale floored at 1e-12).
  static Standardizer pooled(const Matrix& a, const Matrix& b) {
    const Eigen::Index d = a.cols();
    Standardizer s{Vector::Zero(d), Vector::Ones(d)};
    const double n = static_cast<double>(a.rows() + b.rows());
    for (Eigen::Index j = 0; j < d; ++j) {
      const double m = (a.col(j).sum() + b.col(j).sum()) / n;
      const double ss = (a.col(j).array() - m).square().sum() + (b.col(j).array() - m).square().sum();
      s.offset[j] = m;
      s.scale[j] = std::max(std::sqrt(ss / std::max(1.0, n - 1.0)), 1e-12);
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    return (x.rowwise() - offset.transpose()).array().rowwise() / scale.transpose().array();
  }
  Vector apply(const Vector& x) const { return (x - offset).cwiseQuotient(scale); }
};

/// Gaussian kernel basis phi_m(x) = exp(-|x - c_m|^2 / (2 sigma^2)) on standardized inputs.
struct KernelBasis {
  Matrix centers;  ///< M x d, standardized coordinates
  double sigma = 1.0;

  Eigen::Index size() const noexcept { return centers.rows(); }
};

/// Squared Euclidean distances between rows of x and rows of centers.
inline Matrix squared_distances(const Matrix& x, const Matrix& centers) {
  Matrix d2 = -2.0 * x * centers.transpose();
  d2.colwise() += x.rowwise().squaredNorm();
  d2.rowwise() += centers.rowwise().squaredNorm().transpose();
  return d2.cwiseMax(0.0);
}

/// Gaussian kernel values from squared distances. The exponent is clamped at
/// -100: such entries are negligible, and letting them underflow would make
/// their products subnormal, which is very slow.
inline Matrix gaussian_from_sq(const Matrix& d2, double sigma) {
  const double scale = -0.5 / (sigma * sigma);
  return (d2.array() * scale).max(kKernelCutoff).exp().matrix();
}

/// Kernel design matrix Phi (n x M) for standardized inputs.
inline Matrix kernel_matrix(const Matrix& x, const Matrix& centers, double sigma) {
  return gaussian_from_sq(squared_distances(x, centers), sigma);
}

inline Vector kernel_vector(const Vector& x, const Matrix& centers, double sigma) {
  const double scale = -0.5 / (sigma * sigma);
  return ((centers.rowwise() - x.transpose()).rowwise().squaredNorm().array() * scale).max(kKernelCutoff).exp().matrix();
}

/// Chooses min(m, n) distinct rows of x uniformly at random.
inline Matrix sample_centers(const Matrix& x, std::size_t m, const RngStream& stream) {
  const auto n = static_cast<std::size_t>(x.rows());
  m = std::min(m, n);
  std::vector<Eigen::Index> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<Eigen::Index>(i);
  auto rng = stream.engine();
  // partial Fisher-Yates
  for (std::size_t i = 0; i < m; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform01() * static_cast<double>(n - i));
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  Matrix c(static_cast<Eigen::Index>(m), x.cols());
  for (std::size_t i = 0; i < m; ++i) c.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return c;
}

/// Median Euclidean distance between pooled rows, computed on an evenly strided
/// subsample of at most `cap` rows from each input.
inline double median_pairwise_distance(const Matrix& a, const Matrix& b, Eigen::Index cap = 250) {
  std::vector<Vector> pts;
  auto take = [&](const Matrix& m) {
    const Eigen::Index stride = std::max<Eigen::Index>(1, (m.rows() + cap - 1) / cap);
    for (Eigen::Index i = 0; i < m.rows(); i += stride) pts.emplace_back(m.row(i).transpose());
  };
  take(a);
  take(b);
  std::vector<double> d;
  d.reserve(pts.size() * (pts.size() - 1) / 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d.push_back((pts[i] - pts[j]).norm());
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 0.0 ? *mid : 1.0;
}

/// A fitted kernel-basis density-ratio model r(x) = sum_m w_m phi_m(x).
struct RatioModel {
  KernelBasis basis;
  Vector weights;
  double lambda = 0.0;
  double alpha = 0.0;
  Standardizer input_scale;

  /// Raw linear-model value (may be negative).
  double raw(const Vector& x) const {
    return kernel_vector(input_scale.apply(x), basis.centers, basis.sigma).dot(weights);
  }

  double evaluate(const Vector& x) const { return std::max(raw(x), kRatioFloor); }

  Vector evaluate_rows(const Matrix& x) const {
    const Vector r = kernel_matrix(input_scale.apply(x), basis.centers, basis.sigma) * weights;
    return r.cwiseMax(kRatioFloor);
  }

  double log_ratio(const Vector& x) const { return std::log(evaluate(x)); }
};

inline double evaluate_ratio(const RatioModel& model, const Vector& x) { return model.evaluate(x); }

}  // namespace lfgo::densratio
