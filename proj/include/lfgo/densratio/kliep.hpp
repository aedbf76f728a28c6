#pragma once

// KL importance estimation: maximize mean_p log r(x) over nonnegative weights
// subject to mean_q r(x) = 1, by projected gradient ascent.

#include <cmath>

#include "lfgo/densratio/kernel.hpp"

namespace lfgo::densratio {

struct KliepOptions {
  double sigma = 0.0;  ///< kernel width on standardized inputs; <= 0 picks the median heuristic
  std::size_t centers = 100;
  std::size_t max_iters = 2000;
  double tol = 1e-8;
  double step = 1e-2;
};

struct KliepTrace {
  std::size_t iterations = 0;
  std::vector<double> objective;  ///< accepted-step objective values
};

namespace detail {

inline void kliep_project(Vector& w, const Vector& b) {
  w += ((1.0 - b.dot(w)) / b.squaredNorm()) * b;
  w = w.cwiseMax(0.0);
  w /= b.dot(w);
}

inline double kliep_objective(const Matrix& a, const Vector& w) {
  const Vector r = a * w;
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += std::log(std::max(r[i], kRatioFloor));
  return s / static_cast<double>(r.size());
}

}  // namespace detail

inline RatioModel fit_kliep(const Matrix& xp, const Matrix& xq, const KliepOptions& opt, const RngStream& stream,
                            KliepTrace* trace = nullptr) {
  if (xp.rows() < 2 || xq.rows() < 2) throw DomainError("ratio fitting needs at least two samples per side");
  if (xp.cols() != xq.cols()) throw DomainError("numerator and denominator dimensions differ");

  RatioModel model;
  model.input_scale = Standardizer::pooled(xp, xq);
  const Matrix xp_s = model.input_scale.apply(xp);
  const Matrix xq_s = model.input_scale.apply(xq);
  model.basis.centers = sample_centers(xp_s, opt.centers, stream);
  model.basis.sigma = opt.sigma > 0.0 ? opt.sigma : median_pairwise_distance(xp_s, xq_s);

  const Matrix a = kernel_matrix(xp_s, model.basis.centers, model.basis.sigma);
  const Vector b = kernel_matrix(xq_s, model.basis.centers, model.basis.sigma).colwise().mean().transpose();
  if (!(b.squaredNorm() > 0.0) || (a.rowwise().sum().array() <= 0.0).all())
    throw FitError("all kernel activations vanish");

  Vector w = Vector::Ones(model.basis.size());
  w /= b.dot(w);
  double obj = detail::kliep_objective(a, w);
  double step = opt.step;
  if (trace) trace->objective.push_back(obj);
  std::size_t it = 0;
  for (; it < opt.max_iters; ++it) {
    const Vector r = (a * w).cwiseMax(kRatioFloor);
    const Vector grad = a.transpose() * r.cwiseInverse() / static_cast<double>(a.rows());
    Vector cand = w + step * grad;
    detail::kliep_project(cand, b);
    const double cand_obj = detail::kliep_objective(a, cand);
    if (cand_obj >= obj) {
      const double gain = cand_obj - obj;
      w = std::move(cand);
      obj = cand_obj;
      if (trace) trace->objective.push_back(obj);
      step *= 1.5;
      if (gain < opt.tol) break;
    } else {
      step *= 0.5;
      if (step < 1e-14) break;
    }
  }
  if (trace) trace->iterations = it;
  model.weights = std::move(w);
  return model;
}

/// mean_q r(x) under the fitted model, the quantity KLIEP constrains to one.
inline double kliep_normalization(const RatioModel& model, const Matrix& xq) {
  return (kernel_matrix(model.input_scale.apply(xq), model.basis.centers, model.basis.sigma) * model.weights).mean();
}

}  // namespace lfgo::densratio
