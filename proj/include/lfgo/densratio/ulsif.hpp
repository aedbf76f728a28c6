#pragma once

// Unconstrained least-squares importance fitting (uLSIF) and its relative
// variant (RuLSIF). For a relative parameter alpha the fitted model minimizes
//   1/2 w' H w - h' w + lambda/2 w' w
// with H = alpha E_p[phi phi'] + (1 - alpha) E_q[phi phi'] and h = E_p[phi],
// solved in closed form as w = (H + lambda I)^{-1} h.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "lfgo/densratio/kernel.hpp"

namespace lfgo::densratio {

enum class SigmaScale {
  median_relative,  ///< sigmas multiply the median pairwise distance of the standardized pooled samples
  absolute,         ///< sigmas are used as-is on standardized inputs
};

struct CvGrid {
  std::vector<double> sigmas{0.1, 0.15, 0.25, 0.5, 1.0};
  SigmaScale sigma_scale = SigmaScale::median_relative;
  std::vector<double> lambdas{1e-3, 1e-2, 1e-1, 1.0};
  std::size_t folds = 5;

  void validate() const {
    if (sigmas.empty() || lambdas.empty()) throw DomainError("CV grid lists must be nonempty");
    for (double s : sigmas)
      if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("kernel widths must be positive");
    for (double l : lambdas)
      if (!(l >= 0.0) || !std::isfinite(l)) throw DomainError("regularization must be nonnegative");
    if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
  }
};

struct CvScore {
  double sigma;
  double lambda;
  double loss;  ///< mean out-of-fold uLSIF loss
};

struct CvResult {
  double sigma = 0.0;
  double lambda = 0.0;
  std::vector<CvScore> table;  ///< sigma-major, lambda-minor, in grid order
};

/// Sufficient statistics of a sample under one kernel basis.
struct KernelMoments {
  Matrix gram;   ///< sum_i phi(x_i) phi(x_i)'
  Vector sum;    ///< sum_i phi(x_i)
  double count = 0.0;

  static KernelMoments of(const Matrix& phi, bool with_gram = true) {
    KernelMoments m;
    if (with_gram) {
      m.gram = Matrix::Zero(phi.cols(), phi.cols());
      m.gram.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose());
      m.gram.triangularView<Eigen::StrictlyUpper>() = m.gram.transpose();
    }
    m.sum = phi.colwise().sum().transpose();
    m.count = static_cast<double>(phi.rows());
    return m;
  }
};

/// Forms (H, h) from p- and q-moments for relative parameter alpha.
inline std::pair<Matrix, Vector> ulsif_system(const KernelMoments& p, const KernelMoments& q, double alpha) {
  Matrix h_mat = ((1.0 - alpha) / q.count) * q.gram;
  if (alpha != 0.0) h_mat += (alpha / p.count) * p.gram;
  return {std::move(h_mat), p.sum / p.count};
}

/// Empirical uLSIF loss 1/2 w'Hw - h'w of weights w on a sample's moments.
inline double ulsif_loss(const Vector& w, const KernelMoments& p, const KernelMoments& q, double alpha) {
  double quad = (1.0 - alpha) * w.dot(q.gram * w) / q.count;
  if (alpha != 0.0) quad += alpha * w.dot(p.gram * w) / p.count;
  return 0.5 * quad - p.sum.dot(w) / p.count;
}

namespace detail {

/// Solves (H + lambda I) w = h. Returns nullopt if the system is not positive definite.
inline std::optional<Vector> solve_regularized(const Matrix& h_mat, const Vector& h, double lambda) {
  Matrix a = h_mat;
  a.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Vector w = llt.solve(h);
  if (!w.allFinite()) return std::nullopt;
  // iterative refinement keeps the normal-equation residual at round-off level
  for (int it = 0; it < 3; ++it) {
    const Vector r = h - a * w;
    if (r.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + h.lpNorm<Eigen::Infinity>())) break;
    w += llt.solve(r);
  }
  return w;
}

inline std::vector<double> absolute_sigmas(const CvGrid& grid, const Matrix& xp_s, const Matrix& xq_s) {
  if (grid.sigma_scale == SigmaScale::absolute) return grid.sigmas;
  const double med = median_pairwise_distance(xp_s, xq_s);
  std::vector<double> out;
  out.reserve(grid.sigmas.size());
  for (double s : grid.sigmas) out.push_back(s * med);
  return out;
}

}  // namespace detail

/// Normal-equation residual |(H + lambda I) w - h|_inf of a fitted model on its
/// training data.
inline double normal_equation_residual(const RatioModel& model, const Matrix& xp, const Matrix& xq) {
  const Matrix pp = kernel_matrix(model.input_scale.apply(xp), model.basis.centers, model.basis.sigma);
  const Matrix pq = kernel_matrix(model.input_scale.apply(xq), model.basis.centers, model.basis.sigma);
  auto [h_mat, h] = ulsif_system(KernelMoments::of(pp), KernelMoments::of(pq), model.alpha);
  h_mat.diagonal().array() += model.lambda;
  return (h_mat * model.weights - h).lpNorm<Eigen::Infinity>();
}

/// k-fold cross-validation over (sigma, lambda) for fixed, already
/// standardized samples and centers. Folds are assigned by index modulo k.
/// Ties go to the smallest sigma, then the smallest lambda.
inline CvResult cross_validate(const Matrix& xp_s, const Matrix& xq_s, const Matrix& centers,
                               const std::vector<double>& sigmas, const std::vector<double>& lambdas,
                               std::size_t folds, double alpha = 0.0) {
  if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
  const auto k = static_cast<Eigen::Index>(std::min<std::size_t>(
      folds, static_cast<std::size_t>(std::min(xp_s.rows(), xq_s.rows()))));
  if (k < 2) throw DomainError("too few samples for cross-validation");

  std::vector<double> order_s(sigmas);
  std::vector<double> order_l(lambdas);
  std::sort(order_s.begin(), order_s.end());
  std::sort(order_l.begin(), order_l.end());

  auto fold_rows = [k](const Matrix& x, Eigen::Index f) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = f; i < x.rows(); i += k) rows.push_back(i);
    return x(rows, Eigen::all);
  };

  // distances do not depend on sigma
  std::vector<Matrix> dp, dq;
  for (Eigen::Index f = 0; f < k; ++f) {
    dp.push_back(squared_distances(fold_rows(xp_s, f), centers));
    dq.push_back(squared_distances(fold_rows(xq_s, f), centers));
  }

  CvResult res;
  res.table.reserve(sigmas.size() * lambdas.size());
  double best = std::numeric_limits<double>::infinity();
  for (double sigma : order_s) {
    std::vector<KernelMoments> pf, qf;
    for (Eigen::Index f = 0; f < k; ++f) {
      pf.push_back(KernelMoments::of(gaussian_from_sq(dp[f], sigma), alpha != 0.0));
      qf.push_back(KernelMoments::of(gaussian_from_sq(dq[f], sigma)));
    }
    KernelMoments ptot = pf[0], qtot = qf[0];
    for (Eigen::Index f = 1; f < k; ++f) {
      if (alpha != 0.0) ptot.gram += pf[f].gram;
      ptot.sum += pf[f].sum;
      ptot.count += pf[f].count;
      qtot.gram += qf[f].gram;
      qtot.sum += qf[f].sum;
      qtot.count += qf[f].count;
    }
    std::vector<double> losses(order_l.size(), 0.0);
    std::vector<int> ok(order_l.size(), 1);
    for (Eigen::Index f = 0; f < k; ++f) {
      KernelMoments ptr, qtr;
      if (alpha != 0.0) ptr.gram = ptot.gram - pf[f].gram;
      ptr.sum = ptot.sum - pf[f].sum;
      ptr.count = ptot.count - pf[f].count;
      qtr.gram = qtot.gram - qf[f].gram;
      qtr.sum = qtot.sum - qf[f].sum;
      qtr.count = qtot.count - qf[f].count;
      const auto [h_mat, h] = ulsif_system(ptr, qtr, alpha);
      for (std::size_t l = 0; l < order_l.size(); ++l) {
        if (!ok[l]) continue;
        const auto w = detail::solve_regularized(h_mat, h, order_l[l]);
        if (!w) {
          ok[l] = 0;
          continue;
        }
        losses[l] += ulsif_loss(*w, pf[f], qf[f], alpha) / static_cast<double>(k);
      }
    }
    for (std::size_t l = 0; l < order_l.size(); ++l) {
      const double loss = ok[l] ? losses[l] : std::numeric_limits<double>::infinity();
      res.table.push_back({sigma, order_l[l], loss});
      if (loss < best) {
        best = loss;
        res.sigma = sigma;
        res.lambda = order_l[l];
      }
    }
  }
  if (!std::isfinite(best)) throw FitError("cross-validation found no solvable (sigma, lambda) cell");
  return res;
}

/// Cross-validation on raw samples: standardizes, draws centers, then scores the grid.
inline CvResult cross_validate(const Matrix& xp, const Matrix& xq, const CvGrid& grid, std::size_t n_centers,
                               const RngStream& stream, double alpha = 0.0) {
  grid.validate();
  const auto scale = Standardizer::pooled(xp, xq);
  const Matrix xp_s = scale.apply(xp), xq_s = scale.apply(xq);
  const Matrix centers = sample_centers(xp_s, n_centers, stream);
  return cross_validate(xp_s, xq_s, centers, detail::absolute_sigmas(grid, xp_s, xq_s), grid.lambdas, grid.folds,
                        alpha);
}

/// RuLSIF fit with cross-validated (sigma, lambda). Centers are min(M, |xp|)
/// numerator samples drawn without replacement from `stream`.
inline RatioModel fit_rulsif(const Matrix& xp, const Matrix& xq, double alpha, const CvGrid& grid,
                             std::size_t n_centers, const RngStream& stream, CvResult* diagnostics = nullptr) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("relative parameter alpha must lie in [0, 1)");
  if (xp.rows() < 2 || xq.rows() < 2) throw DomainError("ratio fitting needs at least two samples per side");
  if (xp.cols() != xq.cols() || xp.cols() < 1) throw DomainError("numerator and denominator dimensions differ");
  if (n_centers < 1) throw DomainError("at least one kernel center is required");
  if (!xp.allFinite() || !xq.allFinite()) throw FitError("non-finite input samples");
  grid.validate();

  RatioModel model;
  model.alpha = alpha;
  model.input_scale = Standardizer::pooled(xp, xq);
  const Matrix xp_s = model.input_scale.apply(xp);
  const Matrix xq_s = model.input_scale.apply(xq);
  model.basis.centers = sample_centers(xp_s, n_centers, stream);

  const auto sigmas = detail::absolute_sigmas(grid, xp_s, xq_s);
  CvResult cv;
  if (sigmas.size() == 1 && grid.lambdas.size() == 1) {
    cv.sigma = sigmas.front();
    cv.lambda = grid.lambdas.front();
    cv.table.push_back({cv.sigma, cv.lambda, std::numeric_limits<double>::quiet_NaN()});
  } else {
    cv = cross_validate(xp_s, xq_s, model.basis.centers, sigmas, grid.lambdas, grid.folds, alpha);
  }
  model.basis.sigma = cv.sigma;

  const Matrix phi_p = kernel_matrix(xp_s, model.basis.centers, cv.sigma);
  const Matrix phi_q = kernel_matrix(xq_s, model.basis.centers, cv.sigma);
  if (!phi_p.allFinite() || !phi_q.allFinite()) throw FitError("non-finite kernel matrix entries");
  const auto [h_mat, h] = ulsif_system(KernelMoments::of(phi_p, alpha != 0.0), KernelMoments::of(phi_q), alpha);

  double lambda = cv.lambda;
  auto w = detail::solve_regularized(h_mat, h, lambda);
  if (!w && lambda == 0.0) {
    double smallest = std::numeric_limits<double>::infinity();
    for (double l : grid.lambdas)
      if (l > 0.0) smallest = std::min(smallest, l);
    if (std::isfinite(smallest)) {
      lambda = smallest;
      w = detail::solve_regularized(h_mat, h, lambda);
    }
  }
  if (!w) throw FitError("uLSIF system is singular");
  model.weights = std::move(*w);
  model.lambda = lambda;
  if (diagnostics) *diagnostics = std::move(cv);
  return model;
}

inline RatioModel fit_ulsif(const Matrix& xp, const Matrix& xq, const CvGrid& grid, std::size_t n_centers,
                            const RngStream& stream, CvResult* diagnostics = nullptr) {
  return fit_rulsif(xp, xq, 0.0, grid, n_centers, stream, diagnostics);
}

/// Solves the uLSIF system for explicit centers, width and lambda (no CV, no
/// standardization). Used for small hand-checked problems.
inline RatioModel fit_ulsif_fixed(const Matrix& xp, const Matrix& xq, const Matrix& centers, double sigma,
                                  double lambda, double alpha = 0.0) {
  RatioModel model;
  model.alpha = alpha;
  model.lambda = lambda;
  model.input_scale = Standardizer::identity(xp.cols());
  model.basis = {centers, sigma};
  const auto [h_mat, h] =
      ulsif_system(KernelMoments::of(kernel_matrix(xp, centers, sigma)), KernelMoments::of(kernel_matrix(xq, centers, sigma)),
                   alpha);
  auto w = detail::solve_regularized(h_mat, h, lambda);
  if (!w) throw FitError("uLSIF system is singular");
  model.weights = std::move(*w);
  return model;
}

namespace detail {

/// Minimizes 1/2 w'Aw - h'w subject to w >= 0 by cyclic coordinate descent
/// (A symmetric positive definite), warm-started from max(w0, 0).
inline Vector solve_nonnegative(const Matrix& a, const Vector& h, const Vector& w0, std::size_t max_sweeps = 500,
                                double tol = 1e-10) {
  Vector w = w0.cwiseMax(0.0);
  Vector grad = a * w - h;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      const double next = std::max(0.0, w[j] - grad[j] / a(j, j));
      const double delta = next - w[j];
      if (delta != 0.0) {
        grad += delta * a.col(j);
        w[j] = next;
        change = std::max(change, std::abs(delta));
      }
    }
    if (change <= tol * (1.0 + w.lpNorm<Eigen::Infinity>())) break;
  }
  return w;
}

}  // namespace detail

/// Refits the weights of a fitted uLSIF model under the constraint w >= 0
/// (the constrained LSIF problem at the model's sigma and lambda), so that the
/// ratio is nonnegative everywhere without relying on the evaluation floor.
inline RatioModel refit_nonnegative(RatioModel model, const Matrix& xp, const Matrix& xq) {
  const Matrix pp = kernel_matrix(model.input_scale.apply(xp), model.basis.centers, model.basis.sigma);
  const Matrix pq = kernel_matrix(model.input_scale.apply(xq), model.basis.centers, model.basis.sigma);
  auto [a, h] = ulsif_system(KernelMoments::of(pp, model.alpha != 0.0), KernelMoments::of(pq), model.alpha);
  a.diagonal().array() += model.lambda;
  model.weights = detail::solve_nonnegative(a, h, model.weights);
  if (!(model.weights.maxCoeff() > 0.0)) throw FitError("constrained ratio fit has no positive weight");
  return model;
}

/// Held-out uLSIF loss 1/2 mean_q r^2 - mean_p r of a fitted model (raw values).
inline double heldout_loss(const RatioModel& model, const Matrix& xp, const Matrix& xq) {
  const Vector rp = kernel_matrix(model.input_scale.apply(xp), model.basis.centers, model.basis.sigma) * model.weights;
  const Vector rq = kernel_matrix(model.input_scale.apply(xq), model.basis.centers, model.basis.sigma) * model.weights;
  return 0.5 * rq.squaredNorm() / static_cast<double>(rq.size()) - rp.mean();
}

}  // namespace lfgo::densratio
