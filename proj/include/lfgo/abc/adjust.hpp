#pragma once

// Regression adjustment of accepted ABC samples: fit theta = g(s) + e on the
// accepted pairs and move every sample to g(s_obs) + e.

#include <cmath>
#include <optional>
#include <random>

#include <Eigen/QR>

#include "lfgo/abc/abc.hpp"

namespace lfgo::abc {

struct AdjustOptions {
  Vector summary_scale;           ///< divides summaries before regression; empty means ones
  std::optional<Bounds> support;  ///< adjusted samples are clipped into this box
  MlpSettings mlp;
  std::optional<RngStream> stream;  ///< MLP initialization
};

namespace detail {

inline Matrix centered_inputs(const Matrix& summaries, const Vector& s_obs, const Vector& scale) {
  Matrix x = summaries.rowwise() - s_obs.transpose();
  if (scale.size() == x.cols()) x = x.array().rowwise() / scale.transpose().array();
  return x;
}

inline void clip_rows(Matrix& thetas, const std::optional<Bounds>& support) {
  if (!support) return;
  for (Eigen::Index i = 0; i < thetas.rows(); ++i) thetas.row(i) = support->clamp(thetas.row(i).transpose()).transpose();
}

/// theta_adj = theta - X b with X the centered summaries: linear local regression.
/// Exactly collinear summaries (e.g. compartments with a fixed total) are
/// handled by the pivoted basic solution, which drops aliased columns. A design
/// with no summary variation at all is singular and yields nullopt.
inline std::optional<Matrix> linear_adjust(const Matrix& thetas, const Matrix& x) {
  Matrix design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 2) return std::nullopt;
  const Matrix coef = qr.solve(thetas);
  if (!coef.allFinite()) return std::nullopt;
  return Matrix(thetas - x * coef.bottomRows(x.cols()));
}

/// One-hidden-layer tanh network trained full-batch with Adam on standardized
/// inputs and targets. Returns theta_adj = g(0) + (theta - g(x)).
inline Matrix mlp_adjust(const Matrix& thetas, const Matrix& x, const MlpSettings& cfg, const RngStream& stream) {
  const Eigen::Index n = x.rows(), d = x.cols(), p = thetas.cols();
  const auto h = static_cast<Eigen::Index>(cfg.hidden);
  const Vector x_sd = stats::column_stddevs(x).cwiseMax(1e-12);
  const Vector t_mean = stats::column_means(thetas);
  const Vector t_sd = stats::column_stddevs(thetas).cwiseMax(1e-12);
  const Matrix xs = x.array().rowwise() / x_sd.transpose().array();
  const Matrix ts = (thetas.rowwise() - t_mean.transpose()).array().rowwise() / t_sd.transpose().array();

  auto rng = stream.engine();
  std::normal_distribution<double> init(0.0, 1.0);
  Matrix w1(h, d), w2(p, h);
  for (Eigen::Index i = 0; i < w1.size(); ++i) w1.data()[i] = init(rng) / std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < w2.size(); ++i) w2.data()[i] = init(rng) / std::sqrt(static_cast<double>(h));
  Vector b1 = Vector::Zero(h), b2 = Vector::Zero(p);

  struct Moments {
    Matrix m, v;
  };
  auto zeros_like = [](const auto& a) { return Moments{Matrix::Zero(a.rows(), a.cols()), Matrix::Zero(a.rows(), a.cols())}; };
  Moments mw1 = zeros_like(w1), mw2 = zeros_like(w2), mb1 = zeros_like(b1), mb2 = zeros_like(b2);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  auto adam = [&](auto& param, const Matrix& grad, Moments& mom, double t) {
    mom.m = beta1 * mom.m + (1 - beta1) * grad;
    mom.v = beta2 * mom.v + (1 - beta2) * grad.cwiseAbs2();
    const Matrix mhat = mom.m / (1 - std::pow(beta1, t));
    const Matrix vhat = mom.v / (1 - std::pow(beta2, t));
    param -= (cfg.step * mhat.array() / (vhat.array().sqrt() + eps)).matrix();
  };

  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const Matrix a = ((xs * w1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();  // n x h
    const Matrix out = (a * w2.transpose()).rowwise() + b2.transpose();                          // n x p
    const Matrix err = (out - ts) * (2.0 * inv_n);
    const Matrix gw2 = err.transpose() * a;
    const Vector gb2 = err.colwise().sum().transpose();
    const Matrix da = (err * w2).array() * (1.0 - a.array().square());
    const Matrix gw1 = da.transpose() * xs;
    const Vector gb1 = da.colwise().sum().transpose();
    const auto t = static_cast<double>(epoch);
    adam(w1, gw1, mw1, t);
    adam(w2, gw2, mw2, t);
    adam(b1, gb1, mb1, t);
    adam(b2, gb2, mb2, t);
  }
  const Matrix a = ((xs * w1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();
  const Matrix fitted = (a * w2.transpose()).rowwise() + b2.transpose();
  const Vector at_obs = w2 * b1.array().tanh().matrix() + b2;  // x = 0 is s_obs
  Matrix adj = (ts - fitted).rowwise() + at_obs.transpose();
  adj = (adj.array().rowwise() * t_sd.transpose().array()).matrix().rowwise() + t_mean.transpose();
  return adj;
}

}  // namespace detail

/// Adjusts an ABC posterior. `summaries` are the conditioning-space values of
/// the accepted candidates (row-aligned with post.thetas).
inline AbcPosterior regression_adjust(AbcPosterior post, const Matrix& summaries, const SummaryVector& s_obs,
                                      Adjustment mode, const AdjustOptions& opt = {}) {
  if (mode == Adjustment::none) return post;
  if (summaries.rows() != post.thetas.rows()) throw DomainError("summaries and posterior samples are misaligned");
  if (summaries.cols() != s_obs.values.size()) throw DomainError("conditioning value dimension mismatch");
  if (post.thetas.rows() < summaries.cols() + 2)
    throw DomainError("regression adjustment needs at least dim(s) + 2 accepted samples");
  const Matrix x = detail::centered_inputs(summaries, s_obs.values, opt.summary_scale);

  if (mode == Adjustment::linear) {
    auto adj = detail::linear_adjust(post.thetas, x);
    if (!adj) {
      post.adjustment_failed = true;
      return post;
    }
    post.thetas = std::move(*adj);
  } else {
    if (opt.mlp.epochs == 0) throw DomainError("MLP adjustment needs at least one training epoch");
    if (x.cwiseAbs().maxCoeff() == 0.0) {
      post.adjusted = true;  // every summary equals s_obs: the identity adjustment
      return post;
    }
    post.thetas = detail::mlp_adjust(post.thetas, x, opt.mlp, opt.stream.value_or(RngStream(0)));
  }
  detail::clip_rows(post.thetas, opt.support);
  post.adjusted = true;
  return post;
}

/// Convenience overload using a pool's own scale and a model's prior support.
inline AbcPosterior regression_adjust(AbcPosterior post, const CandidatePool& pool, const SummaryVector& s_obs,
                                      Adjustment mode, const Model& model, const MlpSettings& mlp = {},
                                      std::optional<RngStream> stream = std::nullopt) {
  AdjustOptions opt{pool.summary_scale, model.param_support(), mlp, std::move(stream)};
  const Matrix s = accepted_summaries(pool, post);
  return regression_adjust(std::move(post), s, s_obs, mode, opt);
}

}  // namespace lfgo::abc
