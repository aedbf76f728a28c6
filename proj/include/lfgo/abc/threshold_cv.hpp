#pragma once

// Leave-one-out selection of the ABC threshold: each held-out candidate plays
// the observed data, the rest of the pool is conditioned on it, and the
// posterior median is scored against the held-out parameter.

#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "lfgo/abc/adjust.hpp"

namespace lfgo::abc {

struct ThresholdErrorRow {
  double epsilon;
  Vector median_abs_error;  ///< one entry per parameter
};

struct ThresholdCvResult {
  double epsilon_star = 0.0;
  std::vector<ThresholdErrorRow> table;  ///< one row per grid value, in grid order
};

inline ThresholdCvResult cv_select_threshold(const CandidatePool& pool, const std::vector<double>& epsilon_grid,
                                             std::size_t n_holdout, Adjustment mode, const AbcConfig& cfg,
                                             const std::optional<Bounds>& support, const RngStream& stream,
                                             std::size_t workers = 1) {
  if (epsilon_grid.empty()) throw DomainError("threshold grid must be nonempty");
  for (double e : epsilon_grid)
    if (!(e > 0.0) || !std::isfinite(e)) throw DomainError("threshold grid values must be positive and finite");
  if (n_holdout < 1 || n_holdout > pool.size()) throw DomainError("n_holdout must lie in [1, pool size]");

  // choose held-out candidates without replacement
  std::vector<Eigen::Index> idx(pool.size());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  auto rng = stream.child(0).engine();
  for (std::size_t i = 0; i < n_holdout; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform01() * static_cast<double>(pool.size() - i));
    std::swap(idx[i], idx[std::min(j, pool.size() - 1)]);
  }
  idx.resize(n_holdout);

  const auto n_param = pool.thetas.cols();
  const std::size_t n_eps = epsilon_grid.size();
  // errors[e][h] is the per-parameter absolute error of the posterior median
  std::vector<std::vector<Vector>> errors(n_eps, std::vector<Vector>(n_holdout));
  parallel_for(n_holdout, workers, [&](std::size_t h) {
    const Eigen::Index held = idx[h];
    const SummaryVector s_obs(row_vector(pool.summaries, held));
    const Vector truth = row_vector(pool.thetas, held);
    for (std::size_t e = 0; e < n_eps; ++e) {
      AbcPosterior post = abc_reject(pool, s_obs, epsilon_grid[e], cfg.min_accept, held);
      if (mode != Adjustment::none) {
        AdjustOptions opt{pool.summary_scale, support, cfg.mlp, stream.child(1).child(h).child(e)};
        const Matrix s = accepted_summaries(pool, post);
        post = regression_adjust(std::move(post), s, s_obs, mode, opt);
      }
      Vector err(n_param);
      for (Eigen::Index p = 0; p < n_param; ++p) {
        std::vector<double> col(post.thetas.col(p).begin(), post.thetas.col(p).end());
        err[p] = std::abs(stats::median(std::move(col)) - truth[p]);
      }
      errors[e][h] = std::move(err);
    }
  });

  ThresholdCvResult res;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < n_eps; ++e) {
    Vector med(n_param);
    for (Eigen::Index p = 0; p < n_param; ++p) {
      std::vector<double> col;
      col.reserve(n_holdout);
      for (const auto& v : errors[e]) col.push_back(v[p]);
      med[p] = stats::median(std::move(col));
    }
    if (med.sum() < best) {
      best = med.sum();
      res.epsilon_star = epsilon_grid[e];
    }
    res.table.push_back({epsilon_grid[e], std::move(med)});
  }
  return res;
}

}  // namespace lfgo::abc
