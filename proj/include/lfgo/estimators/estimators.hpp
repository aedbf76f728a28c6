#pragma once

// Expected-utility estimators for U_Z(xi) = I(Y; Z | xi).
//
//  dr1        mean_i log r1(z_i),  r1 = p(z | y_i, xi) / p(z), fitted by uLSIF on
//             ABC posterior-predictive z (numerator) vs prior-predictive z
//  dr2        mean_i log r2(S(y_i)), r2 = p(y | z_i, xi) / p(y | xi), with the
//             roles of y and z exchanged
//  kde        dr1's sampling pipeline with Gaussian KDEs in place of the ratio fit
//  nmc_param  nested MC for I(Y; Theta) with an explicit likelihood
//  nmc_z1     nested MC through p(z | theta) and ABC posteriors given y_i
//  nmc_z2     nested MC through p(y | theta, xi) and ABC posteriors given z_i
//
// Stream layout per replicate r (base = stream.child(r)): joint samples use
// base.child(0), the candidate pool base.child(1), outer point i
// base.child(2).child(i), nested-MC prior draws base.child(3).child(i).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "lfgo/abc/adjust.hpp"
#include "lfgo/densratio/ulsif.hpp"
#include "lfgo/estimators/kde.hpp"
#include "lfgo/estimators/utility.hpp"

namespace lfgo::est {

namespace detail {

struct ReplicateResult {
  double value = 0.0;
  std::size_t failed = 0;
};

/// Averages fn(i) over the outer loop, dropping points whose fit or
/// simulation fails. Too many failures abort the estimate.
template <class PointFn>
ReplicateResult outer_average(std::size_t n, const EstimatorConfig& cfg, PointFn&& fn) {
  std::vector<double> values(n, std::numeric_limits<double>::quiet_NaN());
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    try {
      values[i] = fn(i);
    } catch (const FitError&) {
    } catch (const SimulationError&) {
    } catch (const DomainError&) {
    }
  });
  ReplicateResult res;
  double sum = 0.0;
  std::size_t ok = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++ok;
    }
  }
  res.failed = n - ok;
  if (ok == 0 || static_cast<double>(res.failed) > cfg.max_failure_fraction * static_cast<double>(n))
    throw EstimationError("estimation failed at " + std::to_string(res.failed) + " of " + std::to_string(n) +
                          " outer points");
  res.value = sum / static_cast<double>(ok);
  return res;
}

/// Runs a per-replicate estimator n_replicates times on independent child
/// streams and aggregates.
inline UtilityEstimate replicate(const DesignPoint& xi, EstimatorKind kind, const EstimatorConfig& cfg,
                                 const RngStream& stream,
                                 const std::function<ReplicateResult(const RngStream&)>& one) {
  const auto start = std::chrono::steady_clock::now();
  UtilityEstimate out{xi, 0.0, 0.0, 0, 0, kind, 0, 0, 0.0, {}};
  out.kind = kind;
  out.n_outer = cfg.n_outer;
  out.n_replicates = cfg.n_replicates;
  out.seed = stream.master_seed();
  for (std::size_t r = 0; r < cfg.n_replicates; ++r) {
    const auto res = one(stream.child(r));
    out.replicate_values.push_back(res.value);
    out.n_failed += res.failed;
  }
  const auto agg = replicate_aggregate(out.replicate_values);
  out.mean = agg.mean;
  out.std = agg.std;
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// m distinct indices in [0, n), Floyd's algorithm (no full permutation).
inline std::vector<Eigen::Index> sample_indices(std::size_t n, std::size_t m, const RngStream& stream) {
  m = std::min(m, n);
  auto rng = stream.engine();
  std::vector<Eigen::Index> pick;
  pick.reserve(m);
  std::vector<char> used(n, 0);
  for (std::size_t j = n - m; j < n; ++j) {
    auto t = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(j + 1));
    t = std::min(t, j);
    const std::size_t chosen = used[t] ? j : t;
    used[chosen] = 1;
    pick.push_back(static_cast<Eigen::Index>(chosen));
  }
  std::sort(pick.begin(), pick.end());
  return pick;
}

/// ABC posterior for one conditioning value, with the configured adjustment,
/// thinned to cfg.max_posterior rows. `stream` feeds the adjustment (child 0)
/// and the thinning (child 1).
inline abc::AbcPosterior condition(const Model& model, const abc::CandidatePool& pool, const SummaryVector& s,
                                   const EstimatorConfig& cfg, const RngStream& stream) {
  abc::AbcPosterior post = abc::abc_reject(pool, s, cfg.abc.epsilon, cfg.abc.min_accept);
  if (cfg.abc.adjustment != abc::Adjustment::none && post.thetas.rows() >= pool.summaries.cols() + 2)
    post = abc::regression_adjust(std::move(post), pool, s, cfg.abc.adjustment, model, cfg.abc.mlp, stream.child(0));
  if (cfg.max_posterior > 0 && post.size() > cfg.max_posterior) {
    const auto keep = sample_indices(post.size(), cfg.max_posterior, stream.child(1));
    post.thetas = Matrix(post.thetas(keep, Eigen::all));
    std::vector<Eigen::Index> acc;
    std::vector<double> dist;
    for (auto k : keep) {
      acc.push_back(post.accepted[static_cast<std::size_t>(k)]);
      dist.push_back(post.distances[static_cast<std::size_t>(k)]);
    }
    post.accepted = std::move(acc);
    post.distances = std::move(dist);
  }
  return post;
}

/// m rows of the pool's prior-predictive targets, drawn without replacement.
inline Matrix prior_predictive_rows(const abc::CandidatePool& pool, std::size_t m, const RngStream& stream) {
  return pool.targets(sample_indices(pool.size(), m, stream), Eigen::all);
}

inline Matrix rows_of(const std::vector<JointSample>& joint, bool take_z, const Model& model) {
  const auto dim = static_cast<Eigen::Index>(take_z ? model.qoi_dim() : model.summary_dim());
  Matrix out(static_cast<Eigen::Index>(joint.size()), dim);
  for (std::size_t i = 0; i < joint.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) =
        (take_z ? joint[i].z.values : model.summarize(joint[i].y).values).transpose();
  return out;
}

inline densratio::RatioModel fit_ratio(const Matrix& num, const Matrix& den, const RatioSettings& cfg,
                                      const RngStream& stream) {
  auto model = densratio::fit_rulsif(num, den, cfg.alpha, cfg.grid, cfg.centers, stream);
  return cfg.nonnegative ? densratio::refit_nonnegative(std::move(model), num, den) : model;
}

inline double log_mean_exp(std::vector<double>& terms) {
  return stats::logsumexp(terms) - std::log(static_cast<double>(terms.size()));
}

}  // namespace detail

/// U_Z via r1 = p(z | y, xi) / p(z): condition on observation summaries.
inline UtilityEstimate utility_dr1(const Model& model, const DesignPoint& xi, const EstimatorConfig& cfg,
                                   const RngStream& stream) {
  cfg.validate();
  check_design(model, xi);
  return detail::replicate(xi, EstimatorKind::dr1, cfg, stream, [&](const RngStream& base) {
    const auto joint = sample_joint(model, xi, cfg.n_outer, base.child(0), cfg.workers);
    const auto pool = abc::build_pool(model, xi, cfg.abc.n_pool, abc::ConditionSpace::observation, base.child(1),
                                      cfg.abc.normalize_summaries, cfg.workers);
    return detail::outer_average(cfg.n_outer, cfg, [&](std::size_t i) {
      const RngStream ps = base.child(2).child(i);
      const SummaryVector s_obs = model.summarize(joint[i].y);
      const auto post = detail::condition(model, pool, s_obs, cfg, ps.child(3));
      const Matrix num = abc::posterior_predictive_z(model, post, ps.child(0));
      const Matrix den = detail::prior_predictive_rows(pool, static_cast<std::size_t>(num.rows()), ps.child(1));
      const auto ratio = detail::fit_ratio(num, den, cfg.ratio, ps.child(2));
      return ratio.log_ratio(joint[i].z.values);
    });
  });
}

/// U_Z via r2 = p(y | z, xi) / p(y | xi): condition on the QoI.
inline UtilityEstimate utility_dr2(const Model& model, const DesignPoint& xi, const EstimatorConfig& cfg,
                                   const RngStream& stream) {
  cfg.validate();
  check_design(model, xi);
  return detail::replicate(xi, EstimatorKind::dr2, cfg, stream, [&](const RngStream& base) {
    const auto joint = sample_joint(model, xi, cfg.n_outer, base.child(0), cfg.workers);
    const auto pool = abc::build_pool(model, xi, cfg.abc.n_pool, abc::ConditionSpace::qoi, base.child(1),
                                      cfg.abc.normalize_summaries, cfg.workers);
    return detail::outer_average(cfg.n_outer, cfg, [&](std::size_t i) {
      const RngStream ps = base.child(2).child(i);
      const SummaryVector z_obs(joint[i].z.values);
      const auto post = detail::condition(model, pool, z_obs, cfg, ps.child(3));
      const Matrix num = abc::posterior_predictive_summaries(model, post, xi, ps.child(0));
      const Matrix den = detail::prior_predictive_rows(pool, static_cast<std::size_t>(num.rows()), ps.child(1));
      const auto ratio = detail::fit_ratio(num, den, cfg.ratio, ps.child(2));
      return ratio.log_ratio(model.summarize(joint[i].y).values);
    });
  });
}

/// dr1's sampling pipeline with Gaussian KDEs on posterior- and prior-predictive z.
/// Bandwidths are floored at 1e-3 of the prior-predictive spread so that a
/// collapsed posterior-predictive sample keeps a finite density.
inline UtilityEstimate utility_kde(const Model& model, const DesignPoint& xi, const EstimatorConfig& cfg,
                                   const RngStream& stream) {
  cfg.validate();
  check_design(model, xi);
  return detail::replicate(xi, EstimatorKind::kde, cfg, stream, [&](const RngStream& base) {
    const auto joint = sample_joint(model, xi, cfg.n_outer, base.child(0), cfg.workers);
    const auto pool = abc::build_pool(model, xi, cfg.abc.n_pool, abc::ConditionSpace::observation, base.child(1),
                                      cfg.abc.normalize_summaries, cfg.workers);
    const Vector floor = (stats::column_stddevs(pool.targets) * 1e-3).cwiseMax(1e-12);
    const GaussianKde prior(pool.targets, floor);
    return detail::outer_average(cfg.n_outer, cfg, [&](std::size_t i) {
      const RngStream ps = base.child(2).child(i);
      const SummaryVector s_obs = model.summarize(joint[i].y);
      const auto post = detail::condition(model, pool, s_obs, cfg, ps.child(3));
      const GaussianKde posterior(abc::posterior_predictive_z(model, post, ps.child(0)), floor);
      return posterior.log_density(joint[i].z.values) - prior.log_density(joint[i].z.values);
    });
  });
}

/// Nested MC for I(Y; Theta): mean_i [log p(y_i | theta_i) - log mean_k p(y_i | theta_k)].
inline UtilityEstimate utility_nmc_param(const Model& model, const DesignPoint& xi, const EstimatorConfig& cfg,
                                         const RngStream& stream) {
  cfg.validate();
  check_design(model, xi);
  if (!model.has_likelihood()) throw CapabilityError(model.name() + ": nested MC needs an explicit likelihood");
  return detail::replicate(xi, EstimatorKind::nmc_param, cfg, stream, [&](const RngStream& base) {
    const auto joint = sample_joint(model, xi, cfg.n_outer, base.child(0), cfg.workers);
    return detail::outer_average(cfg.n_outer, cfg, [&](std::size_t i) {
      auto rng = base.child(3).child(i).engine();
      std::vector<double> terms(cfg.n_inner);
      for (auto& t : terms) t = model.log_likelihood(joint[i].y, model.sample_prior(rng), xi);
      return model.log_likelihood(joint[i].y, joint[i].theta, xi) - detail::log_mean_exp(terms);
    });
  });
}

/// Nested MC through the QoI density: numerator over ABC posterior draws given
/// y_i, denominator over fresh prior draws. Refuses deterministic QoIs, whose
/// conditional density is a point mass.
inline UtilityEstimate utility_nmc_z1(const Model& model, const DesignPoint& xi, const EstimatorConfig& cfg,
                                      const RngStream& stream) {
  cfg.validate();
  check_design(model, xi);
  if (model.deterministic_qoi() || !model.has_qoi_density())
    throw CapabilityError(model.name() + ": nmc_z1 needs a stochastic QoI with an explicit density");
  return detail::replicate(xi, EstimatorKind::nmc_z1, cfg, stream, [&](const RngStream& base) {
    const auto joint = sample_joint(model, xi, cfg.n_outer, base.child(0), cfg.workers);
    const auto pool = abc::build_pool(model, xi, cfg.abc.n_pool, abc::ConditionSpace::observation, base.child(1),
                                      cfg.abc.normalize_summaries, cfg.workers);
    return detail::outer_average(cfg.n_outer, cfg, [&](std::size_t i) {
      const RngStream ps = base.child(2).child(i);
      const auto post = detail::condition(model, pool, model.summarize(joint[i].y), cfg, ps.child(3));
      std::vector<double> num(post.size());
      for (std::size_t j = 0; j < post.size(); ++j)
        num[j] = model.log_qoi_density(joint[i].z, ParamVector(abc::row_vector(post.thetas, static_cast<Eigen::Index>(j))));
      auto rng = base.child(3).child(i).engine();
      std::vector<double> den(cfg.n_inner);
      for (auto& t : den) t = model.log_qoi_density(joint[i].z, model.sample_prior(rng));
      return detail::log_mean_exp(num) - detail::log_mean_exp(den);
    });
  });
}

/// Nested MC through the likelihood: numerator over ABC posterior draws given
/// z_i, denominator over fresh prior draws.
inline UtilityEstimate utility_nmc_z2(const Model& model, const DesignPoint& xi, const EstimatorConfig& cfg,
                                      const RngStream& stream) {
  cfg.validate();
  check_design(model, xi);
  if (!model.has_likelihood()) throw CapabilityError(model.name() + ": nmc_z2 needs an explicit likelihood");
  return detail::replicate(xi, EstimatorKind::nmc_z2, cfg, stream, [&](const RngStream& base) {
    const auto joint = sample_joint(model, xi, cfg.n_outer, base.child(0), cfg.workers);
    const auto pool = abc::build_pool(model, xi, cfg.abc.n_pool, abc::ConditionSpace::qoi, base.child(1),
                                      cfg.abc.normalize_summaries, cfg.workers);
    return detail::outer_average(cfg.n_outer, cfg, [&](std::size_t i) {
      const RngStream ps = base.child(2).child(i);
      const auto post = detail::condition(model, pool, SummaryVector(joint[i].z.values), cfg, ps.child(3));
      std::vector<double> num(post.size());
      for (std::size_t j = 0; j < post.size(); ++j)
        num[j] = model.log_likelihood(joint[i].y, ParamVector(abc::row_vector(post.thetas, static_cast<Eigen::Index>(j))), xi);
      auto rng = base.child(3).child(i).engine();
      std::vector<double> den(cfg.n_inner);
      for (auto& t : den) t = model.log_likelihood(joint[i].y, model.sample_prior(rng), xi);
      return detail::log_mean_exp(num) - detail::log_mean_exp(den);
    });
  });
}

/// Dispatches on the estimator kind.
inline UtilityEstimate estimate_utility(const Model& model, const DesignPoint& xi, EstimatorKind kind,
                                        const EstimatorConfig& cfg, const RngStream& stream) {
  switch (kind) {
    case EstimatorKind::dr1: return utility_dr1(model, xi, cfg, stream);
    case EstimatorKind::dr2: return utility_dr2(model, xi, cfg, stream);
    case EstimatorKind::nmc_param: return utility_nmc_param(model, xi, cfg, stream);
    case EstimatorKind::nmc_z1: return utility_nmc_z1(model, xi, cfg, stream);
    case EstimatorKind::nmc_z2: return utility_nmc_z2(model, xi, cfg, stream);
    default: return utility_kde(model, xi, cfg, stream);
  }
}

}  // namespace lfgo::est
