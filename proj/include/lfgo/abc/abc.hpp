#pragma once

// Rejection ABC over a reusable candidate pool. A pool holds prior draws
// theta', their summaries in the conditioning space and prior-predictive draws
// of the complementary variable, so one pool per design serves every
// conditioning point of an outer Monte Carlo loop.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lfgo/core/parallel.hpp"
#include "lfgo/core/rng.hpp"
#include "lfgo/core/stats.hpp"
#include "lfgo/sim/model.hpp"

namespace lfgo::abc {

enum class Adjustment { none, linear, mlp };

/// Space in which candidates are compared with the conditioning value.
enum class ConditionSpace {
  observation,  ///< summaries S(y'), y' ~ p(y | theta', xi); targets are QoIs z'
  qoi,          ///< the QoI z' ~ p(z | theta') itself; targets are summaries S(y')
};

struct MlpSettings {
  std::size_t hidden = 10;
  std::size_t epochs = 500;
  double step = 1e-2;
};

struct AbcConfig {
  double epsilon = 0.1;  ///< threshold on the scaled Euclidean distance
  std::size_t n_pool = 10000;
  Adjustment adjustment = Adjustment::linear;
  bool normalize_summaries = true;
  std::size_t min_accept = 50;
  MlpSettings mlp;

  void validate() const {
    if (!(epsilon >= 0.0)) throw DomainError("ABC epsilon must be nonnegative");
    if (min_accept < 1) throw DomainError("ABC min_accept must be at least 1");
    if (n_pool < min_accept) throw DomainError("ABC n_pool must be at least min_accept");
    if (adjustment == Adjustment::mlp && (mlp.epochs == 0 || mlp.hidden == 0 || !(mlp.step > 0.0)))
      throw DomainError("MLP adjustment needs positive epochs, hidden units and step size");
  }
};

struct CandidatePool {
  Matrix thetas;          ///< n x n_theta prior draws
  Matrix summaries;       ///< n x n_s conditioning-space values
  Matrix targets;         ///< n x n_t complementary prior-predictive draws
  Vector summary_scale;   ///< per-coordinate scale used in distances
  ConditionSpace space = ConditionSpace::observation;
  std::optional<DesignPoint> design;

  std::size_t size() const noexcept { return static_cast<std::size_t>(thetas.rows()); }
};

inline Vector row_vector(const Matrix& m, Eigen::Index i) { return m.row(i).transpose(); }

/// Simulates n_pool candidates at xi. Candidate i owns stream.child(i).
inline CandidatePool build_pool(const Model& model, const DesignPoint& xi, std::size_t n_pool, ConditionSpace space,
                                const RngStream& stream, bool normalize = true, std::size_t workers = 1) {
  if (n_pool < 1) throw DomainError("candidate pool needs at least one sample");
  check_design(model, xi);
  const auto n = static_cast<Eigen::Index>(n_pool);
  const bool obs = space == ConditionSpace::observation;
  const auto ns = static_cast<Eigen::Index>(obs ? model.summary_dim() : model.qoi_dim());
  const auto nt = static_cast<Eigen::Index>(obs ? model.qoi_dim() : model.summary_dim());
  CandidatePool pool;
  pool.space = space;
  pool.design = xi;
  pool.thetas.resize(n, static_cast<Eigen::Index>(model.param_dim()));
  pool.summaries.resize(n, ns);
  pool.targets.resize(n, nt);
  parallel_for(n_pool, workers, [&](std::size_t k) {
    const auto i = static_cast<Eigen::Index>(k);
    auto rng = stream.child(k).engine();
    const ParamVector theta = model.sample_prior(rng);
    const SummaryVector s = model.summarize(model.simulate(theta, xi, rng));
    const QoIValue z = model.predict(theta, rng);
    pool.thetas.row(i) = theta.values.transpose();
    pool.summaries.row(i) = (obs ? s.values : z.values).transpose();
    pool.targets.row(i) = (obs ? z.values : s.values).transpose();
  });
  pool.summary_scale = normalize ? Vector(stats::column_stddevs(pool.summaries).cwiseMax(1e-12))
                                 : Vector(Vector::Ones(pool.summaries.cols()));
  return pool;
}

struct AbcPosterior {
  Matrix thetas;                        ///< accepted (possibly adjusted) parameters
  std::vector<Eigen::Index> accepted;   ///< pool indices of the accepted candidates
  std::vector<double> distances;        ///< scaled distances of the accepted candidates
  std::size_t n_candidates = 0;
  double epsilon_used = 0.0;
  bool fallback = false;                ///< nearest-k fallback was used
  bool adjusted = false;
  bool adjustment_failed = false;       ///< regression was singular; samples left unadjusted
  SummaryVector conditioned_on;

  std::size_t size() const noexcept { return static_cast<std::size_t>(thetas.rows()); }
};

/// Scaled Euclidean distances of every pool candidate to s_obs.
inline Vector pool_distances(const CandidatePool& pool, const Vector& s_obs) {
  if (s_obs.size() != pool.summaries.cols()) throw DomainError("conditioning value dimension mismatch");
  const Vector inv = pool.summary_scale.cwiseInverse();
  return ((pool.summaries.rowwise() - s_obs.transpose()).array().rowwise() * inv.transpose().array())
      .matrix()
      .rowwise()
      .norm();
}

/// Accepts candidates with scaled distance < epsilon. When fewer than
/// min_accept pass, the min_accept nearest candidates are taken instead and
/// epsilon_used records the effective threshold. `exclude` removes one pool
/// index (for leave-one-out use).
inline AbcPosterior abc_reject(const CandidatePool& pool, const SummaryVector& s_obs, double epsilon,
                               std::size_t min_accept = 1,
                               std::optional<Eigen::Index> exclude = std::nullopt) {
  if (pool.size() == 0) throw DomainError("ABC rejection on an empty pool");
  if (!(epsilon >= 0.0)) throw DomainError("ABC epsilon must be nonnegative");
  const Vector dist = pool_distances(pool, s_obs.values);
  AbcPosterior post;
  post.n_candidates = pool.size() - (exclude ? 1 : 0);
  post.conditioned_on = s_obs;
  post.epsilon_used = epsilon;
  for (Eigen::Index i = 0; i < dist.size(); ++i)
    if (dist[i] < epsilon && (!exclude || *exclude != i)) post.accepted.push_back(i);

  const std::size_t need = std::min(std::max<std::size_t>(min_accept, 1), post.n_candidates);
  if (post.accepted.size() < need) {
    std::vector<Eigen::Index> order;
    order.reserve(pool.size());
    for (Eigen::Index i = 0; i < dist.size(); ++i)
      if (!exclude || *exclude != i) order.push_back(i);
    auto closer = [&](Eigen::Index a, Eigen::Index b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(need - 1), order.end(), closer);
    order.resize(need);
    std::sort(order.begin(), order.end());
    post.accepted = std::move(order);
    double dmax = 0.0;
    for (auto i : post.accepted) dmax = std::max(dmax, dist[i]);
    post.epsilon_used = std::nextafter(dmax, std::numeric_limits<double>::infinity());
    post.fallback = true;
  }
  post.thetas = pool.thetas(post.accepted, Eigen::all);
  post.distances.reserve(post.accepted.size());
  for (auto i : post.accepted) post.distances.push_back(dist[i]);
  return post;
}

/// Summaries (conditioning-space values) of the accepted candidates.
inline Matrix accepted_summaries(const CandidatePool& pool, const AbcPosterior& post) {
  return pool.summaries(post.accepted, Eigen::all);
}

/// One QoI draw per posterior sample; row j uses stream.child(j).
inline Matrix posterior_predictive_z(const Model& model, const AbcPosterior& post, const RngStream& stream) {
  if (post.size() == 0) throw DomainError("posterior is empty");
  Matrix out(post.thetas.rows(), static_cast<Eigen::Index>(model.qoi_dim()));
  for (Eigen::Index j = 0; j < post.thetas.rows(); ++j) {
    auto rng = stream.child(static_cast<std::uint64_t>(j)).engine();
    out.row(j) = model.predict(ParamVector(row_vector(post.thetas, j)), rng).values.transpose();
  }
  return out;
}

/// One observation draw per posterior sample at design xi; row j uses stream.child(j).
inline std::vector<Observation> posterior_predictive_y(const Model& model, const AbcPosterior& post,
                                                       const DesignPoint& xi, const RngStream& stream) {
  if (post.size() == 0) throw DomainError("posterior is empty");
  std::vector<Observation> out;
  out.reserve(post.size());
  for (Eigen::Index j = 0; j < post.thetas.rows(); ++j) {
    auto rng = stream.child(static_cast<std::uint64_t>(j)).engine();
    out.push_back(model.simulate(ParamVector(row_vector(post.thetas, j)), xi, rng));
  }
  return out;
}

/// Summaries of posterior-predictive observations, one row per posterior sample.
inline Matrix posterior_predictive_summaries(const Model& model, const AbcPosterior& post, const DesignPoint& xi,
                                             const RngStream& stream) {
  const auto ys = posterior_predictive_y(model, post, xi, stream);
  Matrix out(static_cast<Eigen::Index>(ys.size()), static_cast<Eigen::Index>(model.summary_dim()));
  for (std::size_t j = 0; j < ys.size(); ++j)
    out.row(static_cast<Eigen::Index>(j)) = model.summarize(ys[j]).values.transpose();
  return out;
}

}  // namespace lfgo::abc
