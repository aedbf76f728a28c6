#pragma once

// Gaussian-process Bayesian optimization over a box of designs. The surrogate
// works in unit-cube coordinates on standardized utilities: squared-exponential
// ARD kernel, constant mean, and a homoscedastic noise variance learned by
// marginal likelihood on top of each point's known replicate variance.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>

#include "lfgo/design/grid.hpp"

namespace lfgo::design {

struct ObjectiveValue {
  double mean = 0.0;
  double variance = 0.0;  ///< variance of the mean (replicate variance / n)
};

using Objective = std::function<ObjectiveValue(const DesignPoint&, const RngStream&)>;

struct BoSettings {
  std::size_t epochs = 7;
  std::size_t batch = 1;
  std::size_t initial_points = 0;  ///< 0 means 5 * design dimension
  std::size_t acquisition_starts = 32;
  double ei_jitter = 0.01;
  std::size_t workers = 1;

  void validate() const {
    if (epochs < 1) throw DomainError("BO needs at least one epoch");
    if (batch < 1) throw DomainError("BO batch must be at least 1");
    if (acquisition_starts < 1) throw DomainError("BO needs at least one acquisition start");
    if (!(ei_jitter >= 0.0)) throw DomainError("EI jitter must be nonnegative");
  }
};

struct GpHyper {
  Vector log_lengths;
  double log_signal = 0.0;
  double log_noise = std::log(1e-2);
};

struct BoTraceRow {
  std::size_t epoch;  ///< 0 for the initial design
  Vector xi;
  double value;
  double best_so_far;
};

struct BoState {
  Bounds bounds;
  std::vector<Vector> designs;  ///< evaluated points, in evaluation order
  std::vector<double> values;
  std::vector<double> variances;
  GpHyper hyper;
  std::vector<BoTraceRow> trace;
  bool surrogate_failed = false;  ///< remaining proposals came from random search
  std::size_t epochs_run = 0;

  std::size_t best_index() const {
    std::size_t b = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] > values[b]) b = i;
    return b;
  }
  const Vector& best_design() const { return designs.at(best_index()); }
  double best_value() const { return values.at(best_index()); }
};

namespace detail {

inline constexpr double kMinLength = 1e-2, kMaxLength = 10.0;
inline constexpr double kMinSignal = 1e-2, kMaxSignal = 1e2;
inline constexpr double kMinNoise = 1e-8, kMaxNoise = 1.0;

/// Bounded compass search: maximizes f over a box, halving the step when no
/// coordinate move improves.
inline Vector pattern_search(const std::function<double(const Vector&)>& f, Vector x, const Vector& lo,
                             const Vector& hi, double step, double min_step = 1e-4, std::size_t max_evals = 2000) {
  double fx = f(x);
  std::size_t evals = 1;
  while (step >= min_step && evals < max_evals) {
    bool moved = false;
    for (Eigen::Index d = 0; d < x.size() && evals < max_evals; ++d) {
      for (double sgn : {1.0, -1.0}) {
        Vector y = x;
        y[d] = std::clamp(y[d] + sgn * step * (hi[d] - lo[d]), lo[d], hi[d]);
        if (y[d] == x[d]) continue;
        const double fy = f(y);
        ++evals;
        if (fy > fx) {
          x = std::move(y);
          fx = fy;
          moved = true;
          break;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  return x;
}

class Gp {
 public:
  Gp(std::vector<Vector> x, const std::vector<double>& y, const std::vector<double>& var, GpHyper hyper)
      : x_(std::move(x)), hyper_(std::move(hyper)) {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Vector yv(n);
    for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];
    mean_ = yv.mean();
    scale_ = n > 1 ? std::sqrt((yv.array() - mean_).square().sum() / static_cast<double>(n - 1)) : 1.0;
    if (!(scale_ > 1e-12)) scale_ = 1.0;
    ys_ = (yv.array() - mean_) / scale_;
    known_noise_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) known_noise_[i] = var[static_cast<std::size_t>(i)] / (scale_ * scale_);
    ok_ = factor();
  }

  bool ok() const noexcept { return ok_; }
  const GpHyper& hyper() const noexcept { return hyper_; }

  double kernel(const Vector& a, const Vector& b) const {
    const Vector l = hyper_.log_lengths.array().exp();
    return std::exp(hyper_.log_signal - 0.5 * (a - b).cwiseQuotient(l).squaredNorm());
  }

  double log_marginal() const {
    if (!ok_) return -std::numeric_limits<double>::infinity();
    const double logdet = 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
    return -0.5 * ys_.dot(alpha_) - 0.5 * logdet - 0.5 * static_cast<double>(ys_.size()) * std::log(2 * std::numbers::pi);
  }

  /// Posterior mean and variance of the latent utility in original units.
  std::pair<double, double> predict(const Vector& u) const {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Vector k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = kernel(u, x_[static_cast<std::size_t>(i)]);
    const double mu = k.dot(alpha_);
    const double var = std::max(std::exp(hyper_.log_signal) - k.dot(chol_.solve(k)), 1e-12);
    return {mean_ + scale_ * mu, scale_ * scale_ * var};
  }

  /// Fits hyperparameters by maximizing the log marginal likelihood from a few starts.
  static GpHyper fit(const std::vector<Vector>& x, const std::vector<double>& y, const std::vector<double>& var,
                     const GpHyper& warm) {
    const auto d = x.front().size();
    const Eigen::Index p = d + 2;
    Vector lo(p), hi(p);
    lo.head(d).setConstant(std::log(kMinLength));
    hi.head(d).setConstant(std::log(kMaxLength));
    lo[d] = std::log(kMinSignal);
    hi[d] = std::log(kMaxSignal);
    lo[d + 1] = std::log(kMinNoise);
    hi[d + 1] = std::log(kMaxNoise);
    auto unpack = [d](const Vector& v) { return GpHyper{v.head(d), v[d], v[d + 1]}; };
    auto objective = [&](const Vector& v) { return Gp(x, y, var, unpack(v)).log_marginal(); };

    std::vector<Vector> starts;
    Vector w(p);
    w << warm.log_lengths, warm.log_signal, warm.log_noise;
    starts.push_back(w.cwiseMax(lo).cwiseMin(hi));
    for (double l : {std::log(0.1), std::log(0.3), std::log(1.0)}) {
      Vector s(p);
      s.head(d).setConstant(l);
      s[d] = 0.0;
      s[d + 1] = std::log(1e-2);
      starts.push_back(s);
    }
    Vector best = starts.front();
    double best_f = -std::numeric_limits<double>::infinity();
    for (const auto& s : starts) {
      const Vector cand = pattern_search(objective, s, lo, hi, 0.125, 1e-3, 600);
      const double f = objective(cand);
      if (f > best_f) {
        best_f = f;
        best = cand;
      }
    }
    if (!std::isfinite(best_f)) throw FitError("GP marginal likelihood is not finite");
    return unpack(best);
  }

 private:
  bool factor() {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j)
        k(i, j) = k(j, i) = kernel(x_[static_cast<std::size_t>(i)], x_[static_cast<std::size_t>(j)]);
    k.diagonal().array() += known_noise_.array() + std::exp(hyper_.log_noise) + 1e-10;
    chol_.compute(k);
    if (chol_.info() != Eigen::Success) return false;
    alpha_ = chol_.solve(ys_);
    return alpha_.allFinite();
  }

  std::vector<Vector> x_;
  GpHyper hyper_;
  Vector ys_, known_noise_, alpha_;
  double mean_ = 0.0, scale_ = 1.0;
  Eigen::LLT<Matrix> chol_;
  bool ok_ = false;
};

inline double expected_improvement(double mu, double var, double best, double jitter) {
  const double sd = std::sqrt(var);
  const double gain = mu - best - jitter;
  if (sd < 1e-12) return std::max(gain, 0.0);
  const double z = gain / sd;
  return gain * stats::normal_cdf(z) + sd * stats::normal_pdf(z);
}

/// Latin hypercube sample of n points in [0,1]^d.
inline std::vector<Vector> latin_hypercube(std::size_t n, std::size_t d, const RngStream& stream) {
  auto rng = stream.engine();
  std::vector<Vector> pts(n, Vector(static_cast<Eigen::Index>(d)));
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      const auto j = std::min(i - 1, static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i)));
      std::swap(perm[i - 1], perm[j]);
    }
    for (std::size_t i = 0; i < n; ++i)
      pts[i][static_cast<Eigen::Index>(k)] = (static_cast<double>(perm[i]) + rng.uniform01()) / static_cast<double>(n);
  }
  return pts;
}

}  // namespace detail

/// Maximizes `objective` over `bounds`. Evaluation k (in evaluation order) uses
/// stream.child(1).child(k); the initial design uses stream.child(0), and the
/// acquisition starts of epoch e use stream.child(2).child(e).
inline BoState bayes_opt(const Objective& objective, const Bounds& bounds, const BoSettings& settings,
                         const RngStream& stream) {
  settings.validate();
  const std::size_t d = bounds.dim();
  BoState st;
  st.bounds = bounds;
  st.hyper.log_lengths = Vector::Constant(static_cast<Eigen::Index>(d), std::log(0.3));

  auto evaluate = [&](const std::vector<Vector>& units, std::size_t epoch) {
    const std::size_t first = st.designs.size();
    std::vector<ObjectiveValue> out(units.size());
    parallel_for(units.size(), settings.workers, [&](std::size_t j) {
      const DesignPoint xi(bounds.clamp(bounds.from_unit(units[j])), bounds);
      out[j] = objective(xi, stream.child(1).child(first + j));
    });
    for (std::size_t j = 0; j < units.size(); ++j) {
      if (!std::isfinite(out[j].mean)) throw EstimationError("objective returned a non-finite value");
      st.designs.push_back(bounds.clamp(bounds.from_unit(units[j])));
      st.values.push_back(out[j].mean);
      st.variances.push_back(std::max(out[j].variance, 0.0));
      st.trace.push_back({epoch, st.designs.back(), out[j].mean, st.best_value()});
    }
  };

  const std::size_t n0 = settings.initial_points ? settings.initial_points : 5 * d;
  evaluate(detail::latin_hypercube(n0, d, stream.child(0)), 0);

  for (std::size_t epoch = 1; epoch <= settings.epochs; ++epoch) {
    const RngStream es = stream.child(2).child(epoch);
    auto rng = es.engine();
    auto random_unit = [&] {
      Vector u(static_cast<Eigen::Index>(d));
      for (auto& v : u) v = rng.uniform01();
      return u;
    };
    std::vector<Vector> proposals;
    if (!st.surrogate_failed) {
      try {
        std::vector<Vector> units;
        for (const auto& x : st.designs) units.push_back(bounds.to_unit(x));
        std::vector<double> ys = st.values, vars = st.variances;
        st.hyper = detail::Gp::fit(units, ys, vars, st.hyper);
        // kriging believer: each batch member is added at its predicted mean
        for (std::size_t b = 0; b < settings.batch; ++b) {
          const detail::Gp gp(units, ys, vars, st.hyper);
          if (!gp.ok()) throw FitError("GP factorization failed");
          const double best = *std::max_element(ys.begin(), ys.end());
          auto ei = [&](const Vector& u) {
            const auto [mu, var] = gp.predict(u);
            return detail::expected_improvement(mu, var, best, settings.ei_jitter);
          };
          const Vector lo = Vector::Zero(static_cast<Eigen::Index>(d)), hi = Vector::Ones(static_cast<Eigen::Index>(d));
          Vector arg;
          double arg_ei = -1.0;
          for (std::size_t s = 0; s < settings.acquisition_starts; ++s) {
            const Vector cand = detail::pattern_search(ei, random_unit(), lo, hi, 0.05, 1e-4, 400);
            const double v = ei(cand);
            if (v > arg_ei) {
              arg_ei = v;
              arg = cand;
            }
          }
          proposals.push_back(arg);
          units.push_back(arg);
          ys.push_back(gp.predict(arg).first);
          vars.push_back(0.0);
        }
      } catch (const FitError&) {
        st.surrogate_failed = true;
        proposals.clear();
      }
    }
    if (st.surrogate_failed)
      for (std::size_t b = 0; b < settings.batch; ++b) proposals.push_back(random_unit());
    evaluate(proposals, epoch);
    st.epochs_run = epoch;
  }
  return st;
}

/// BO over a model's design bounds with one of the library's estimators. The
/// GP noise for each point is the replicate variance of its mean.
inline BoState bayes_opt(const Model& model, est::EstimatorKind kind, const Bounds& bounds, const BoSettings& settings,
                         const est::EstimatorConfig& cfg, const RngStream& stream) {
  cfg.validate();
  const Bounds mb = model.design_bounds();
  if (bounds.dim() != mb.dim()) throw DomainError("BO bounds dimension does not match the model");
  for (std::size_t i = 0; i < bounds.dim(); ++i)
    if (bounds[i].lower < mb[i].lower || bounds[i].upper > mb[i].upper)
      throw DomainError("BO bounds leave the model's design bounds");
  est::EstimatorConfig inner = cfg;
  inner.workers = 1;
  return bayes_opt(
      [&](const DesignPoint& xi, const RngStream& s) {
        const DesignPoint mxi(xi.coordinates(), mb);
        const auto e = est::estimate_utility(model, mxi, kind, inner, s);
        return ObjectiveValue{e.mean, e.std * e.std / static_cast<double>(e.n_replicates)};
      },
      bounds, settings, stream);
}

inline io::CsvTable export_trace(const BoState& st) {
  io::CsvTable t;
  t.header.push_back("epoch");
  const std::size_t d = st.bounds.dim();
  for (std::size_t k = 0; k < d; ++k) t.header.push_back(d == 1 ? "xi" : "xi" + std::to_string(k + 1));
  t.header.push_back("value");
  t.header.push_back("best_so_far");
  for (const auto& r : st.trace) {
    std::vector<double> row{static_cast<double>(r.epoch)};
    row.insert(row.end(), r.xi.begin(), r.xi.end());
    row.push_back(r.value);
    row.push_back(r.best_so_far);
    t.add_numeric_row(row);
  }
  return t;
}

}  // namespace lfgo::design
