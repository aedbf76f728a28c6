#pragma once

// Nonlinear benchmark observation models with additive Gaussian noise
// (variance 1e-4) and uniform priors on [0,1]^n.

#include <cmath>
#include <string>

#include "lfgo/core/stats.hpp"
#include "lfgo/sim/distributions.hpp"
#include "lfgo/sim/model.hpp"

namespace lfgo {

inline constexpr double kBenchmarkNoiseVar = 1e-4;

namespace detail {

inline void check_unit_box(const Vector& v, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(v.size()) != n) throw DomainError(std::string(what) + ": dimension mismatch");
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) throw DomainError(std::string(what) + ": entry outside [0, 1]");
}

inline double decay(double xi) { return std::exp(-std::abs(0.2 - xi)); }

}  // namespace detail

/// Noise-free 1D benchmark response theta^3 xi^2 + theta exp(-|0.2 - xi|).
inline double nonlinear1d_mean(double theta, double xi) {
  return theta * theta * theta * xi * xi + theta * detail::decay(xi);
}

/// Noise-free 2D benchmark response. Both components share xi_1 in the cubic
/// term and xi_2 in the decay term.
inline Vector nonlinear2d_mean(const Vector& theta, const Vector& xi) {
  detail::check_unit_box(theta, 2, "nonlinear2d theta");
  detail::check_unit_box(xi, 2, "nonlinear2d xi");
  const double cubic = xi[0] * xi[0];
  const double d = detail::decay(xi[1]);
  Vector y(2);
  y[0] = std::pow(theta[0], 3) * cubic + theta[1] * d;
  y[1] = std::pow(theta[1], 3) * cubic + theta[0] * d;
  return y;
}

/// Noise-free N-dimensional response
/// Y_i = theta_i^3 xi_i^2 + sum_{j != i} theta_j exp(-|0.2 - xi_j|).
inline Vector nonlinear_nd_mean(const Vector& theta, const Vector& xi) {
  const auto n = static_cast<std::size_t>(theta.size());
  detail::check_unit_box(theta, n, "nonlinear_nd theta");
  detail::check_unit_box(xi, n, "nonlinear_nd xi");
  double total = 0.0;
  Vector w(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    w[j] = theta[j] * detail::decay(xi[j]);
    total += w[j];
  }
  Vector y(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    y[i] = std::pow(theta[i], 3) * xi[i] * xi[i] + (total - w[i]);
  return y;
}

/// Rosenbrock QoI: the classic 2D form for n = 2, otherwise
/// sum_i [(1 - theta_i)^2 + sum_{j != i} 5 (theta_j - theta_i^2)^2].
inline double rosenbrock_qoi(const Vector& theta) {
  const Eigen::Index n = theta.size();
  if (n == 2) {
    const double a = 1.0 - theta[0];
    const double b = theta[1] - theta[0] * theta[0];
    return a * a + 5.0 * b * b;
  }
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    z += (1.0 - theta[i]) * (1.0 - theta[i]);
    const double sq = theta[i] * theta[i];
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) z += 5.0 * (theta[j] - sq) * (theta[j] - sq);
  }
  return z;
}

enum class NonlinearQoI {
  identity,        ///< Z = Theta
  centered_square, ///< Z = sum_i (Theta_i - 0.5)^2, a non-injective map
  rosenbrock,      ///< Z = Rosenbrock(Theta)
};

enum class NonlinearForm {
  one_d,  ///< the scalar benchmark
  two_d,  ///< the paired 2D benchmark
  n_dim,  ///< the N-dimensional extension
};

/// The 1D, 2D and N-dimensional nonlinear benchmarks behind one class.
class NonlinearModel final : public Model {
 public:
  NonlinearModel(NonlinearForm form, std::size_t n_dim, NonlinearQoI qoi, NoiseMode noise = NoiseMode::stochastic)
      : form_(form), n_(n_dim), qoi_(qoi), noise_(noise) {
    if (form == NonlinearForm::one_d && n_dim != 1) throw DomainError("1D benchmark has n_dim = 1");
    if (form == NonlinearForm::two_d && n_dim != 2) throw DomainError("2D benchmark has n_dim = 2");
    if (n_dim < 1) throw DomainError("n_dim must be at least 1");
  }

  static NonlinearModel one_d(NonlinearQoI qoi = NonlinearQoI::identity, NoiseMode noise = NoiseMode::stochastic) {
    return {NonlinearForm::one_d, 1, qoi, noise};
  }
  static NonlinearModel two_d(NonlinearQoI qoi = NonlinearQoI::rosenbrock, NoiseMode noise = NoiseMode::stochastic) {
    return {NonlinearForm::two_d, 2, qoi, noise};
  }
  static NonlinearModel n_dim(std::size_t n, NonlinearQoI qoi = NonlinearQoI::rosenbrock,
                              NoiseMode noise = NoiseMode::stochastic) {
    return {NonlinearForm::n_dim, n, qoi, noise};
  }

  std::string name() const override {
    switch (form_) {
      case NonlinearForm::one_d: return "nl1d";
      case NonlinearForm::two_d: return "nl2d";
      default: return "nlnd";
    }
  }
  std::size_t param_dim() const override { return n_; }
  std::size_t qoi_dim() const override { return qoi_ == NonlinearQoI::identity ? n_ : 1; }
  std::size_t summary_dim() const override { return n_; }
  Bounds design_bounds() const override { return Bounds::uniform(n_, {0.0, 1.0}); }
  std::optional<Bounds> param_support() const override { return Bounds::uniform(n_, {0.0, 1.0}); }
  bool deterministic_qoi() const override { return true; }
  bool has_likelihood() const override { return true; }
  NonlinearQoI qoi_kind() const noexcept { return qoi_; }

  Vector mean_response(const Vector& theta, const Vector& xi) const {
    switch (form_) {
      case NonlinearForm::one_d: {
        detail::check_unit_box(theta, 1, "nonlinear1d theta");
        detail::check_unit_box(xi, 1, "nonlinear1d xi");
        Vector y(1);
        y[0] = nonlinear1d_mean(theta[0], xi[0]);
        return y;
      }
      case NonlinearForm::two_d: return nonlinear2d_mean(theta, xi);
      default: return nonlinear_nd_mean(theta, xi);
    }
  }

  ParamVector sample_prior(PhiloxEngine& rng) const override {
    Vector t(static_cast<Eigen::Index>(n_));
    for (auto& v : t) v = rng.uniform01();
    return ParamVector(std::move(t));
  }

  Observation simulate(const ParamVector& theta, const DesignPoint& xi, PhiloxEngine& rng) const override {
    Vector y = mean_response(theta.values, xi.coordinates());
    if (noise_ == NoiseMode::stochastic) {
      std::normal_distribution<double> eps(0.0, std::sqrt(kBenchmarkNoiseVar));
      for (auto& v : y) v += eps(rng);
    }
    return Observation(std::move(y));
  }

  QoIValue predict(const ParamVector& theta, PhiloxEngine& /*rng*/) const override {
    switch (qoi_) {
      case NonlinearQoI::identity: return QoIValue(theta.values);
      case NonlinearQoI::centered_square: {
        Vector z(1);
        z[0] = (theta.values.array() - 0.5).square().sum();
        return QoIValue(std::move(z));
      }
      default: {
        Vector z(1);
        z[0] = rosenbrock_qoi(theta.values);
        return QoIValue(std::move(z));
      }
    }
  }

  double log_likelihood(const Observation& y, const ParamVector& theta, const DesignPoint& xi) const override {
    const Vector mu = mean_response(theta.values, xi.coordinates());
    if (y.values.size() != mu.size()) throw DomainError("observation dimension mismatch");
    double ll = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) ll += stats::normal_logpdf(y.values[i], mu[i], kBenchmarkNoiseVar);
    return ll;
  }

 private:
  NonlinearForm form_;
  std::size_t n_;
  NonlinearQoI qoi_;
  NoiseMode noise_;
};

}  // namespace lfgo
