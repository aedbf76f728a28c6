#pragma once

// Gaussian toy models with closed-form mutual information. They anchor the
// estimator tests: theta ~ N(0, 1), y = theta + N(0, sy^2), z = theta + N(0, sz^2)
// (sz = 0 gives the deterministic QoI z = theta). With `independent_qoi` the
// QoI ignores theta entirely and the mutual information is zero.

#include <cmath>
#include <string>

#include "lfgo/core/stats.hpp"
#include "lfgo/sim/distributions.hpp"
#include "lfgo/sim/model.hpp"

namespace lfgo {

class LinearGaussianModel final : public Model {
 public:
  LinearGaussianModel(double sigma_y, double sigma_z = 0.0, bool independent_qoi = false)
      : sigma_y_(sigma_y), sigma_z_(sigma_z), independent_(independent_qoi) {
    if (!(sigma_y > 0.0) || !(sigma_z >= 0.0)) throw DomainError("linear-Gaussian noise scales must be positive");
  }

  std::string name() const override { return "lingauss"; }
  std::size_t param_dim() const override { return 1; }
  std::size_t qoi_dim() const override { return 1; }
  std::size_t summary_dim() const override { return 1; }
  Bounds design_bounds() const override { return Bounds{{0.0, 1.0}}; }
  std::optional<Bounds> param_support() const override { return std::nullopt; }
  bool deterministic_qoi() const override { return !independent_ && sigma_z_ == 0.0; }
  bool has_likelihood() const override { return true; }
  bool has_qoi_density() const override { return !deterministic_qoi(); }

  ParamVector sample_prior(PhiloxEngine& rng) const override { return ParamVector{sample_normal(0.0, 1.0, rng)}; }

  Observation simulate(const ParamVector& theta, const DesignPoint& /*xi*/, PhiloxEngine& rng) const override {
    return Observation{theta[0] + sample_normal(0.0, sigma_y_, rng)};
  }

  QoIValue predict(const ParamVector& theta, PhiloxEngine& rng) const override {
    if (independent_) return QoIValue{sample_normal(0.0, 1.0, rng)};
    if (sigma_z_ == 0.0) return QoIValue{theta[0]};
    return QoIValue{theta[0] + sample_normal(0.0, sigma_z_, rng)};
  }

  double log_likelihood(const Observation& y, const ParamVector& theta, const DesignPoint& /*xi*/) const override {
    return stats::normal_logpdf(y[0], theta[0], sigma_y_ * sigma_y_);
  }

  double log_qoi_density(const QoIValue& z, const ParamVector& theta) const override {
    if (independent_) return stats::normal_logpdf(z[0], 0.0, 1.0);
    if (sigma_z_ == 0.0) throw CapabilityError("deterministic QoI has no density");
    return stats::normal_logpdf(z[0], theta[0], sigma_z_ * sigma_z_);
  }

  /// Closed-form I(Y; Z) in nats.
  double mutual_information() const {
    if (independent_) return 0.0;
    const double rho2 = 1.0 / ((1.0 + sigma_y_ * sigma_y_) * (1.0 + sigma_z_ * sigma_z_));
    return -0.5 * std::log1p(-rho2);
  }

  /// Closed-form I(Y; Theta) in nats.
  double parameter_information() const { return 0.5 * std::log1p(1.0 / (sigma_y_ * sigma_y_)); }

 private:
  double sigma_y_;
  double sigma_z_;
  bool independent_;
};

}  // namespace lfgo
