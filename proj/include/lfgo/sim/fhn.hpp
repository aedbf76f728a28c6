#pragma once

// Stochastic FitzHugh-Nagumo neuron:
//   du = gamma (u - u^3/3 + v + I) dt
//   dv = -(1/gamma)(u - theta0 + theta1 v) dt + dB
// integrated by Euler-Maruyama; u is recorded on a regular grid and reduced to
// (spike rate, mean spike duration).

#include <cmath>
#include <string>
#include <vector>

#include "lfgo/sim/distributions.hpp"
#include "lfgo/sim/model.hpp"

namespace lfgo {

struct FhnSettings {
  double gamma = 3.0;
  double dt = 0.01;              ///< integration step
  std::size_t record_every = 20; ///< steps between recorded samples (0.2 time units)
  std::size_t first_record = 10; ///< step of the first recorded sample (t = 0.1)
  std::size_t n_records = 1000;  ///< t = 0.1, 0.3, ..., 199.9
  double threshold = 0.5;
  double qoi_current = 0.2;      ///< stimulus at which the spike-rate QoI is evaluated

  double record_dt() const noexcept { return dt * static_cast<double>(record_every); }
  double first_time() const noexcept { return dt * static_cast<double>(first_record); }
};

/// Membrane potential u(t) at the recording times.
inline std::vector<double> fhn_simulate(double theta0, double theta1, double current, PhiloxEngine& rng,
                                        const FhnSettings& cfg = {}, NoiseMode noise = NoiseMode::stochastic) {
  const std::size_t last_step = cfg.first_record + (cfg.n_records - 1) * cfg.record_every;
  const double sqrt_dt = std::sqrt(cfg.dt);
  std::normal_distribution<double> dw(0.0, 1.0);
  std::vector<double> out;
  out.reserve(cfg.n_records);
  double u = 0.0;
  double v = 0.0;
  const double inv_gamma = 1.0 / cfg.gamma;
  for (std::size_t step = 1; step <= last_step; ++step) {
    const double du = cfg.gamma * (u - u * u * u / 3.0 + v + current);
    const double dv = -inv_gamma * (u - theta0 + theta1 * v);
    const double noise_term = noise == NoiseMode::stochastic ? sqrt_dt * dw(rng) : 0.0;
    u += du * cfg.dt;
    v += dv * cfg.dt + noise_term;
    if (!std::isfinite(u) || !std::isfinite(v) || std::abs(u) > 1e6 || std::abs(v) > 1e6) {
      const double t = cfg.dt * static_cast<double>(step);
      throw SimulationError("FitzHugh-Nagumo state diverged at t = " + std::to_string(t), t);
    }
    if (step >= cfg.first_record && (step - cfg.first_record) % cfg.record_every == 0) out.push_back(u);
  }
  return out;
}

struct SpikeSummary {
  double rate = 0.0;      ///< crossings per unit observed time
  double duration = 0.0;  ///< mean time above threshold per spike
  std::size_t crossings = 0;
  double observed = 0.0;  ///< observed duration, from t = 0 to the last sample
};

/// A spike starts at each upward crossing of the threshold (a series that
/// starts above threshold opens one spike at its first sample). Each spike
/// lasts for the number of consecutive samples above threshold times the
/// sampling interval.
inline SpikeSummary fhn_spike_summary(const std::vector<double>& u, double first_time = 0.1, double dt = 0.2,
                                      double threshold = 0.5) {
  if (u.size() < 2) throw DomainError("spike summary needs at least two samples");
  SpikeSummary out;
  out.observed = first_time + dt * static_cast<double>(u.size() - 1);
  std::size_t above = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const bool is_above = u[k] > threshold;
    if (is_above) {
      ++above;
      if (k == 0 || !(u[k - 1] > threshold)) ++out.crossings;
    }
  }
  out.rate = static_cast<double>(out.crossings) / out.observed;
  out.duration = out.crossings > 0 ? dt * static_cast<double>(above) / static_cast<double>(out.crossings) : 0.0;
  return out;
}

inline SummaryVector fhn_summarize(const std::vector<double>& u, const FhnSettings& cfg = {}) {
  const auto s = fhn_spike_summary(u, cfg.first_time(), cfg.record_dt(), cfg.threshold);
  return SummaryVector{s.rate, s.duration};
}

enum class FhnQoI {
  identity,   ///< Z = (theta0, theta1)
  spike_rate, ///< Z = spike rate of an independent run at the QoI current
};

/// theta0 ~ TN(0.4, 0.3^2), theta1 ~ TN(0.4, 0.4^2) on [0, 1]; design = stimulus
/// current in [0, 0.8]; observation = recorded u(t).
class FhnModel final : public Model {
 public:
  explicit FhnModel(FhnQoI qoi = FhnQoI::identity, FhnSettings settings = {}, NoiseMode noise = NoiseMode::stochastic)
      : qoi_(qoi), settings_(settings), noise_(noise) {}

  std::string name() const override { return "fhn"; }
  std::size_t param_dim() const override { return 2; }
  std::size_t qoi_dim() const override { return qoi_ == FhnQoI::identity ? 2 : 1; }
  std::size_t summary_dim() const override { return 2; }
  Bounds design_bounds() const override { return Bounds{{0.0, 0.8}}; }
  std::optional<Bounds> param_support() const override { return Bounds::uniform(2, {0.0, 1.0}); }
  bool deterministic_qoi() const override { return qoi_ == FhnQoI::identity; }
  const FhnSettings& settings() const noexcept { return settings_; }

  ParamVector sample_prior(PhiloxEngine& rng) const override {
    const double t0 = sample_truncated_normal(0.4, 0.3, 0.0, 1.0, rng);
    const double t1 = sample_truncated_normal(0.4, 0.4, 0.0, 1.0, rng);
    return ParamVector{t0, t1};
  }

  Observation simulate(const ParamVector& theta, const DesignPoint& xi, PhiloxEngine& rng) const override {
    auto u = fhn_simulate(theta[0], theta[1], xi[0], rng, settings_, noise_);
    return Observation(Eigen::Map<const Vector>(u.data(), static_cast<Eigen::Index>(u.size())));
  }

  SummaryVector summarize(const Observation& y) const override {
    return fhn_summarize(std::vector<double>(y.values.begin(), y.values.end()), settings_);
  }

  QoIValue predict(const ParamVector& theta, PhiloxEngine& rng) const override {
    if (qoi_ == FhnQoI::identity) return QoIValue(theta.values);
    const auto u = fhn_simulate(theta[0], theta[1], settings_.qoi_current, rng, settings_, noise_);
    const auto s = fhn_spike_summary(u, settings_.first_time(), settings_.record_dt(), settings_.threshold);
    return QoIValue{s.rate};
  }

 private:
  FhnQoI qoi_;
  FhnSettings settings_;
  NoiseMode noise_;
};

/// Spike rate at the QoI current, the FHN goal-oriented prediction.
inline QoIValue fhn_qoi_spike_rate(const ParamVector& theta, PhiloxEngine& rng, const FhnSettings& cfg = {}) {
  return FhnModel(FhnQoI::spike_rate, cfg).predict(theta, rng);
}

}  // namespace lfgo
