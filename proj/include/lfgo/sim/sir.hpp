#pragma once

// Discrete-time stochastic SIR epidemic with binomial transitions.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "lfgo/sim/distributions.hpp"
#include "lfgo/sim/model.hpp"

namespace lfgo {

struct SirState {
  int s = 0;
  int i = 0;
  int r = 0;
  friend bool operator==(const SirState&, const SirState&) = default;
};

struct SirSettings {
  double dt = 0.01;
  SirState initial{490, 10, 0};
  double horizon = 3.0;  ///< upper bound of the design interval
  int population() const noexcept { return initial.s + initial.i + initial.r; }
};

/// States on the grid t_k = k * dt, k = 0..steps.
class SirTrajectory {
 public:
  SirTrajectory(double dt, std::vector<SirState> states) : dt_(dt), states_(std::move(states)) {}

  double dt() const noexcept { return dt_; }
  double t_end() const noexcept { return dt_ * static_cast<double>(states_.size() - 1); }
  const std::vector<SirState>& states() const noexcept { return states_; }

  std::size_t grid_index(double t) const {
    if (!(t >= 0.0)) throw DomainError("SIR time must be nonnegative");
    const auto k = static_cast<std::size_t>(std::llround(t / dt_));
    if (k >= states_.size()) throw DomainError("SIR time beyond the simulated horizon");
    return k;
  }

  /// State at the grid point nearest t.
  const SirState& at(double t) const { return states_[grid_index(t)]; }

 private:
  double dt_;
  std::vector<SirState> states_;
};

inline std::size_t sir_steps(double t_end, double dt) { return static_cast<std::size_t>(std::llround(t_end / dt)); }

/// Per step: dS ~ Bin(S, beta I / N), dI ~ Bin(I, gamma). In suppressed-noise
/// mode the draws are replaced by their rounded means.
inline SirTrajectory sir_simulate(double beta, double gamma, double t_end, PhiloxEngine& rng,
                                  const SirSettings& settings = {}, NoiseMode noise = NoiseMode::stochastic) {
  if (!(beta >= 0.0 && beta <= 1.0) || !(gamma >= 0.0 && gamma <= 1.0))
    throw DomainError("SIR rates must lie in [0, 1]");
  if (!(t_end >= 0.0)) throw DomainError("SIR t_end must be nonnegative");
  const std::size_t steps = sir_steps(t_end, settings.dt);
  const double n = settings.population();
  std::vector<SirState> states;
  states.reserve(steps + 1);
  SirState x = settings.initial;
  states.push_back(x);
  for (std::size_t k = 0; k < steps; ++k) {
    const double p_inf = beta * x.i / n;
    int ds = 0;
    int di = 0;
    if (noise == NoiseMode::stochastic) {
      ds = sample_binomial(x.s, p_inf, rng);
      di = sample_binomial(x.i, gamma, rng);
    } else {
      ds = static_cast<int>(std::lround(x.s * p_inf));
      di = static_cast<int>(std::lround(x.i * gamma));
    }
    x = {x.s - ds, x.i + ds - di, x.r + di};
    states.push_back(x);
  }
  return SirTrajectory(settings.dt, std::move(states));
}

inline Observation sir_observe(const SirTrajectory& traj, double t) {
  const SirState& s = traj.at(t);
  Vector y(3);
  y << s.s, s.i, s.r;
  return Observation(std::move(y));
}

inline QoIValue sir_qoi_recovered_sum(const SirTrajectory& traj) {
  Vector z(1);
  z[0] = traj.at(0.3).r + traj.at(0.4).r + traj.at(0.5).r;
  return QoIValue(std::move(z));
}

inline QoIValue sir_qoi_incidence(const SirTrajectory& traj, double beta, double t0) {
  const SirState& s = traj.at(t0);
  Vector z(1);
  z[0] = beta * s.i * s.s;
  return QoIValue(std::move(z));
}

enum class SirQoI {
  identity,       ///< Z = (beta, gamma)
  recovered_sum,  ///< Z = R(0.3) + R(0.4) + R(0.5)
  incidence,      ///< Z = beta I(t0) S(t0)
};

/// Parameters (beta, gamma) ~ U(0, 0.5)^2; design xi = observation time in [0, 3];
/// observation (S, I, R)(xi). QoIs come from an independent trajectory.
class SirModel final : public Model {
 public:
  explicit SirModel(SirQoI qoi = SirQoI::identity, double t0 = 0.1, SirSettings settings = {},
                    NoiseMode noise = NoiseMode::stochastic)
      : qoi_(qoi), t0_(t0), settings_(settings), noise_(noise) {
    if (qoi == SirQoI::incidence && !(t0 >= 0.0 && t0 <= settings.horizon))
      throw DomainError("incidence time t0 outside the horizon");
  }

  std::string name() const override { return "sir"; }
  std::size_t param_dim() const override { return 2; }
  std::size_t qoi_dim() const override { return qoi_ == SirQoI::identity ? 2 : 1; }
  std::size_t summary_dim() const override { return 3; }
  Bounds design_bounds() const override { return Bounds{{0.0, settings_.horizon}}; }
  std::optional<Bounds> param_support() const override { return Bounds::uniform(2, {0.0, 0.5}); }
  bool deterministic_qoi() const override { return qoi_ == SirQoI::identity; }
  const SirSettings& settings() const noexcept { return settings_; }

  ParamVector sample_prior(PhiloxEngine& rng) const override {
    const double beta = sample_uniform(0.0, 0.5, rng);
    const double gamma = sample_uniform(0.0, 0.5, rng);
    return ParamVector{beta, gamma};
  }

  Observation simulate(const ParamVector& theta, const DesignPoint& xi, PhiloxEngine& rng) const override {
    const double t = xi[0];
    const auto traj = sir_simulate(theta[0], theta[1], t, rng, settings_, noise_);
    return sir_observe(traj, t);
  }

  QoIValue predict(const ParamVector& theta, PhiloxEngine& rng) const override {
    switch (qoi_) {
      case SirQoI::identity: return QoIValue(theta.values);
      case SirQoI::recovered_sum:
        return sir_qoi_recovered_sum(sir_simulate(theta[0], theta[1], 0.5, rng, settings_, noise_));
      default:
        return sir_qoi_incidence(sir_simulate(theta[0], theta[1], t0_, rng, settings_, noise_), theta[0], t0_);
    }
  }

 private:
  SirQoI qoi_;
  double t0_;
  SirSettings settings_;
  NoiseMode noise_;
};

}  // namespace lfgo
