#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lfgo/core/parallel.hpp"
#include "lfgo/core/rng.hpp"
#include "lfgo/core/types.hpp"

namespace lfgo {

/// Whether simulators draw their stochastic terms. `suppressed` zeroes them and
/// exists for oracles and tests.
enum class NoiseMode { stochastic, suppressed };

/// Behavioral contract for an implicit model: a prior, an observation
/// simulator, a QoI predictor and summary statistics. Explicit densities are
/// optional capabilities.
///
/// simulate() and predict() must be pure functions of their arguments and the
/// engine state; summarize() must be deterministic.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual std::size_t param_dim() const = 0;
  virtual std::size_t qoi_dim() const = 0;
  virtual std::size_t summary_dim() const = 0;
  virtual Bounds design_bounds() const = 0;
  /// Box containing the prior support, or nullopt for unbounded priors.
  virtual std::optional<Bounds> param_support() const = 0;

  virtual ParamVector sample_prior(PhiloxEngine& rng) const = 0;
  virtual Observation simulate(const ParamVector& theta, const DesignPoint& xi, PhiloxEngine& rng) const = 0;
  virtual QoIValue predict(const ParamVector& theta, PhiloxEngine& rng) const = 0;
  virtual SummaryVector summarize(const Observation& y) const { return SummaryVector(y.values); }

  /// True when predict() ignores the engine (Z = H(theta)).
  virtual bool deterministic_qoi() const = 0;

  virtual bool has_likelihood() const { return false; }
  virtual double log_likelihood(const Observation& /*y*/, const ParamVector& /*theta*/,
                                const DesignPoint& /*xi*/) const {
    throw CapabilityError(name() + ": no explicit likelihood");
  }

  virtual bool has_qoi_density() const { return false; }
  virtual double log_qoi_density(const QoIValue& /*z*/, const ParamVector& /*theta*/) const {
    throw CapabilityError(name() + ": no explicit QoI density");
  }

  /// Validates a raw coordinate vector against this model's design bounds.
  DesignPoint design(const Vector& coords) const { return DesignPoint(coords, design_bounds()); }
  DesignPoint design(std::initializer_list<double> coords) const {
    Vector v(static_cast<Eigen::Index>(coords.size()));
    Eigen::Index i = 0;
    for (double c : coords) v[i++] = c;
    return design(v);
  }
};

inline void check_design(const Model& model, const DesignPoint& xi) {
  const Bounds b = model.design_bounds();
  if (!b.contains(xi.coordinates()))
    throw DomainError(model.name() + ": design outside the model's design bounds");
}

/// Draws n samples from p(theta, y, z | xi); sample i owns stream.child(i).
inline std::vector<JointSample> sample_joint(const Model& model, const DesignPoint& xi, std::size_t n,
                                             const RngStream& stream, std::size_t workers = 1) {
  if (n == 0) throw DomainError("sample_joint: n must be at least 1");
  check_design(model, xi);
  std::vector<JointSample> out(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto rng = stream.child(i).engine();
    JointSample s;
    s.theta = model.sample_prior(rng);
    s.y = model.simulate(s.theta, xi, rng);
    s.z = model.predict(s.theta, rng);
    out[i] = std::move(s);
  });
  return out;
}

}  // namespace lfgo
