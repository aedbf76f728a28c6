#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "lfgo/sim/fhn.hpp"
#include "lfgo/sim/nonlinear.hpp"
#include "lfgo/sim/sir.hpp"
#include "lfgo/sim/toy.hpp"

namespace lfgo {

/// Everything needed to construct a registered model by name.
struct ModelSpec {
  std::string name = "nl1d";     ///< nl1d | nl2d | nlnd | sir | fhn | lingauss
  std::string qoi = "identity";  ///< model-specific QoI name
  std::size_t n_dim = 3;         ///< nlnd only
  double t0 = 0.1;               ///< sir incidence only
  double sigma_y = 0.5;          ///< lingauss only
  double sigma_z = 0.0;          ///< lingauss only
  bool deterministic = false;    ///< suppress simulator noise
};

inline const std::vector<std::string>& registered_models() {
  static const std::vector<std::string> names{"nl1d", "nl2d", "nlnd", "sir", "fhn", "lingauss"};
  return names;
}

/// Valid QoI names for a registered model.
inline std::vector<std::string> model_qois(const std::string& name) {
  if (name == "nl1d") return {"identity", "centered_square", "rosenbrock"};
  if (name == "nl2d" || name == "nlnd") return {"identity", "rosenbrock", "centered_square"};
  if (name == "sir") return {"identity", "recovered_sum", "incidence"};
  if (name == "fhn") return {"identity", "spike_rate"};
  if (name == "lingauss") return {"identity", "independent"};
  throw DomainError("unknown model '" + name + "'");
}

inline std::unique_ptr<Model> make_model(const ModelSpec& spec) {
  const NoiseMode noise = spec.deterministic ? NoiseMode::suppressed : NoiseMode::stochastic;
  const auto qois = model_qois(spec.name);
  if (std::find(qois.begin(), qois.end(), spec.qoi) == qois.end())
    throw DomainError("model '" + spec.name + "' has no QoI '" + spec.qoi + "'");

  auto nonlinear_qoi = [&] {
    if (spec.qoi == "identity") return NonlinearQoI::identity;
    if (spec.qoi == "centered_square") return NonlinearQoI::centered_square;
    return NonlinearQoI::rosenbrock;
  };
  if (spec.name == "nl1d") return std::make_unique<NonlinearModel>(NonlinearModel::one_d(nonlinear_qoi(), noise));
  if (spec.name == "nl2d") return std::make_unique<NonlinearModel>(NonlinearModel::two_d(nonlinear_qoi(), noise));
  if (spec.name == "nlnd")
    return std::make_unique<NonlinearModel>(NonlinearModel::n_dim(spec.n_dim, nonlinear_qoi(), noise));
  if (spec.name == "sir") {
    const SirQoI q = spec.qoi == "identity"        ? SirQoI::identity
                     : spec.qoi == "recovered_sum" ? SirQoI::recovered_sum
                                                   : SirQoI::incidence;
    return std::make_unique<SirModel>(q, spec.t0, SirSettings{}, noise);
  }
  if (spec.name == "fhn")
    return std::make_unique<FhnModel>(spec.qoi == "identity" ? FhnQoI::identity : FhnQoI::spike_rate, FhnSettings{},
                                      noise);
  return std::make_unique<LinearGaussianModel>(spec.sigma_y, spec.sigma_z, spec.qoi == "independent");
}

}  // namespace lfgo
