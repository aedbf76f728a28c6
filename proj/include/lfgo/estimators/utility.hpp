#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lfgo/abc/abc.hpp"
#include "lfgo/core/stats.hpp"
#include "lfgo/densratio/ulsif.hpp"

namespace lfgo::est {

enum class EstimatorKind { dr1, dr2, nmc_param, nmc_z1, nmc_z2, kde };

inline std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::dr1: return "dr1";
    case EstimatorKind::dr2: return "dr2";
    case EstimatorKind::nmc_param: return "nmc_param";
    case EstimatorKind::nmc_z1: return "nmc_z1";
    case EstimatorKind::nmc_z2: return "nmc_z2";
    default: return "kde";
  }
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
  for (auto k : {EstimatorKind::dr1, EstimatorKind::dr2, EstimatorKind::nmc_param, EstimatorKind::nmc_z1,
                 EstimatorKind::nmc_z2, EstimatorKind::kde})
    if (to_string(k) == s) return k;
  throw DomainError("unknown estimator '" + s + "'");
}

/// Which density-ratio form to use when the caller asks for "dr".
enum class RatioSpace { automatic, dr1, dr2 };

/// dr1 conditions on observation summaries, dr2 on the QoI. The automatic
/// choice takes dr1 when the summary dimension is at least the QoI dimension.
inline EstimatorKind resolve_ratio_space(RatioSpace space, std::size_t summary_dim, std::size_t qoi_dim) {
  switch (space) {
    case RatioSpace::dr1: return EstimatorKind::dr1;
    case RatioSpace::dr2: return EstimatorKind::dr2;
    default: return summary_dim >= qoi_dim ? EstimatorKind::dr1 : EstimatorKind::dr2;
  }
}

struct RatioSettings {
  densratio::CvGrid grid;
  std::size_t centers = 100;
  double alpha = 0.0;
  /// Refit the weights with w >= 0 at the CV-selected (sigma, lambda) before
  /// taking logs (densratio::refit_nonnegative). Without it, points where the
  /// unconstrained fit dips below zero hit the evaluation floor.
  bool nonnegative = true;
};

struct EstimatorConfig {
  std::size_t n_outer = 1000;      ///< joint samples per replicate
  abc::AbcConfig abc;
  RatioSettings ratio;
  std::size_t n_replicates = 1;
  RatioSpace ratio_space = RatioSpace::automatic;
  std::size_t n_inner = 1000;      ///< prior draws in nested-MC denominators
  double max_failure_fraction = 0.2;
  /// Accepted ABC samples beyond this many are thinned (without replacement)
  /// before posterior-predictive simulation; uninformative designs otherwise
  /// accept the whole pool. 0 disables thinning.
  std::size_t max_posterior = 1000;
  std::size_t workers = 1;

  void validate() const {
    if (n_outer < 10) throw DomainError("n_outer must be at least 10");
    if (n_replicates < 1) throw DomainError("n_replicates must be at least 1");
    if (n_inner < 1) throw DomainError("n_inner must be at least 1");
    if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0))
      throw DomainError("max_failure_fraction must lie in [0, 1]");
    if (ratio.centers < 1) throw DomainError("ratio centers must be at least 1");
    if (!(ratio.alpha >= 0.0 && ratio.alpha < 1.0)) throw DomainError("ratio alpha must lie in [0, 1)");
    abc.validate();
    ratio.grid.validate();
  }
};

/// Mean and (n-1)-denominator standard deviation across replicates.
struct Aggregate {
  double mean;
  double std;
};

inline Aggregate replicate_aggregate(std::span<const double> values) {
  if (values.empty()) throw DomainError("aggregate needs at least one value");
  return {stats::mean(values), stats::stddev(values)};
}

/// Per-design utility estimate in nats.
struct UtilityEstimate {
  DesignPoint design;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n_replicates = 0;
  std::size_t n_outer = 0;
  EstimatorKind kind = EstimatorKind::dr1;
  std::uint64_t seed = 0;
  std::size_t n_failed = 0;  ///< outer points dropped, summed over replicates
  double wall_time_s = 0.0;
  std::vector<double> replicate_values;
};

}  // namespace lfgo::est
