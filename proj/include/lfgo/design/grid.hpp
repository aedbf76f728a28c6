#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "lfgo/estimators/estimators.hpp"
#include "lfgo/io/csv.hpp"

namespace lfgo::design {

/// Cartesian product of per-dimension point lists, enumerated row-major (the
/// last dimension varies fastest).
class DesignGrid {
 public:
  DesignGrid(std::vector<std::vector<double>> axes, Bounds bounds) : axes_(std::move(axes)), bounds_(std::move(bounds)) {
    if (axes_.empty() || axes_.size() != bounds_.dim()) throw DomainError("grid needs one axis per design dimension");
    for (std::size_t d = 0; d < axes_.size(); ++d) {
      if (axes_[d].empty()) throw DomainError("grid axis " + std::to_string(d) + " is empty");
      for (double v : axes_[d])
        if (!bounds_[d].contains(v)) throw DomainError("grid axis " + std::to_string(d) + " leaves the design bounds");
    }
  }

  /// `counts[d]` equally spaced points spanning each bound, endpoints included.
  static DesignGrid uniform(const Bounds& bounds, const std::vector<std::size_t>& counts) {
    if (counts.size() != bounds.dim()) throw DomainError("grid needs one count per design dimension");
    std::vector<std::vector<double>> axes;
    for (std::size_t d = 0; d < counts.size(); ++d) axes.push_back(linspace(bounds[d].lower, bounds[d].upper, counts[d]));
    return DesignGrid(std::move(axes), bounds);
  }

  static std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) throw DomainError("grid axis needs at least one point");
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k)
      v[k] = n == 1 ? lo : (k + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
    return v;
  }

  std::size_t dim() const noexcept { return axes_.size(); }
  std::size_t size() const noexcept {
    std::size_t n = 1;
    for (const auto& a : axes_) n *= a.size();
    return n;
  }
  const std::vector<std::vector<double>>& axes() const noexcept { return axes_; }
  const Bounds& bounds() const noexcept { return bounds_; }

  DesignPoint point(std::size_t index) const {
    if (index >= size()) throw DomainError("grid index out of range");
    Vector c(static_cast<Eigen::Index>(dim()));
    for (std::size_t d = dim(); d-- > 0;) {
      c[static_cast<Eigen::Index>(d)] = axes_[d][index % axes_[d].size()];
      index /= axes_[d].size();
    }
    return DesignPoint(c, bounds_);
  }

 private:
  std::vector<std::vector<double>> axes_;
  Bounds bounds_;
};

struct SweepResult {
  std::vector<est::UtilityEstimate> estimates;  ///< grid order
  std::vector<bool> failed;                     ///< per point; failed entries hold NaN means
  std::size_t argmax_index = 0;
  std::optional<DesignPoint> argmax;
  double max_value = -std::numeric_limits<double>::infinity();
  std::size_t n_failed_points() const { return static_cast<std::size_t>(std::count(failed.begin(), failed.end(), true)); }
};

using PointEstimator = std::function<est::UtilityEstimate(const DesignPoint&, const RngStream&)>;

/// Evaluates `eval` at every grid point, point k on stream.child(k). Failed
/// points are recorded; more than `max_failed_fraction` of them fails the sweep.
inline SweepResult grid_sweep(const DesignGrid& grid, const PointEstimator& eval, const RngStream& stream,
                              std::size_t workers = 1, double max_failed_fraction = 0.1) {
  const std::size_t n = grid.size();
  std::vector<std::optional<est::UtilityEstimate>> slots(n);
  parallel_for(n, workers, [&](std::size_t k) {
    try {
      slots[k] = eval(grid.point(k), stream.child(k));
    } catch (const EstimationError&) {
    } catch (const SimulationError&) {
    }
  });
  SweepResult res;
  for (std::size_t k = 0; k < n; ++k) {
    res.failed.push_back(!slots[k] || !std::isfinite(slots[k]->mean));
    if (slots[k]) {
      res.estimates.push_back(std::move(*slots[k]));
    } else {
      est::UtilityEstimate blank{grid.point(k), 0.0, 0.0, 0, 0, est::EstimatorKind::dr1, 0, 0, 0.0, {}};
      blank.mean = blank.std = std::numeric_limits<double>::quiet_NaN();
      res.estimates.push_back(std::move(blank));
    }
    // strict comparison keeps the lowest index on ties
    if (!res.failed[k] && res.estimates[k].mean > res.max_value) {
      res.max_value = res.estimates[k].mean;
      res.argmax_index = k;
    }
  }
  const std::size_t bad = res.n_failed_points();
  if (bad == n || static_cast<double>(bad) > max_failed_fraction * static_cast<double>(n))
    throw EstimationError("sweep failed at " + std::to_string(bad) + " of " + std::to_string(n) + " grid points");
  res.argmax = res.estimates[res.argmax_index].design;
  return res;
}

/// Sweep with one of the library's estimators. Grid points run concurrently on
/// cfg.workers threads; each estimate then runs single-threaded.
inline SweepResult grid_sweep(const Model& model, est::EstimatorKind kind, const DesignGrid& grid,
                              const est::EstimatorConfig& cfg, const RngStream& stream) {
  cfg.validate();
  for (std::size_t k = 0; k < grid.size(); ++k) check_design(model, grid.point(k));
  est::EstimatorConfig inner = cfg;
  inner.workers = 1;
  return grid_sweep(
      grid,
      [&](const DesignPoint& xi, const RngStream& s) { return est::estimate_utility(model, xi, kind, inner, s); },
      stream, cfg.workers);
}

/// Rows (xi..., mean, std) in grid order.
inline io::CsvTable export_curve(const SweepResult& sweep) {
  io::CsvTable t;
  const std::size_t d = sweep.estimates.empty() ? 1 : sweep.estimates.front().design.dim();
  for (std::size_t k = 0; k < d; ++k) t.header.push_back(d == 1 ? "xi" : "xi" + std::to_string(k + 1));
  t.header.push_back("mean");
  t.header.push_back("std");
  for (const auto& e : sweep.estimates) {
    std::vector<double> row(e.design.coordinates().begin(), e.design.coordinates().end());
    row.push_back(e.mean);
    row.push_back(e.std);
    t.add_numeric_row(row);
  }
  return t;
}

}  // namespace lfgo::design
