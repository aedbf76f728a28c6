#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace lfgo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Invalid arguments: out-of-bound designs, empty requests, dimension mismatches.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model was asked for a density it cannot evaluate.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical failure inside a simulator (e.g. a diverging SDE path).
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double failure_time)
      : std::runtime_error(what), failure_time_(failure_time) {}
  double failure_time() const noexcept { return failure_time_; }

 private:
  double failure_time_;
};

/// Density-ratio fitting failed.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A utility estimate could not be produced (too many failed outer points).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Strongly typed real vectors
// ---------------------------------------------------------------------------

template <class Tag>
struct TaggedVector {
  Vector values;

  TaggedVector() = default;
  explicit TaggedVector(Vector v) : values(std::move(v)) {}
  TaggedVector(std::initializer_list<double> v) : values(static_cast<Eigen::Index>(v.size())) {
    Eigen::Index i = 0;
    for (double x : v) values[i++] = x;
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
  double& operator[](std::size_t i) { return values[static_cast<Eigen::Index>(i)]; }
  bool all_finite() const { return values.allFinite(); }

  friend bool operator==(const TaggedVector& a, const TaggedVector& b) {
    return a.values.size() == b.values.size() && (a.values.array() == b.values.array()).all();
  }
};

struct ParamTag {};
struct ObservationTag {};
struct QoITag {};
struct SummaryTag {};

using ParamVector = TaggedVector<ParamTag>;
using Observation = TaggedVector<ObservationTag>;
using QoIValue = TaggedVector<QoITag>;
using SummaryVector = TaggedVector<SummaryTag>;

// ---------------------------------------------------------------------------
// Design space
// ---------------------------------------------------------------------------

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double x) const noexcept { return x >= lower && x <= upper; }
  double width() const noexcept { return upper - lower; }
};

class Bounds {
 public:
  Bounds() = default;
  explicit Bounds(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
    if (intervals_.empty()) throw DomainError("bounds need at least one dimension");
    for (const auto& iv : intervals_) {
      if (!std::isfinite(iv.lower) || !std::isfinite(iv.upper) || iv.lower > iv.upper)
        throw DomainError("bound interval must be finite with lower <= upper");
    }
  }
  Bounds(std::initializer_list<Interval> intervals) : Bounds(std::vector<Interval>(intervals)) {}

  /// n copies of the same interval.
  static Bounds uniform(std::size_t n, Interval iv) { return Bounds(std::vector<Interval>(n, iv)); }

  std::size_t dim() const noexcept { return intervals_.size(); }
  const Interval& operator[](std::size_t i) const { return intervals_.at(i); }
  const std::vector<Interval>& intervals() const noexcept { return intervals_; }

  bool contains(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
      if (!intervals_[i].contains(x[static_cast<Eigen::Index>(i)])) return false;
    return true;
  }

  /// Clamp into the box; used for clipping adjusted samples to prior support.
  Vector clamp(Vector x) const {
    for (std::size_t i = 0; i < dim(); ++i) {
      auto& v = x[static_cast<Eigen::Index>(i)];
      v = std::min(std::max(v, intervals_[i].lower), intervals_[i].upper);
    }
    return x;
  }

  /// Map a point of [0,1]^n onto the box, and back.
  Vector from_unit(const Vector& u) const {
    Vector x(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const auto& iv = intervals_[static_cast<std::size_t>(i)];
      x[i] = iv.lower + u[i] * iv.width();
    }
    return x;
  }
  Vector to_unit(const Vector& x) const {
    Vector u(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const auto& iv = intervals_[static_cast<std::size_t>(i)];
      u[i] = iv.width() > 0 ? (x[i] - iv.lower) / iv.width() : 0.0;
    }
    return u;
  }

 private:
  std::vector<Interval> intervals_;
};

/// A validated experimental design: coordinates inside their bounds.
class DesignPoint {
 public:
  DesignPoint(Vector coordinates, Bounds bounds) : coords_(std::move(coordinates)), bounds_(std::move(bounds)) {
    if (coords_.size() < 1) throw DomainError("design must have at least one coordinate");
    if (static_cast<std::size_t>(coords_.size()) != bounds_.dim())
      throw DomainError("design dimension does not match its bounds");
    if (!coords_.allFinite()) throw DomainError("design coordinates must be finite");
    for (std::size_t i = 0; i < bounds_.dim(); ++i) {
      const double x = coords_[static_cast<Eigen::Index>(i)];
      if (!bounds_[i].contains(x)) {
        std::ostringstream msg;
        msg << "design coordinate " << i << " = " << x << " outside [" << bounds_[i].lower << ", "
            << bounds_[i].upper << "]";
        throw DomainError(msg.str());
      }
    }
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(coords_.size()); }
  double operator[](std::size_t i) const { return coords_[static_cast<Eigen::Index>(i)]; }
  const Vector& coordinates() const noexcept { return coords_; }
  const Bounds& bounds() const noexcept { return bounds_; }

 private:
  Vector coords_;
  Bounds bounds_;
};

/// One draw (theta, y, z) from the prior joint at a single design.
struct JointSample {
  ParamVector theta;
  Observation y;
  QoIValue z;
};

}  // namespace lfgo
