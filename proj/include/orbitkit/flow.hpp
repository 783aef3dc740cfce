#pragma once

#include "orbitkit/atlas.hpp"

#include <array>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace orbitkit {

/// Smooth vector field given by component expressions in the reference chart.
/// Other charts see it through the Jacobian of their forward map.
class VectorFieldModel {
 public:
  VectorFieldModel(std::shared_ptr<const ManifoldModel> manifold,
                   const std::vector<std::string>& components);

  [[nodiscard]] const ManifoldModel& manifold() const { return *manifold_; }
  [[nodiscard]] std::shared_ptr<const ManifoldModel> manifoldPtr() const { return manifold_; }
  [[nodiscard]] std::size_t dim() const { return manifold_->dim; }
  [[nodiscard]] const Tolerances& tol() const { return manifold_->tol; }
  [[nodiscard]] const std::vector<std::string>& componentText() const { return text_; }

  /// v at a reference point (speed limiter applied when enabled).
  [[nodiscard]] Vector operator()(const Vector& x) const;
  /// Components of v in `chart` at the reference point x.
  [[nodiscard]] Vector inChart(const ChartSpec& chart, const Vector& x) const;

  /// Periods per coordinate; 0 means the coordinate is not identified.
  void setPeriods(Vector periods);
  [[nodiscard]] bool periodic() const { return periodic_; }
  [[nodiscard]] const Vector& periods() const { return periods_; }
  [[nodiscard]] Vector wrap(const Vector& x) const;
  /// Difference a - b with periodic coordinates reduced to the shortest representative.
  [[nodiscard]] Vector difference(const Vector& a, const Vector& b) const;
  [[nodiscard]] double distance(const Vector& a, const Vector& b) const;

  void setSpeedLimiter(bool on) { speedLimiter_ = on; }
  [[nodiscard]] bool speedLimiter() const { return speedLimiter_; }

  /// Components declared by a scene in some other chart, checked for consistency.
  void declareChartComponents(const std::string& chartId, const std::vector<std::string>& components);
  [[nodiscard]] const std::map<std::string, std::vector<Expr>>& declaredChartComponents() const {
    return declared_;
  }

 private:
  std::shared_ptr<const ManifoldModel> manifold_;
  std::vector<CompiledExpr> components_;
  std::vector<std::string> text_;
  Vector periods_;
  bool periodic_ = false;
  bool speedLimiter_ = false;
  std::map<std::string, std::vector<Expr>> declared_;
};

/// Pushforward consistency of declared chart components and, when asked, |v| > tol_sing.
Report checkFieldConsistency(const VectorFieldModel& vf, std::size_t samples, bool nonVanishing);

enum class FlowStatus { Interior, ExitedModelDomain, HorizonReached, StepFailure };
std::string_view nameOf(FlowStatus s);

struct FlowResult {
  PointRef point;  // reference chart
  FlowStatus status = FlowStatus::Interior;
  double sAchieved = 0.0;
};

/// One accepted Dormand-Prince step with its continuous extension.
struct DenseStep {
  double s0 = 0.0;
  double h = 0.0;      // signed step
  double sEnd = 0.0;   // s0 + h unless truncated at a domain exit
  Vector y0;
  Vector y1;           // unwrapped position at s0 + h
  std::array<Vector, 5> r;

  [[nodiscard]] Vector at(double s) const;
};

/// Integral curve of v through a seed, over [sMin, sMax] with s = 0 at the seed.
/// Positions are unwrapped; use `wrappedAt` for predicates.
class Trajectory {
 public:
  Trajectory(const VectorFieldModel& vf, Vector seed);

  void extend(double sBackward, double sForward, bool stopAtModelExit = true);

  [[nodiscard]] const Vector& seed() const { return seed_; }
  [[nodiscard]] double sMin() const { return sMin_; }
  [[nodiscard]] double sMax() const { return sMax_; }
  [[nodiscard]] FlowStatus forwardStatus() const { return forwardStatus_; }
  [[nodiscard]] FlowStatus backwardStatus() const { return backwardStatus_; }

  [[nodiscard]] Vector at(double s) const;
  [[nodiscard]] Vector wrappedAt(double s) const { return vf_->wrap(at(s)); }
  /// Re-integrates from the start of the enclosing step instead of interpolating.
  [[nodiscard]] Vector exactAt(double s) const;
  /// Ascending parameters: step ends plus `internal` equally spaced points per step.
  [[nodiscard]] std::vector<double> sampleParameters(int internal = 8) const;
  [[nodiscard]] const VectorFieldModel& field() const { return *vf_; }
  [[nodiscard]] std::size_t stepCount() const { return forward_.size() + backward_.size(); }

 private:
  const DenseStep& stepFor(double s) const;
  FlowStatus integrate(int direction, double target, bool stopAtModelExit);

  const VectorFieldModel* vf_;
  Vector seed_;
  std::vector<DenseStep> forward_;
  std::vector<DenseStep> backward_;
  double sMin_ = 0.0;
  double sMax_ = 0.0;
  FlowStatus forwardStatus_ = FlowStatus::HorizonReached;
  FlowStatus backwardStatus_ = FlowStatus::HorizonReached;
};

/// Single explicit step of the integrator from y over signed parameter h.
Vector rkStep(const VectorFieldModel& vf, const Vector& y, double h);

/// A zero or tangential touch of one conjunct along a trajectory.
struct LocatedZero {
  double s = 0.0;
  std::size_t conjunct = 0;
  bool touch = false;
  double value = 0.0;   // conjunct value at the refined point
  double dvds = 0.0;    // d(conjunct)/ds there
  double gradNorm = 0.0;
};

/// All zeros and touches of `f` along the sampled trajectory.
std::vector<LocatedZero> locateZeros(const Trajectory& path, const ScalarFunction& f, std::size_t index,
                                     const std::vector<double>& s, const std::vector<double>& values,
                                     double tolEvent);

FlowResult flow(const VectorFieldModel& vf, const Vector& x, double s);
FlowResult flow(const VectorFieldModel& vf, const PointRef& x, double s);

Report groupLawCheck(const VectorFieldModel& vf, const Vector& x, double s, double t);

enum class EndpointKind { Crossing, Horizon, ModelBoundary };
std::string_view nameOf(EndpointKind k);

struct Endpoint {
  double s = 0.0;
  EndpointKind kind = EndpointKind::Horizon;
  double dgds = std::numeric_limits<double>::quiet_NaN();  // Crossing only; g = -conjunct
  std::optional<std::size_t> conjunct;
};

struct IntervalComponent {
  Endpoint lower;
  Endpoint upper;
  [[nodiscard]] double length() const { return upper.s - lower.s; }
  [[nodiscard]] double mid() const { return 0.5 * (lower.s + upper.s); }
  [[nodiscard]] bool contains(double s) const { return s > lower.s && s < upper.s; }
  [[nodiscard]] bool bounded() const {
    return lower.kind == EndpointKind::Crossing && upper.kind == EndpointKind::Crossing;
  }
};

/// Intersection of the line R x {X} with the boundary of F^{-1}(U).
struct CrossingEvent {
  double s = 0.0;
  std::size_t boundaryConjunct = 0;
  double dgds = 0.0;
  bool transverse = true;
  bool flip = true;  // membership in U changes across the event
  Vector point;      // reference coordinates, wrapped
};

struct IntervalSet {
  std::vector<IntervalComponent> components;
  std::vector<CrossingEvent> events;   // every located boundary event, ascending
  std::vector<std::string> warnings;   // TangentialCrossingWarning entries
  double horizon = 0.0;
  double sMin = 0.0;
  double sMax = 0.0;
  FlowStatus forwardStatus = FlowStatus::HorizonReached;
  FlowStatus backwardStatus = FlowStatus::HorizonReached;

  [[nodiscard]] std::optional<std::size_t> componentContaining(double s) const;
  [[nodiscard]] Json toJson() const;
};

IntervalSet intervalSet(const VectorFieldModel& vf, const Vector& x, const DomainPredicate& u, double horizon);
/// Same, reusing an already traced trajectory.
IntervalSet intervalSet(const Trajectory& path, const DomainPredicate& u, double horizon);

struct OrbitRef {
  PointRef seed;
  bool periodic = false;
  std::optional<double> period;
  std::vector<std::pair<double, Vector>> samples;  // (s, reference point)
  double horizon = 0.0;
  FlowStatus forwardStatus = FlowStatus::HorizonReached;
  FlowStatus backwardStatus = FlowStatus::HorizonReached;
};

/// First return time s* > 0 with |F(s*,X) - X| < tol_orbit and aligned velocity.
std::optional<double> detectPeriod(const Trajectory& path, double tolOrbit);

OrbitRef orbitPolyline(const VectorFieldModel& vf, const Vector& x, double horizon, std::size_t maxPoints);

}  // namespace orbitkit
