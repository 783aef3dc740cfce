#pragma once

#include "orbitkit/core.hpp"
#include "orbitkit/expr.hpp"
#include "orbitkit/report.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace orbitkit {

/// Smooth real function on reference coordinates; a domain conjunct means
/// value(p) > 0.
class ScalarFunction {
 public:
  virtual ~ScalarFunction() = default;
  [[nodiscard]] virtual double value(const Vector& p) const = 0;
  /// Value plus gradient; `grad` is resized by the callee.
  virtual double valueGradient(const Vector& p, Vector& grad) const = 0;
  [[nodiscard]] virtual std::string describe() const = 0;
  [[nodiscard]] virtual bool smooth() const { return true; }
};
using ScalarFunctionPtr = std::shared_ptr<const ScalarFunction>;

class ExprFunction final : public ScalarFunction {
 public:
  ExprFunction(const Expr& e, std::size_t dim);
  [[nodiscard]] double value(const Vector& p) const override;
  double valueGradient(const Vector& p, Vector& grad) const override;
  [[nodiscard]] std::string describe() const override { return text_; }
  [[nodiscard]] bool smooth() const override { return program_.smooth(); }

 private:
  CompiledExpr program_;
  std::string text_;
};

ScalarFunctionPtr exprFunction(std::string_view text, std::size_t dim);

/// Map between coordinate tuples of equal length.
class CoordinateMap {
 public:
  virtual ~CoordinateMap() = default;
  [[nodiscard]] virtual std::size_t dim() const = 0;
  [[nodiscard]] virtual Vector apply(const Vector& p) const = 0;
  [[nodiscard]] virtual Matrix jacobian(const Vector& p) const = 0;
  [[nodiscard]] virtual std::vector<std::string> describe() const = 0;
  [[nodiscard]] virtual bool numeric() const { return false; }
};
using CoordinateMapPtr = std::shared_ptr<const CoordinateMap>;

class ExprMap final : public CoordinateMap {
 public:
  ExprMap(const std::vector<Expr>& components, std::size_t dim);
  [[nodiscard]] std::size_t dim() const override { return components_.size(); }
  [[nodiscard]] Vector apply(const Vector& p) const override;
  [[nodiscard]] Matrix jacobian(const Vector& p) const override;
  [[nodiscard]] std::vector<std::string> describe() const override;

 private:
  std::vector<CompiledExpr> components_;
};

CoordinateMapPtr exprMap(const std::vector<std::string>& texts, std::size_t dim);
CoordinateMapPtr identityMap(std::size_t dim);

/// sign * (map(p)[index] - bound) > 0: one face of a coordinate box in chart
/// coordinates.
class ChartComponentBound final : public ScalarFunction {
 public:
  ChartComponentBound(CoordinateMapPtr map, std::size_t index, double bound, double sign,
                      std::string label);
  [[nodiscard]] double value(const Vector& p) const override;
  double valueGradient(const Vector& p, Vector& grad) const override;
  [[nodiscard]] std::string describe() const override;

 private:
  CoordinateMapPtr map_;
  std::size_t index_;
  double bound_;
  double sign_;
  std::string label_;
};

/// radius^2 - |P_S(map(p)) - centre|^2 > 0.
class ChartSpatialBall final : public ScalarFunction {
 public:
  ChartSpatialBall(CoordinateMapPtr map, Vector centre, double radius, std::string label);
  [[nodiscard]] double value(const Vector& p) const override;
  double valueGradient(const Vector& p, Vector& grad) const override;
  [[nodiscard]] std::string describe() const override;

 private:
  CoordinateMapPtr map_;
  Vector centre_;
  double radius_;
  std::string label_;
};

/// Finite union of finite intersections of open sets {e > 0}. A predicate with
/// one empty term is the whole space; one with no terms is empty.
class DomainPredicate {
 public:
  DomainPredicate() : terms_{{}} {}
  static DomainPredicate everything() { return {}; }
  static DomainPredicate nothing();
  static DomainPredicate conjunction(const std::vector<ScalarFunctionPtr>& conjuncts);
  static DomainPredicate unionOf(const std::vector<std::vector<ScalarFunctionPtr>>& terms);

  [[nodiscard]] DomainPredicate intersect(const DomainPredicate& other) const;

  /// False where any conjunct fails to evaluate.
  [[nodiscard]] bool contains(const Vector& p) const;
  [[nodiscard]] bool containsGiven(std::span<const double> conjunctValues) const;
  /// Not in the set, and within `tol` (relative to |grad|) of a term's closure.
  [[nodiscard]] bool nearBoundary(const Vector& p, double tol) const;

  [[nodiscard]] const std::vector<ScalarFunctionPtr>& conjuncts() const { return conjuncts_; }
  [[nodiscard]] const std::vector<std::vector<std::size_t>>& terms() const { return terms_; }
  [[nodiscard]] bool unrestricted() const;
  [[nodiscard]] bool smooth() const;
  [[nodiscard]] std::string describe() const;

 private:
  std::size_t addConjunct(const ScalarFunctionPtr& f);

  std::vector<ScalarFunctionPtr> conjuncts_;
  std::vector<std::vector<std::size_t>> terms_;
};

struct ChartSpec {
  std::string id;
  std::size_t dim = 0;
  CoordinateMapPtr forward;  // reference coordinates -> chart coordinates
  CoordinateMapPtr inverse;  // chart coordinates -> reference coordinates
  DomainPredicate domain;    // in reference coordinates
  std::string description;

  [[nodiscard]] bool numeric() const { return forward->numeric() || inverse->numeric(); }
};

ChartSpec identityChart(std::string id, std::size_t dim, DomainPredicate domain = {});

struct ManifoldModel {
  std::size_t dim = 0;
  ChartSpec reference;
  std::vector<ChartSpec> atlas;
  Box samplingBox;
  Tolerances tol;
  std::uint64_t seed = 1;

  [[nodiscard]] const ChartSpec& chart(std::string_view id) const;
  [[nodiscard]] bool hasChart(std::string_view id) const;
  [[nodiscard]] const DomainPredicate& domain() const { return reference.domain; }
};

struct PointRef {
  std::string chart;
  Vector coords;
};

/// Throws DimensionMismatch or NonFinite unless `c` is a valid coordinate tuple.
void requireCoordinates(const Vector& c, std::size_t dim);

/// Chart coordinates of the reference point `p`.
Vector evalChart(const ChartSpec& chart, const Vector& p);
Vector spatialProject(const Vector& c);
/// forward_b(inverse_a(c)).
Vector transition(const ChartSpec& a, const ChartSpec& b, const Vector& c);
Matrix transitionJacobian(const ChartSpec& a, const ChartSpec& b, const Vector& c);
/// Reference coordinates of a point given in any chart of the model.
Vector toReference(const ManifoldModel& m, const PointRef& p);

Report checkAtlasCompatibility(const ManifoldModel& m, std::size_t samples);
/// inverse(forward(p)) = p on sampled domain points of every chart.
Report checkChartRoundTrips(const ManifoldModel& m, std::size_t samples);

}  // namespace orbitkit
