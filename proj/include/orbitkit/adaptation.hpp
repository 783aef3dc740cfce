#pragma once

#include "orbitkit/flow.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace orbitkit {

/// P_S(chart(x)) for a reference point x.
Vector chartSpatial(const ChartSpec& chart, const Vector& x);

struct FiberAlignment {
  bool aligned = false;
  std::vector<std::pair<PointRef, double>> fSamples;  // f where v = f d_0
  double worstSpatialComponent = 0.0;
  double fMin = 0.0;  // extremes of f over the samples
  double fMax = 0.0;
  std::size_t sampleCount = 0;

  [[nodiscard]] Report toReport() const;
};

/// Pushes v into `chart` on sampled domain points; aligned iff every spatial
/// component is below tol_field.
FiberAlignment checkFiberAligned(const VectorFieldModel& vf, const ChartSpec& chart, std::size_t samples = 256);

/// y'0 = integral from c0 to y0 of du / f(u, y), the spatial coordinates left
/// unchanged. Evaluated by adaptive Gauss-Kronrod quadrature on demand.
class StraightenedMap final : public CoordinateMap {
 public:
  /// `box` is the base-chart box the chart lives on; c0 is where y'0 = 0.
  StraightenedMap(std::shared_ptr<const VectorFieldModel> vf, ChartSpec base, Box box, double c0);

  [[nodiscard]] std::size_t dim() const override { return base_.dim; }
  [[nodiscard]] Vector apply(const Vector& p) const override;
  [[nodiscard]] Matrix jacobian(const Vector& p) const override;
  [[nodiscard]] std::vector<std::string> describe() const override;
  [[nodiscard]] bool numeric() const override { return true; }

  /// f(u, y): the d_0 component of v in the base chart at chart point (u, y).
  [[nodiscard]] double f(double u, const Vector& spatial) const;
  /// Integral of 1/f from c0 to u at fixed spatial coordinates.
  [[nodiscard]] double reparam(double u, const Vector& spatial) const;
  /// Solves reparam(u, spatial) = w for u.
  [[nodiscard]] double solve(double w, const Vector& spatial) const;
  [[nodiscard]] const ChartSpec& base() const { return base_; }
  [[nodiscard]] double c0() const { return c0_; }
  [[nodiscard]] const Box& box() const { return box_; }

 private:
  [[nodiscard]] double integrate(double a, double b, const Vector& spatial) const;

  std::shared_ptr<const VectorFieldModel> vf_;
  ChartSpec base_;
  Box box_;
  double c0_;
};

/// Inverse of a StraightenedMap: (w, y) -> reference point.
class StraightenedInverse final : public CoordinateMap {
 public:
  explicit StraightenedInverse(std::shared_ptr<const StraightenedMap> forward) : forward_(std::move(forward)) {}
  [[nodiscard]] std::size_t dim() const override { return forward_->dim(); }
  [[nodiscard]] Vector apply(const Vector& q) const override;
  [[nodiscard]] Matrix jacobian(const Vector& q) const override;
  [[nodiscard]] std::vector<std::string> describe() const override;
  [[nodiscard]] bool numeric() const override { return true; }

 private:
  std::shared_ptr<const StraightenedMap> forward_;
};

/// Straightening-out chart around X: only the 0th coordinate changes, and its
/// domain is the preimage of the chart box of the given radius around chart(X).
/// Throws ZeroOfF, QuadratureFailure, DomainViolation (box leaves the chart) or
/// HypothesisViolation (chart not fiber-aligned).
ChartSpec buildStraightening(const VectorFieldModel& vf, const ChartSpec& chart, const Vector& x, double radius);

/// Table of a numeric straightening chart for export: y'0 at grid nodes of the
/// base-chart box, to be read back with monotone cubic interpolation along u.
Json straighteningTable(const ChartSpec& straightened, std::size_t perAxis);

/// Each slice {s : chart^-1(s, x) in U} must be a single interval.
Report checkProductForm(const ManifoldModel& m, const ChartSpec& chart, const DomainPredicate& u,
                        std::size_t gridPerAxis = 41, std::size_t scanPoints = 1200);

struct AdaptedOptions {
  std::size_t budget = 64;     // seed grid size
  double horizon = 0.0;        // 0 means tol.horizon
  std::vector<Vector> seeds;   // used instead of the grid when non-empty
};

struct OrbitSlice {
  Vector seed;
  Vector bar;                     // P_S(chart(seed))
  std::size_t components = 0;     // arcs of the orbit inside U (one period if periodic)
  double spread = 0.0;            // largest |x - bar| over all arcs
  double componentSpread = 0.0;   // same, restricted to the arc through the seed
  std::optional<double> period;
  bool constancyAdapted = false;  // x constant over every arc
  bool sliceAdapted = false;      // a single arc, x constant on it
  Vector farthest;                // x value realising `spread`
};

struct AdaptedVerdict {
  bool adapted = false;
  bool nice = false;
  bool sliceAdapted = false;       // component-count detector
  bool constancyAdapted = false;   // x-constancy detector
  std::size_t detectorDisagreements = 0;
  std::vector<Witness> witnesses;
  std::vector<std::pair<Vector, Vector>> barValues;  // (orbit seed, chi bar), one per distinct orbit
  std::vector<OrbitSlice> orbits;
  double horizon = 0.0;
  std::size_t periodicOrbits = 0;

  [[nodiscard]] Report toReport() const;
};

AdaptedVerdict checkAdapted(const VectorFieldModel& vf, const ChartSpec& chart, const DomainPredicate& u,
                            const AdaptedOptions& options = {});

/// Slices of one orbit through `seed`; building block of checkAdapted.
OrbitSlice orbitSlice(const VectorFieldModel& vf, const ChartSpec& chart, const DomainPredicate& u,
                      const Vector& seed, double horizon, double tolCheck);

struct ReturnSet {
  std::string chart;
  PointRef orbitSeed;
  std::vector<Vector> xValues;
  double minGap = 0.0;              // +inf with fewer than two returns
  double minGapAtTenth = 0.0;       // same over a tenth of the horizon
  double horizon = 0.0;
  bool isolationEvidence = false;

  [[nodiscard]] Json toJson() const;
};

/// Spatial coordinates of every arc of the orbit of X inside the chart domain.
ReturnSet returnSetProbe(const VectorFieldModel& vf, const ChartSpec& chart, const Vector& x, double horizon);

/// Chart domain cut down to a spatial ball of radius minGap/3 around x(X).
/// Throws IsolationUnavailable without isolation evidence.
DomainPredicate shrinkToIsolate(const VectorFieldModel& vf, const ChartSpec& chart, const Vector& x,
                                const ReturnSet& returns);

enum class NormalityStatus { NormalEvidence, Counterexample, Inconclusive };
std::string_view nameOf(NormalityStatus s);

struct NormalityOptions {
  std::size_t seedsPerPoint = 24;
  double sectionRadius = 0.25;
  double horizon = 0.0;  // 0 means tol.horizon
};

/// Pointwise evidence for normality: non-periodicity, isolated section
/// returns, and a flow box W whose orbits cross the section disk exactly once.
Report normalityProbe(const VectorFieldModel& vf, const std::vector<Vector>& points,
                      const NormalityOptions& options = {});

}  // namespace orbitkit
