#pragma once

#include "orbitkit/adaptation.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace orbitkit {

enum class OrbitConfidence { Proven, UnreachedWithinHorizon };
std::string_view nameOf(OrbitConfidence c);

struct SameOrbit {
  bool same = false;
  OrbitConfidence confidence = OrbitConfidence::UnreachedWithinHorizon;
  double s = std::numeric_limits<double>::quiet_NaN();  // F(s, X) ~ Y when same
  double distance = std::numeric_limits<double>::infinity();
};

/// Whether Y lies on the orbit of X within the horizon (both directions).
SameOrbit sameOrbit(const VectorFieldModel& vf, const Vector& x, const Vector& y, double horizon);

struct OrbitKey {
  std::string niceChart;
  Vector xValue;
  PointRef seed;
};

/// chi bar for a nice v-adapted chart (chi, U): orbit -> P_S(chi(orbit n U)).
class OrbitChart {
 public:
  OrbitChart(const VectorFieldModel& vf, ChartSpec source, DomainPredicate u, std::vector<Vector> barValues,
             double horizon);

  [[nodiscard]] const std::string& id() const { return source_.id; }
  [[nodiscard]] const ChartSpec& source() const { return source_; }
  /// U intersected with the source chart domain, in reference coordinates.
  [[nodiscard]] const DomainPredicate& domain() const { return u_; }
  [[nodiscard]] const std::vector<Vector>& sampledBars() const { return bars_; }
  /// Bounding box of the sampled chi bar values.
  [[nodiscard]] const Box& barBox() const { return barBox_; }
  [[nodiscard]] double horizon() const { return horizon_; }
  /// Bounding box of chi(U) over sampled points of U.
  [[nodiscard]] const Box& chartBox() const { return chartBox_; }

  [[nodiscard]] bool inU(const Vector& x) const;
  /// chi bar of the orbit through x. Throws OrbitMissesTarget if it never meets U.
  [[nodiscard]] Vector bar(const Vector& x) const;
  /// A time t with (t, y) in chi(U), or nothing when y is outside chi bar(D_U).
  [[nodiscard]] std::optional<double> liftTime(const Vector& y) const;
  [[nodiscard]] bool inImage(const Vector& y) const { return liftTime(y).has_value(); }
  /// chi^-1(t, y).
  [[nodiscard]] Vector lift(const Vector& y, double t) const;
  /// Reference point of the orbit with chi bar = y. Throws OrbitMissesTarget.
  [[nodiscard]] Vector lift(const Vector& y) const;
  [[nodiscard]] OrbitKey key(const Vector& x) const;

 private:
  const VectorFieldModel* vf_;
  ChartSpec source_;
  DomainPredicate u_;
  std::vector<Vector> bars_;
  Box barBox_;
  Box chartBox_;  // bounding box of chi(U) over sampled points
  double horizon_;
};

/// Throws NotNice unless the verdict is adapted and nice.
OrbitChart makeOrbitChart(const VectorFieldModel& vf, const ChartSpec& chart, const DomainPredicate& u,
                          const AdaptedVerdict& verdict);

/// chi bar_B o chi bar_A^-1 near a base point, with the flow shift s frozen
/// at the value found for the base orbit.
class QuotientTransition {
 public:
  /// Throws OrbitMissesTarget when the base orbit never meets U_B.
  QuotientTransition(const VectorFieldModel& vf, const OrbitChart& a, const OrbitChart& b, const Vector& y,
                     double t);
  [[nodiscard]] Vector operator()(const Vector& y) const;
  [[nodiscard]] double shift() const { return s_; }
  [[nodiscard]] double liftTime() const { return t_; }

 private:
  const VectorFieldModel* vf_;
  const OrbitChart* a_;
  const OrbitChart* b_;
  double t_;
  double s_;
};

Vector quotientTransition(const VectorFieldModel& vf, const OrbitChart& a, const OrbitChart& b, const Vector& y,
                          double t);
/// Same, with t taken from a's lift of y.
Vector quotientTransition(const VectorFieldModel& vf, const OrbitChart& a, const OrbitChart& b, const Vector& y);

/// Smoothness (FD Jacobian two-step agreement) and invertibility of every
/// pairwise quotient transition at sampled chi bar values.
Report atlasCompatibilityQuotient(const VectorFieldModel& vf, const std::vector<OrbitChart>& charts,
                                  std::size_t samples);

enum class Separation { Separated, NotSeparatedWitness, Inconclusive };
std::string_view nameOf(Separation s);

struct SeparationWitness {
  int step = 0;
  double radius = 0.0;
  Vector witnessSeed;   // reference point of the orbit meeting both neighbourhoods
  Vector barInFirst;    // its chi bar in the first key's chart
  Vector barInSecond;
};

struct SeparationVerdict {
  Separation status = Separation::Inconclusive;
  std::string chartFirst;
  std::string chartSecond;
  std::optional<Box> boxFirst;
  std::optional<Box> boxSecond;
  std::vector<SeparationWitness> witnesses;
  double resolution = 0.0;
  std::vector<std::string> notes;

  [[nodiscard]] Json toJson() const;
};

/// Separation of two distinct orbits: a single-chart box construction when one
/// chart sees both, otherwise a witness search over shrinking radii 2^-(n-1).
SeparationVerdict hausdorffProbe(const VectorFieldModel& vf, const std::vector<OrbitChart>& charts,
                                 const OrbitKey& k1, const OrbitKey& k2, int shrinkSteps = 20);

/// b o a^-1 keeps x^0 and has no x^0-dependence in its spatial part.
Report frameEquivalent(const ManifoldModel& m, const ChartSpec& a, const ChartSpec& b, std::size_t samples);

struct LocalFrame {
  DomainPredicate domain;
  std::vector<ChartSpec> charts;
};

/// I = chi bar^-1 o chi tilde on sampled world lines of the frame.
/// Throws HypothesisViolation when a frame chart is not nice on the domain.
Report embedLocalToGlobal(const VectorFieldModel& vf, const LocalFrame& frame, const OrbitChart& orbitChart,
                          std::size_t lines, std::size_t pointsPerLine = 20);

/// True when some orbit chart is global: its U is the whole model domain.
bool metrizableSeparable(const VectorFieldModel& vf, const std::vector<OrbitChart>& charts);

}  // namespace orbitkit
