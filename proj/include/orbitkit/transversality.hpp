#pragma once

#include "orbitkit/flow.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace orbitkit {

/// Crossings of the line R x {X} with the frontier of F^-1(U), touches included.
std::vector<CrossingEvent> lineCrossings(const VectorFieldModel& vf, const Vector& x, const DomainPredicate& u,
                                         double horizon);

struct TangencyScan {
  std::vector<Vector> grid;
  std::vector<bool> inSSigma;          // some crossing of the point's line is non-transverse
  std::vector<double> worstAbsDgds;    // smallest |dg/ds| over the line's events, +inf without events
  std::vector<std::pair<Vector, CrossingEvent>> witnesses;

  [[nodiscard]] Json toJson() const;
  /// Columns: point coordinates, flag, worst |dgds|.
  [[nodiscard]] std::string toCsv() const;
};

TangencyScan tangencyScan(const VectorFieldModel& vf, const DomainPredicate& u, const std::vector<Vector>& grid,
                          double horizon = 0.0);

enum class PointClass { Interior, Boundary, Exterior };
std::string_view nameOf(PointClass c);

struct PullbackOptions {
  std::size_t samples = 1000;
  double sSpan = 3.0;            // s drawn from [-sSpan, sSpan]
  double boundaryShare = 0.5;    // fraction of samples placed on located crossings
};

/// Fr(F^-1(U)) = F^-1(Fr(U)) on sampled (s, X): the U-side class of F(s, X)
/// against a perturbation flip test of (s, X) in F^-1(U).
Report pullbackBoundaryCheck(const VectorFieldModel& vf, const DomainPredicate& u, const PullbackOptions& options = {});

enum class InfinityVerdict { NoEvidence, PossibleTangencyAtInfinity };
std::string_view nameOf(InfinityVerdict v);

struct InfinityTangencyEvidence {
  double horizonR = 0.0;
  double rMax = 0.0;
  double deltaLowerBound = std::numeric_limits<double>::infinity();
  double sAtMinimum = std::numeric_limits<double>::quiet_NaN();
  std::size_t sSamples = 0;
  InfinityVerdict verdict = InfinityVerdict::NoEvidence;

  [[nodiscard]] Json toJson() const;
};

/// Smallest distance from X to the slices Sigma_s = {Y : F(s, Y) on the zero set
/// of a conjunct of U} over R <= |s| <= Rmax.
InfinityTangencyEvidence infinityTangencyProbe(const VectorFieldModel& vf, const DomainPredicate& u, const Vector& x,
                                               double r, double rMax, std::size_t sSamples = 64);

struct EndpointRow {
  Vector offset;
  double phi1 = 0.0;
  double phi2 = 0.0;
  Matrix fdH;      // rows phi1, phi2; columns coordinate directions; step h
  Matrix fdHalf;   // same at h/2
  double worstDisagreement = 0.0;
};

struct EndpointFunctions {
  PointRef center;
  double h = 0.0;
  std::vector<EndpointRow> rows;
  double worstDisagreement = 0.0;

  [[nodiscard]] Json toJson() const;
  /// Columns: offset, phi1, phi2, then the FD gradients at h and h/2.
  [[nodiscard]] std::string toCsv() const;
};

/// phi1 < phi2 of I'_{Y,U} = ]phi1(Y), phi2(Y)[ for Y = X + offset, with
/// central differences at h and h/2. Throws HypothesisViolation unless the line
/// of X meets U in one bounded interval with transverse ends, and
/// PersistenceViolation when some offset line does not.
EndpointFunctions endpointStability(const VectorFieldModel& vf, const DomainPredicate& u, const Vector& x,
                                    const std::vector<Vector>& offsets, double h = 1e-3, double horizon = 0.0);

}  // namespace orbitkit
