#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace orbitkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorKind {
  SyntaxError,
  UnknownFunction,
  ArityError,
  UnboundVariable,
  UnknownVariable,
  NonFinite,
  DomainViolation,
  OverlapViolation,
  StepFailure,
  ZeroOfF,
  QuadratureFailure,
  IsolationUnavailable,
  NotNice,
  OrbitMissesTarget,
  PersistenceViolation,
  HypothesisViolation,
  ValidationError,
  DimensionMismatch,
};

std::string_view nameOf(ErrorKind kind);

/// Every failure raised by the library. `offset()` is a byte offset into the
/// text that caused the error, when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> offset = std::nullopt);

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> offset_;
};

/// Numerical tolerance ladder shared by every module. Scenes may override any
/// entry.
struct Tolerances {
  double chart = 1e-9;     // chart round trips, transition cocycles
  double singular = 1e-12; // Jacobian determinants, |v|, |f|
  double field = 1e-7;     // vector transformation, fiber alignment
  double position = 1e-9;  // per-step integration error
  double event = 1e-10;    // s-accuracy of located crossings
  double tangent = 1e-7;   // |dg/ds| below this is a tangency
  double check = 1e-6;     // closed-form and structural checks
  double orbit = 1e-6;     // orbit return / membership distance
  double delta = 1e-6;     // distance-to-slice threshold at infinity
  double maxStep = 0.1;    // integrator step cap
  double horizon = 100.0;  // S_max
};

/// Axis-aligned box used for deterministic sampling.
struct Box {
  Vector lower;
  Vector upper;

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
  [[nodiscard]] bool contains(const Vector& p) const;
  [[nodiscard]] Vector center() const { return 0.5 * (lower + upper); }
  [[nodiscard]] Vector at(const Vector& unit) const;  // unit cube -> box
};

inline std::span<const double> view(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

Vector toVector(std::span<const double> values);
Vector toVector(const std::vector<double>& values);
std::vector<double> toStd(const Vector& v);

double maxNorm(const Vector& v);

}  // namespace orbitkit
