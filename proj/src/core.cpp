#include "orbitkit/core.hpp"

namespace orbitkit {

std::string_view nameOf(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnknownFunction: return "UnknownFunction";
    case ErrorKind::ArityError: return "ArityError";
    case ErrorKind::UnboundVariable: return "UnboundVariable";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::OverlapViolation: return "OverlapViolation";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::ZeroOfF: return "ZeroOfF";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::IsolationUnavailable: return "IsolationUnavailable";
    case ErrorKind::NotNice: return "NotNice";
    case ErrorKind::OrbitMissesTarget: return "OrbitMissesTarget";
    case ErrorKind::PersistenceViolation: return "PersistenceViolation";
    case ErrorKind::HypothesisViolation: return "HypothesisViolation";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
  }
  return "Unknown";
}

namespace {
std::string decorate(ErrorKind kind, const std::string& message,
                     std::optional<std::size_t> offset) {
  std::string out(nameOf(kind));
  if (offset) out += " at offset " + std::to_string(*offset);
  out += ": " + message;
  return out;
}
}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> offset)
    : std::runtime_error(decorate(kind, message, offset)), kind_(kind), offset_(offset) {}

bool Box::contains(const Vector& p) const {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < lower[i] || p[i] > upper[i]) return false;
  }
  return true;
}

Vector Box::at(const Vector& unit) const {
  return lower + unit.cwiseProduct(upper - lower);
}

Vector toVector(std::span<const double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

Vector toVector(const std::vector<double>& values) {
  return toVector(std::span<const double>(values));
}

std::vector<double> toStd(const Vector& v) { return {v.data(), v.data() + v.size()}; }

double maxNorm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace orbitkit
