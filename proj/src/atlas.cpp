#include "orbitkit/atlas.hpp"

#include "orbitkit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace orbitkit {

ExprFunction::ExprFunction(const Expr& e, std::size_t dim)
    : program_(e, coordinateNames(dim)), text_(render(e)) {}

double ExprFunction::value(const Vector& p) const {
  return program_(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

double ExprFunction::valueGradient(const Vector& p, Vector& grad) const {
  grad.resize(p.size());
  return program_.withGradient(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                               std::span<double>(grad.data(), static_cast<std::size_t>(grad.size())));
}

ScalarFunctionPtr exprFunction(std::string_view text, std::size_t dim) {
  return std::make_shared<ExprFunction>(parse(text), dim);
}

ExprMap::ExprMap(const std::vector<Expr>& components, std::size_t dim) {
  if (components.size() != dim) {
    throw Error(ErrorKind::DimensionMismatch,
                "map has " + std::to_string(components.size()) + " components, expected " + std::to_string(dim));
  }
  const auto names = coordinateNames(dim);
  for (const auto& c : components) components_.emplace_back(c, names);
}

Vector ExprMap::apply(const Vector& p) const {
  Vector out(static_cast<Eigen::Index>(components_.size()));
  const std::span<const double> in(p.data(), static_cast<std::size_t>(p.size()));
  for (std::size_t i = 0; i < components_.size(); ++i) out[static_cast<Eigen::Index>(i)] = components_[i](in);
  return out;
}

Matrix ExprMap::jacobian(const Vector& p) const {
  const auto n = static_cast<Eigen::Index>(components_.size());
  Matrix j(n, p.size());
  Vector row(p.size());
  const std::span<const double> in(p.data(), static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    (void)components_[static_cast<std::size_t>(i)].withGradient(
        in, std::span<double>(row.data(), static_cast<std::size_t>(row.size())));
    j.row(i) = row.transpose();
  }
  return j;
}

std::vector<std::string> ExprMap::describe() const {
  std::vector<std::string> out;
  for (const auto& c : components_) out.push_back(render(c.source()));
  return out;
}

CoordinateMapPtr exprMap(const std::vector<std::string>& texts, std::size_t dim) {
  std::vector<Expr> parsed;
  parsed.reserve(texts.size());
  for (const auto& t : texts) parsed.push_back(parse(t));
  return std::make_shared<ExprMap>(parsed, dim);
}

CoordinateMapPtr identityMap(std::size_t dim) {
  return exprMap(coordinateNames(dim), dim);
}

ChartComponentBound::ChartComponentBound(CoordinateMapPtr map, std::size_t index, double bound,
                                         double sign, std::string label)
    : map_(std::move(map)), index_(index), bound_(bound), sign_(sign), label_(std::move(label)) {}

double ChartComponentBound::value(const Vector& p) const {
  return sign_ * (map_->apply(p)[static_cast<Eigen::Index>(index_)] - bound_);
}

double ChartComponentBound::valueGradient(const Vector& p, Vector& grad) const {
  grad = sign_ * map_->jacobian(p).row(static_cast<Eigen::Index>(index_)).transpose();
  return value(p);
}

std::string ChartComponentBound::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << label_ << "[" << index_ << "] " << (sign_ > 0 ? "> " : "< ") << bound_;
  return os.str();
}

ChartSpatialBall::ChartSpatialBall(CoordinateMapPtr map, Vector centre, double radius, std::string label)
    : map_(std::move(map)), centre_(std::move(centre)), radius_(radius), label_(std::move(label)) {}

double ChartSpatialBall::value(const Vector& p) const {
  const Vector d = spatialProject(map_->apply(p)) - centre_;
  return radius_ * radius_ - d.squaredNorm();
}

double ChartSpatialBall::valueGradient(const Vector& p, Vector& grad) const {
  const Vector d = spatialProject(map_->apply(p)) - centre_;
  const Matrix j = map_->jacobian(p);
  grad = -2.0 * (j.bottomRows(j.rows() - 1).transpose() * d);
  return radius_ * radius_ - d.squaredNorm();
}

std::string ChartSpatialBall::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "|P_S(" << label_ << ") - (";
  for (Eigen::Index i = 0; i < centre_.size(); ++i) os << (i ? ", " : "") << centre_[i];
  os << ")| < " << radius_;
  return os.str();
}

DomainPredicate DomainPredicate::nothing() {
  DomainPredicate d;
  d.terms_.clear();
  return d;
}

std::size_t DomainPredicate::addConjunct(const ScalarFunctionPtr& f) {
  const std::string text = f->describe();
  for (std::size_t i = 0; i < conjuncts_.size(); ++i) {
    if (conjuncts_[i] == f || conjuncts_[i]->describe() == text) return i;
  }
  conjuncts_.push_back(f);
  return conjuncts_.size() - 1;
}

DomainPredicate DomainPredicate::conjunction(const std::vector<ScalarFunctionPtr>& conjuncts) {
  return unionOf({conjuncts});
}

DomainPredicate DomainPredicate::unionOf(const std::vector<std::vector<ScalarFunctionPtr>>& terms) {
  DomainPredicate d;
  d.terms_.clear();
  for (const auto& term : terms) {
    std::vector<std::size_t> idx;
    for (const auto& f : term) {
      const std::size_t i = d.addConjunct(f);
      if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
    }
    d.terms_.push_back(std::move(idx));
  }
  return d;
}

DomainPredicate DomainPredicate::intersect(const DomainPredicate& other) const {
  std::vector<std::vector<ScalarFunctionPtr>> terms;
  for (const auto& a : terms_) {
    for (const auto& b : other.terms_) {
      std::vector<ScalarFunctionPtr> t;
      for (auto i : a) t.push_back(conjuncts_[i]);
      for (auto i : b) t.push_back(other.conjuncts_[i]);
      terms.push_back(std::move(t));
    }
  }
  return unionOf(terms);
}

bool DomainPredicate::containsGiven(std::span<const double> values) const {
  for (const auto& term : terms_) {
    bool all = true;
    for (auto i : term) {
      if (!(values[i] > 0.0)) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

bool DomainPredicate::contains(const Vector& p) const {
  for (const auto& term : terms_) {
    bool all = true;
    for (auto i : term) {
      double v = 0.0;
      try {
        v = conjuncts_[i]->value(p);
      } catch (const Error&) {
        v = std::numeric_limits<double>::quiet_NaN();
      }
      if (!(v > 0.0)) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

bool DomainPredicate::nearBoundary(const Vector& p, double tol) const {
  if (contains(p)) return false;
  Vector g;
  for (const auto& term : terms_) {
    bool close = true;
    bool touching = false;
    for (auto i : term) {
      try {
        const double v = conjuncts_[i]->valueGradient(p, g);
        const double scaled = v / std::max(g.norm(), 1e-300);
        if (scaled < -tol) close = false;
        if (std::abs(scaled) <= tol) touching = true;
      } catch (const Error&) {
        close = false;
      }
    }
    if (close && touching) return true;
  }
  return false;
}

bool DomainPredicate::unrestricted() const {
  return std::any_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.empty(); });
}

bool DomainPredicate::smooth() const {
  return std::all_of(conjuncts_.begin(), conjuncts_.end(), [](const auto& c) { return c->smooth(); });
}

std::string DomainPredicate::describe() const {
  if (terms_.empty()) return "empty";
  std::string out;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    if (t) out += " or ";
    if (terms_[t].empty()) {
      out += "everywhere";
      continue;
    }
    out += "(";
    for (std::size_t k = 0; k < terms_[t].size(); ++k) {
      if (k) out += " and ";
      out += conjuncts_[terms_[t][k]]->describe() + " > 0";
    }
    out += ")";
  }
  return out;
}

ChartSpec identityChart(std::string id, std::size_t dim, DomainPredicate domain) {
  ChartSpec c;
  c.id = std::move(id);
  c.dim = dim;
  c.forward = identityMap(dim);
  c.inverse = c.forward;
  c.domain = std::move(domain);
  c.description = "identity";
  return c;
}

const ChartSpec& ManifoldModel::chart(std::string_view id) const {
  if (id == reference.id) return reference;
  for (const auto& c : atlas) {
    if (c.id == id) return c;
  }
  throw Error(ErrorKind::ValidationError, "unknown chart '" + std::string(id) + "'");
}

bool ManifoldModel::hasChart(std::string_view id) const {
  if (id == reference.id) return true;
  return std::any_of(atlas.begin(), atlas.end(), [&](const auto& c) { return c.id == id; });
}

void requireCoordinates(const Vector& c, std::size_t dim) {
  if (static_cast<std::size_t>(c.size()) != dim) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(dim) + " coordinates, got " + std::to_string(c.size()));
  }
  if (!c.allFinite()) throw Error(ErrorKind::NonFinite, "coordinates must be finite");
}

Vector evalChart(const ChartSpec& chart, const Vector& p) {
  requireCoordinates(p, chart.dim);
  if (!chart.domain.contains(p)) {
    throw Error(ErrorKind::DomainViolation, "point outside the domain of chart '" + chart.id + "'");
  }
  Vector out = chart.forward->apply(p);
  if (!out.allFinite()) throw Error(ErrorKind::NonFinite, "chart '" + chart.id + "' produced a non-finite value");
  return out;
}

Vector spatialProject(const Vector& c) {
  if (c.size() == 0) throw Error(ErrorKind::DimensionMismatch, "cannot project an empty tuple");
  return c.tail(c.size() - 1);
}

Vector transition(const ChartSpec& a, const ChartSpec& b, const Vector& c) {
  requireCoordinates(c, a.dim);
  const Vector x = a.inverse->apply(c);
  if (!x.allFinite() || !b.domain.contains(x)) {
    throw Error(ErrorKind::OverlapViolation,
                "point of chart '" + a.id + "' lies outside the domain of chart '" + b.id + "'");
  }
  Vector out = b.forward->apply(x);
  if (!out.allFinite()) throw Error(ErrorKind::NonFinite, "transition produced a non-finite value");
  return out;
}

Matrix transitionJacobian(const ChartSpec& a, const ChartSpec& b, const Vector& c) {
  const Vector x = a.inverse->apply(c);
  return b.forward->jacobian(x) * a.inverse->jacobian(c);
}

Vector toReference(const ManifoldModel& m, const PointRef& p) {
  const ChartSpec& c = m.chart(p.chart);
  requireCoordinates(p.coords, m.dim);
  if (&c == &m.reference) return p.coords;
  return c.inverse->apply(p.coords);
}

namespace {

// det of the a->b transition Jacobian at reference point x.
double transitionDet(const ChartSpec& a, const ChartSpec& b, const Vector& x) {
  const Vector c = a.forward->apply(x);
  const double d = transitionJacobian(a, b, c).determinant();
  return std::isfinite(d) ? d : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Report checkAtlasCompatibility(const ManifoldModel& m, std::size_t samples) {
  Report r;
  r.check = "atlasCompatibility";
  r.stamps = {{"tol_sing", m.tol.singular}, {"samples", samples}};
  Json pairs = Json::array();
  for (std::size_t i = 0; i < m.atlas.size(); ++i) {
    for (std::size_t j = i + 1; j < m.atlas.size(); ++j) {
      const ChartSpec& a = m.atlas[i];
      const ChartSpec& b = m.atlas[j];
      auto inOverlap = [&](const Vector& x) {
        return m.domain().contains(x) && a.domain.contains(x) && b.domain.contains(x);
      };
      const auto pts = samplePoints(m.samplingBox, samples, m.seed + 17 * i + 31 * j, inOverlap);
      if (pts.empty()) continue;
      double minAbsDet = std::numeric_limits<double>::infinity();
      std::size_t failures = 0;
      std::vector<double> dets;
      dets.reserve(pts.size());
      for (const auto& x : pts) {
        double d = std::numeric_limits<double>::quiet_NaN();
        try {
          d = transitionDet(a, b, x);
        } catch (const Error&) {
        }
        dets.push_back(d);
        if (!std::isfinite(d) || std::abs(d) <= m.tol.singular) {
          ++failures;
          r.fail("singular or non-finite transition Jacobian",
                 {{"pair", {a.id, b.id}}, {"point", jsonVector(x)}, {"det", jsonNumber(d)}});
        } else {
          minAbsDet = std::min(minAbsDet, std::abs(d));
        }
      }
      // A sign change of det between neighbouring samples inside the overlap
      // brackets a point where the transition stops being a diffeomorphism.
      bool bracketed = false;
      for (std::size_t k = 0; k < pts.size() && !bracketed; ++k) {
        if (!std::isfinite(dets[k])) continue;
        std::size_t best = k;
        double bestDist = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < pts.size(); ++q) {
          if (q == k || !std::isfinite(dets[q]) || (dets[q] > 0) == (dets[k] > 0)) continue;
          const double dist = (pts[q] - pts[k]).norm();
          if (dist < bestDist) {
            bestDist = dist;
            best = q;
          }
        }
        if (best == k) continue;
        Vector lo = pts[k];
        Vector hi = pts[best];
        bool segmentInside = true;
        for (int it = 0; it < 200 && (hi - lo).norm() > 1e-14; ++it) {
          const Vector mid = 0.5 * (lo + hi);
          if (!inOverlap(mid)) {
            segmentInside = false;
            break;
          }
          const double dm = transitionDet(a, b, mid);
          if (!std::isfinite(dm)) break;
          ((dm > 0) == (dets[k] > 0) ? lo : hi) = mid;
        }
        if (!segmentInside) continue;
        bracketed = true;
        ++failures;
        const Vector w = 0.5 * (lo + hi);
        r.fail("transition Jacobian determinant changes sign",
               {{"pair", {a.id, b.id}}, {"point", jsonVector(w)}, {"det", jsonNumber(transitionDet(a, b, w))}});
      }
      pairs.push_back({{"pair", {a.id, b.id}},
                       {"samples", pts.size()},
                       {"failures", failures},
                       {"minAbsDet", jsonNumber(minAbsDet)}});
    }
  }
  r.payload = {{"pairs", pairs}, {"pairCount", pairs.size()}};
  return r;
}

Report checkChartRoundTrips(const ManifoldModel& m, std::size_t samples) {
  Report r;
  r.check = "chartRoundTrip";
  r.stamps = {{"tol_chart", m.tol.chart}, {"samples", samples}};
  Json charts = Json::array();
  std::size_t idx = 0;
  for (const auto& c : m.atlas) {
    ++idx;
    auto inside = [&](const Vector& x) { return m.domain().contains(x) && c.domain.contains(x); };
    const auto pts = samplePoints(m.samplingBox, samples, m.seed + 101 * idx, inside);
    double worst = 0.0;
    for (const auto& x : pts) {
      double err = std::numeric_limits<double>::infinity();
      try {
        err = maxNorm(c.inverse->apply(c.forward->apply(x)) - x);
      } catch (const Error&) {
      }
      if (!(err < m.tol.chart)) {
        r.fail("inverse(forward(p)) differs from p", {{"chart", c.id}, {"point", jsonVector(x)}, {"error", jsonNumber(err)}});
      }
      worst = std::max(worst, std::isfinite(err) ? err : worst);
    }
    charts.push_back({{"chart", c.id}, {"samples", pts.size()}, {"worstError", worst}});
  }
  r.payload = {{"charts", charts}};
  return r;
}

}  // namespace orbitkit
