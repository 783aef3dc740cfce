#include "orbitkit/adaptation.hpp"

#include "orbitkit/orbit_space.hpp"
#include "orbitkit/sampling.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace orbitkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> fractions() { return {0.02, 0.25, 0.5, 0.75, 0.98}; }

Vector join(double u, const Vector& spatial) {
  Vector c(spatial.size() + 1);
  c[0] = u;
  c.tail(spatial.size()) = spatial;
  return c;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Distinct values at resolution tol, in first-seen order.
std::vector<Vector> dedupe(const std::vector<Vector>& xs, double tol) {
  std::vector<Vector> out;
  for (const auto& x : xs) {
    bool seen = false;
    for (const auto& y : out) seen = seen || maxNorm(x - y) < tol;
    if (!seen) out.push_back(x);
  }
  return out;
}

double minPairwise(const std::vector<Vector>& xs) {
  double gap = kInf;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) gap = std::min(gap, (xs[i] - xs[j]).norm());
  }
  return gap;
}

// Isolation needs a gap above the resolution that has not shrunk since a tenth
// of the horizon; a shrinking gap is the signature of accumulating returns.
bool isolated(double gap, double gapAtTenth, double tolCheck) {
  if (!(gap > 10.0 * tolCheck)) return false;
  return !(std::isfinite(gapAtTenth) && gap < 0.99 * gapAtTenth);
}

double effectiveHorizon(const VectorFieldModel& vf, double h) { return h > 0.0 ? h : vf.tol().horizon; }

}  // namespace

Vector chartSpatial(const ChartSpec& chart, const Vector& x) { return spatialProject(chart.forward->apply(x)); }

// ---------------------------------------------------------------- fiber alignment

Report FiberAlignment::toReport() const {
  Report r;
  r.check = "fiberAligned";
  if (!aligned) {
    r.fail(sampleCount == 0 ? "no sampled points in the chart domain" : "spatial components of v exceed tol_field",
           {{"worstSpatialComponent", jsonNumber(worstSpatialComponent)}});
  }
  r.payload = {{"aligned", aligned},
               {"worstSpatialComponent", jsonNumber(worstSpatialComponent)},
               {"fMin", jsonNumber(fMin)},
               {"fMax", jsonNumber(fMax)},
               {"samples", sampleCount}};
  return r;
}

FiberAlignment checkFiberAligned(const VectorFieldModel& vf, const ChartSpec& chart, std::size_t samples) {
  const ManifoldModel& m = vf.manifold();
  auto inside = [&](const Vector& x) { return m.domain().contains(x) && chart.domain.contains(x); };
  const auto pts = samplePoints(m.samplingBox, samples, m.seed + 7, inside);
  FiberAlignment out;
  out.fMin = kInf;
  out.fMax = -kInf;
  for (const auto& x : pts) {
    Vector w;
    try {
      w = vf.inChart(chart, vf.wrap(x));
    } catch (const Error&) {
      out.worstSpatialComponent = kInf;
      continue;
    }
    const double spatial = w.size() > 1 ? maxNorm(w.tail(w.size() - 1)) : 0.0;
    out.worstSpatialComponent = std::max(out.worstSpatialComponent, std::isfinite(spatial) ? spatial : kInf);
    out.fSamples.push_back({{chart.id, chart.forward->apply(x)}, w[0]});
    out.fMin = std::min(out.fMin, w[0]);
    out.fMax = std::max(out.fMax, w[0]);
  }
  out.sampleCount = out.fSamples.size();
  out.aligned = out.sampleCount > 0 && out.worstSpatialComponent < vf.tol().field;
  return out;
}

// ---------------------------------------------------------------- straightening

StraightenedMap::StraightenedMap(std::shared_ptr<const VectorFieldModel> vf, ChartSpec base, Box box, double c0)
    : vf_(std::move(vf)), base_(std::move(base)), box_(std::move(box)), c0_(c0) {}

double StraightenedMap::f(double u, const Vector& spatial) const {
  const Vector p = base_.inverse->apply(join(u, spatial));
  return vf_->inChart(base_, p)[0];
}

double StraightenedMap::integrate(double a, double b, const Vector& spatial) const {
  if (a == b) return 0.0;
  double err = 0.0;
  double value = 0.0;
  try {
    // Boost compares leaf errors on [-1, 1] against a tolerance on the scaled
    // estimate, so short intervals would always recurse to max depth. Integrating
    // over t in [0, 1] keeps both in the same units.
    const double w = b - a;
    value = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
        [&](double t) { return w / f(a + w * t, spatial); }, 0.0, 1.0, 15, 1e-14, &err);
  } catch (const Error& e) {
    throw Error(ErrorKind::QuadratureFailure, std::string("integrand failed: ") + e.what());
  }
  err *= 0.5;  // leaf errors are reported for the half-width-1 reference interval
  if (!std::isfinite(value) || !(err <= 1e-11 * std::max(1.0, std::abs(value)))) {
    throw Error(ErrorKind::QuadratureFailure,
                "quadrature of 1/f did not converge (error estimate " + num(err) + ")");
  }
  return value;
}

double StraightenedMap::reparam(double u, const Vector& spatial) const { return integrate(c0_, u, spatial); }

double StraightenedMap::solve(double w, const Vector& spatial) const {
  const double uLower = box_.lower[0], uUpper = box_.upper[0];
  const double width = uUpper - uLower;
  double u = c0_ + w * f(c0_, spatial);
  double g = reparam(u, spatial);
  for (int it = 0; it < 60; ++it) {
    const double du = -(g - w) * f(u, spatial);
    if (!std::isfinite(du)) throw Error(ErrorKind::NonFinite, "Newton step for the straightened time failed");
    if (std::abs(du) <= 1e-15 * std::max(1.0, std::abs(u))) return u;
    const double next = u + du;
    if (next < uLower - width || next > uUpper + width) {
      throw Error(ErrorKind::DomainViolation, "straightened time " + num(w) + " has no preimage near the box");
    }
    g += integrate(u, next, spatial);
    u = next;
    if (std::abs(g - w) <= 1e-15 * std::max(1.0, std::abs(w))) return u;
  }
  return u;
}

Vector StraightenedMap::apply(const Vector& p) const {
  Vector c = base_.forward->apply(p);
  const Vector spatial = spatialProject(c);
  c[0] = reparam(c[0], spatial);
  return c;
}

Matrix StraightenedMap::jacobian(const Vector& p) const {
  const Vector c = base_.forward->apply(p);
  const Vector y = spatialProject(c);
  const auto n = static_cast<Eigen::Index>(base_.dim);
  Matrix mix = Matrix::Identity(n, n);
  mix(0, 0) = 1.0 / f(c[0], y);
  // d/dy_j of the integral: integral of -(d_j f) / f^2, d_j f by central differences.
  for (Eigen::Index j = 1; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(c[j]));
    auto integrand = [&](double u) {
      Vector yp = y, ym = y;
      yp[j - 1] += h;
      ym[j - 1] -= h;
      const double fu = f(u, y);
      return -(f(u, yp) - f(u, ym)) / (2.0 * h) / (fu * fu);
    };
    if (c[0] == c0_) continue;
    double err = 0.0;
    const double w = c[0] - c0_;
    mix(0, j) = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        [&](double t) { return w * integrand(c0_ + w * t); }, 0.0, 1.0, 10, 1e-10, &err);
  }
  return mix * base_.forward->jacobian(p);
}

std::vector<std::string> StraightenedMap::describe() const {
  auto out = base_.forward->describe();
  out[0] = "numeric: integral of du / f(u, x1..) from u = " + num(c0_) + " to u = " + out[0];
  return out;
}

Vector StraightenedInverse::apply(const Vector& q) const {
  const Vector spatial = spatialProject(q);
  return forward_->base().inverse->apply(join(forward_->solve(q[0], spatial), spatial));
}

Matrix StraightenedInverse::jacobian(const Vector& q) const { return forward_->jacobian(apply(q)).inverse(); }

std::vector<std::string> StraightenedInverse::describe() const {
  auto out = forward_->base().inverse->describe();
  out[0] = "numeric: x0 solved from the straightened time, then " + out[0];
  return out;
}

ChartSpec buildStraightening(const VectorFieldModel& vf, const ChartSpec& chart, const Vector& x, double radius) {
  const Tolerances& tol = vf.tol();
  const ManifoldModel& m = vf.manifold();
  if (!(radius > 0.0)) throw Error(ErrorKind::ValidationError, "straightening radius must be positive");
  const Vector c = evalChart(chart, x);
  const auto n = static_cast<Eigen::Index>(chart.dim);
  const Box box{c.array() - radius, c.array() + radius};

  // Sign of f on a grid over the box; the box has to stay inside the chart.
  const std::size_t perAxis = chart.dim <= 2 ? 64 : 16;
  double sign = 0.0;
  for (const auto& q : gridPoints(box, perAxis)) {
    Vector p;
    try {
      p = chart.inverse->apply(q);
    } catch (const Error&) {
      throw Error(ErrorKind::DomainViolation, "straightening box leaves the chart image");
    }
    if (!m.domain().contains(p) || !chart.domain.contains(p)) {
      throw Error(ErrorKind::DomainViolation, "straightening box leaves the chart domain");
    }
    const Vector w = vf.inChart(chart, p);
    if (n > 1 && maxNorm(w.tail(n - 1)) >= tol.field) {
      throw Error(ErrorKind::HypothesisViolation, "chart is not fiber-aligned on the straightening box");
    }
    if (!(std::abs(w[0]) > tol.singular)) {
      throw Error(ErrorKind::ZeroOfF, "f vanishes near chart point (" + num(q[0]) + ", ...)");
    }
    const double sg = w[0] > 0 ? 1.0 : -1.0;
    if (sign != 0.0 && sg != sign) throw Error(ErrorKind::ZeroOfF, "f changes sign on the straightening box");
    sign = sg;
  }

  auto field = std::make_shared<const VectorFieldModel>(vf);
  auto fwd = std::make_shared<const StraightenedMap>(field, chart, box, c[0]);
  ChartSpec out;
  out.id = chart.id + "-straight";
  out.dim = chart.dim;
  out.forward = fwd;
  out.inverse = std::make_shared<const StraightenedInverse>(fwd);
  std::vector<ScalarFunctionPtr> faces;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    faces.push_back(std::make_shared<ChartComponentBound>(chart.forward, idx, box.lower[k], 1.0, chart.id));
    faces.push_back(std::make_shared<ChartComponentBound>(chart.forward, idx, box.upper[k], -1.0, chart.id));
  }
  out.domain = chart.domain.intersect(DomainPredicate::conjunction(faces));
  out.description = "straightening of " + chart.id + " around chart point (" + num(c[0]) + ", ...), radius " + num(radius);
  return out;
}

Json straighteningTable(const ChartSpec& straightened, std::size_t perAxis) {
  const auto* map = dynamic_cast<const StraightenedMap*>(straightened.forward.get());
  if (!map) throw Error(ErrorKind::ValidationError, "chart " + straightened.id + " is not a straightening chart");
  if (perAxis < 2) perAxis = 2;
  const Vector& lo = map->box().lower;
  const Vector& hi = map->box().upper;
  const auto n = lo.size();
  std::vector<double> u(perAxis);
  for (std::size_t i = 0; i < perAxis; ++i) {
    u[i] = lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / static_cast<double>(perAxis - 1);
  }
  Json spatial = Json::array();
  Json values = Json::array();
  std::vector<Vector> nodes;
  if (n > 1) {
    const Box sbox{lo.tail(n - 1), hi.tail(n - 1)};
    nodes = gridPoints(sbox, perAxis);
  } else {
    nodes.emplace_back(0);
  }
  for (const auto& y : nodes) {
    spatial.push_back(jsonVector(y));
    Json row = Json::array();
    for (double ui : u) row.push_back(map->reparam(ui, y));
    values.push_back(row);
  }
  return {{"chart", straightened.id},
          {"numericChart", true},
          {"interpolation", "monotone-cubic"},
          {"base", map->base().id},
          {"c0", map->c0()},
          {"u", u},
          {"spatialNodes", spatial},
          {"values", values}};
}

// ---------------------------------------------------------------- product form

Report checkProductForm(const ManifoldModel& m, const ChartSpec& chart, const DomainPredicate& u,
                        std::size_t gridPerAxis, std::size_t scanPoints) {
  Report r;
  r.check = "productForm";
  r.stamps = {{"gridPerAxis", gridPerAxis}, {"scanPoints", scanPoints}};
  auto inside = [&](const Vector& p) { return m.domain().contains(p) && chart.domain.contains(p) && u.contains(p); };
  auto member = [&](const Vector& q) {
    try {
      return inside(chart.inverse->apply(q));
    } catch (const Error&) {
      return false;
    }
  };
  const auto pts = samplePoints(m.samplingBox, 4000, m.seed + 3, inside);
  if (pts.empty()) {
    r.verdict = Verdict::Inconclusive;
    r.notes.push_back("no sampled point of U");
    return r;
  }
  const auto n = static_cast<Eigen::Index>(chart.dim);
  Vector lo = Vector::Constant(n, kInf), hi = Vector::Constant(n, -kInf);
  for (const auto& p : pts) {
    const Vector q = chart.forward->apply(p);
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  const Vector pad = 0.02 * (hi - lo).cwiseMax(Vector::Constant(n, 1e-6));
  lo -= pad;
  hi += pad;
  const Box sbox{lo.tail(n - 1), hi.tail(n - 1)};
  std::size_t scanned = 0, failing = 0;
  const double ds = (hi[0] - lo[0]) / static_cast<double>(scanPoints);
  for (const auto& x : gridPoints(sbox, gridPerAxis)) {
    std::vector<std::pair<double, double>> runs;
    bool in = false;
    for (std::size_t k = 0; k < scanPoints; ++k) {
      const double s = lo[0] + (static_cast<double>(k) + 0.5) * ds;
      const bool now = member(join(s, x));
      if (now && !in) runs.emplace_back(s, s);
      if (now) runs.back().second = s;
      in = now;
    }
    if (runs.empty()) continue;
    ++scanned;
    if (runs.size() > 1) {
      ++failing;
      Json iv = Json::array();
      for (const auto& [a, b] : runs) iv.push_back({a, b});
      r.fail("slice is not a single interval", {{"x", jsonVector(x)}, {"intervals", iv}});
    }
  }
  r.payload = {{"slices", scanned}, {"failingSlices", failing}};
  return r;
}

// ---------------------------------------------------------------- adaptedness

OrbitSlice orbitSlice(const VectorFieldModel& vf, const ChartSpec& chart, const DomainPredicate& u,
                      const Vector& seed, double horizon, double tolCheck) {
  Trajectory path(vf, seed);
  path.extend(horizon, horizon);
  const auto iv = intervalSet(path, u.intersect(chart.domain), horizon);
  OrbitSlice o;
  o.seed = seed;
  o.bar = chartSpatial(chart, vf.wrap(seed));
  o.farthest = o.bar;
  o.period = detectPeriod(path, vf.tol().orbit);
  const auto home = iv.componentContaining(0.0);
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < iv.components.size(); ++k) {
    if (o.period && home) {
      // One copy of each arc: midpoints within half a period of the seed's arc.
      const double d = iv.components[k].mid() - iv.components[*home].mid();
      if (d < -0.5 * *o.period || d >= 0.5 * *o.period) continue;
    }
    kept.push_back(k);
  }
  o.components = kept.size();
  for (auto k : kept) {
    const auto& c = iv.components[k];
    for (double fr : fractions()) {
      const double s = c.lower.s + fr * c.length();
      double d = kInf;
      Vector x;
      try {
        x = chartSpatial(chart, path.wrappedAt(s));
        d = maxNorm(x - o.bar);
      } catch (const Error&) {
      }
      if (!(d <= o.spread)) {
        o.spread = d;
        if (x.size()) o.farthest = x;
      }
      if (home && k == *home) o.componentSpread = std::max(o.componentSpread, d);
    }
  }
  o.constancyAdapted = o.spread < tolCheck;
  o.sliceAdapted = o.components == 1 && home.has_value() && o.componentSpread < tolCheck;
  return o;
}

Report AdaptedVerdict::toReport() const {
  Report r;
  r.check = "adapted";
  r.verdict = adapted && nice ? Verdict::Pass : Verdict::Fail;
  r.witnesses = witnesses;
  r.failureCount = witnesses.size();
  Json bars = Json::array();
  for (const auto& [seed, bar] : barValues) bars.push_back({{"seed", jsonVector(seed)}, {"bar", jsonVector(bar)}});
  r.payload = {{"adapted", adapted},
               {"nice", nice},
               {"sliceDetector", sliceAdapted},
               {"constancyDetector", constancyAdapted},
               {"detectorDisagreements", detectorDisagreements},
               {"orbits", orbits.size()},
               {"periodicOrbits", periodicOrbits},
               {"barValues", bars}};
  r.stamps = {{"horizon", horizon}};
  if (periodicOrbits > 0) r.notes.push_back("PeriodicOrbitDetected: arcs counted over one period");
  return r;
}

AdaptedVerdict checkAdapted(const VectorFieldModel& vf, const ChartSpec& chart, const DomainPredicate& u,
                            const AdaptedOptions& options) {
  const ManifoldModel& m = vf.manifold();
  const Tolerances& tol = vf.tol();
  const double horizon = effectiveHorizon(vf, options.horizon);
  const DomainPredicate uc = u.intersect(chart.domain);
  auto inside = [&](const Vector& x) { return m.domain().contains(x) && uc.contains(x); };

  std::vector<Vector> seeds = options.seeds;
  if (seeds.empty()) {
    const auto perAxis = static_cast<std::size_t>(
        std::ceil(std::pow(static_cast<double>(options.budget), 1.0 / static_cast<double>(m.dim)) - 1e-9));
    for (const auto& p : gridPoints(m.samplingBox, std::max<std::size_t>(perAxis, 1))) {
      if (inside(p)) seeds.push_back(p);
    }
    const std::size_t wanted = std::max<std::size_t>(4, options.budget / 4);
    if (seeds.size() < wanted) {
      for (const auto& p : samplePoints(m.samplingBox, wanted - seeds.size(), m.seed + 41, inside)) seeds.push_back(p);
    }
  }

  AdaptedVerdict out;
  out.horizon = horizon;
  out.constancyAdapted = true;
  out.sliceAdapted = true;
  for (const auto& seed : seeds) {
    OrbitSlice o;
    try {
      o = orbitSlice(vf, chart, u, seed, horizon, tol.check);
    } catch (const Error& e) {
      out.constancyAdapted = out.sliceAdapted = false;
      out.witnesses.push_back({"orbit could not be traced", {{"seed", jsonVector(seed)}, {"error", e.what()}}});
      continue;
    }
    out.constancyAdapted = out.constancyAdapted && o.constancyAdapted;
    out.sliceAdapted = out.sliceAdapted && o.sliceAdapted;
    if (o.constancyAdapted != o.sliceAdapted) ++out.detectorDisagreements;
    if (o.period) ++out.periodicOrbits;
    if (!o.constancyAdapted && out.witnesses.size() < Report::kMaxWitnesses) {
      out.witnesses.push_back({"spatial coordinates differ along one orbit",
                               {{"seed", jsonVector(o.seed)},
                                {"x", {jsonVector(o.bar), jsonVector(o.farthest)}},
                                {"arcs", o.components}}});
    }
    out.orbits.push_back(std::move(o));
  }
  out.adapted = out.constancyAdapted && !out.orbits.empty();
  if (!out.adapted) return out;

  // Niceness: chi bar collisions are confirmed or refuted by flow reachability.
  out.nice = true;
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < out.orbits.size(); ++i) {
    const auto& oi = out.orbits[i];
    std::optional<std::size_t> hit;
    for (auto rIdx : reps) {
      if (maxNorm(oi.bar - out.orbits[rIdx].bar) < tol.check) {
        hit = rIdx;
        break;
      }
    }
    if (!hit) {
      reps.push_back(i);
      continue;
    }
    const auto same = sameOrbit(vf, out.orbits[*hit].seed, oi.seed, horizon);
    if (!same.same) {
      out.nice = false;
      out.witnesses.push_back({"distinct orbits share chi bar",
                               {{"seeds", {jsonVector(out.orbits[*hit].seed), jsonVector(oi.seed)}},
                                {"bar", jsonVector(oi.bar)}}});
    }
  }
  for (auto rIdx : reps) out.barValues.emplace_back(out.orbits[rIdx].seed, out.orbits[rIdx].bar);
  return out;
}

// ---------------------------------------------------------------- returns and isolation

Json ReturnSet::toJson() const {
  Json xs = Json::array();
  for (const auto& x : xValues) xs.push_back(jsonVector(x));
  return {{"chart", chart},
          {"seed", jsonVector(orbitSeed.coords)},
          {"xValues", xs},
          {"returns", xValues.size()},
          {"minGap", jsonNumber(minGap)},
          {"minGapAtTenthHorizon", jsonNumber(minGapAtTenth)},
          {"horizon", horizon},
          {"isolationEvidence", isolationEvidence}};
}

ReturnSet returnSetProbe(const VectorFieldModel& vf, const ChartSpec& chart, const Vector& x, double horizon) {
  const double tolCheck = vf.tol().check;
  Trajectory path(vf, x);
  path.extend(horizon, horizon);
  const auto iv = intervalSet(path, chart.domain, horizon);
  std::vector<Vector> all, early;
  for (const auto& c : iv.components) {
    const double mid = c.contains(0.0) ? 0.0 : c.mid();
    const Vector xv = chartSpatial(chart, path.wrappedAt(mid));
    all.push_back(xv);
    if (c.lower.s < 0.1 * horizon && c.upper.s > -0.1 * horizon) early.push_back(xv);
  }
  ReturnSet out;
  out.chart = chart.id;
  out.orbitSeed = {vf.manifold().reference.id, x};
  out.horizon = horizon;
  out.xValues = dedupe(all, tolCheck);
  out.minGap = minPairwise(out.xValues);
  out.minGapAtTenth = minPairwise(dedupe(early, tolCheck));
  out.isolationEvidence = isolated(out.minGap, out.minGapAtTenth, tolCheck);
  return out;
}

DomainPredicate shrinkToIsolate(const VectorFieldModel& vf, const ChartSpec& chart, const Vector& x,
                                const ReturnSet& returns) {
  if (!returns.isolationEvidence) {
    throw Error(ErrorKind::IsolationUnavailable,
                "returns of the orbit are not isolated (minGap " + num(returns.minGap) + " at horizon " +
                    num(returns.horizon) + ")");
  }
  if (!std::isfinite(returns.minGap)) return chart.domain;
  const Vector centre = chartSpatial(chart, vf.wrap(x));
  const auto ball = std::make_shared<ChartSpatialBall>(chart.forward, centre, returns.minGap / 3.0, chart.id);
  return chart.domain.intersect(DomainPredicate::conjunction({ball}));
}

// ---------------------------------------------------------------- normality

std::string_view nameOf(NormalityStatus s) {
  switch (s) {
    case NormalityStatus::NormalEvidence: return "NormalEvidence";
    case NormalityStatus::Counterexample: return "Counterexample";
    case NormalityStatus::Inconclusive: return "Inconclusive";
  }
  return "?";
}

namespace {

// (p - X) . n: the hyperplane through X orthogonal to v(X).
class SectionPlane final : public ScalarFunction {
 public:
  SectionPlane(const VectorFieldModel& vf, Vector x, Vector normal)
      : vf_(vf), x_(std::move(x)), n_(std::move(normal)) {}
  [[nodiscard]] double value(const Vector& p) const override { return vf_.difference(p, x_).dot(n_); }
  double valueGradient(const Vector& p, Vector& grad) const override {
    grad = n_;
    return value(p);
  }
  [[nodiscard]] std::string describe() const override { return "section"; }

 private:
  const VectorFieldModel& vf_;
  Vector x_;
  Vector n_;
};

struct SectionHit {
  double s;
  Vector y;  // coordinates in the section
};

std::vector<SectionHit> sectionHits(const Trajectory& path, const SectionPlane& plane, const Vector& x,
                                    const Matrix& basis, double radius) {
  const VectorFieldModel& vf = path.field();
  const auto s = path.sampleParameters(8);
  std::vector<double> vals(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) vals[i] = plane.value(path.wrappedAt(s[i]));
  std::vector<SectionHit> out;
  for (const auto& z : locateZeros(path, plane, 0, s, vals, vf.tol().event)) {
    if (z.touch) continue;
    const Vector y = basis.transpose() * vf.difference(vf.wrap(path.exactAt(z.s)), x);
    if (y.norm() < radius) out.push_back({z.s, y});
  }
  return out;
}

}  // namespace

Report normalityProbe(const VectorFieldModel& vf, const std::vector<Vector>& points, const NormalityOptions& options) {
  const Tolerances& tol = vf.tol();
  const ManifoldModel& m = vf.manifold();
  const double horizon = effectiveHorizon(vf, options.horizon);
  const auto n = static_cast<Eigen::Index>(vf.dim());
  Report r;
  r.check = "normality";
  r.stamps = {{"horizon", horizon}, {"sectionRadius", options.sectionRadius}, {"seedsPerPoint", options.seedsPerPoint}};
  Json entries = Json::array();
  std::size_t counter = 0, inconclusive = 0;

  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const Vector x = vf.wrap(points[pi]);
    Json entry = {{"point", jsonVector(x)}};
    auto finish = [&](NormalityStatus st, const std::string& reason) {
      entry["status"] = nameOf(st);
      entry["reason"] = reason;
      if (st == NormalityStatus::Counterexample) {
        ++counter;
        r.fail(reason, entry);
      } else if (st == NormalityStatus::Inconclusive) {
        ++inconclusive;
      }
      entries.push_back(entry);
    };
    if (!m.domain().contains(x)) {
      finish(NormalityStatus::Inconclusive, "probe point outside the model domain");
      continue;
    }
    const Vector v0 = vf(x);
    if (!(v0.norm() > tol.singular)) {
      finish(NormalityStatus::Counterexample, "assumption violated: v(X) = 0");
      continue;
    }
    Trajectory path(vf, x);
    path.extend(horizon, horizon);
    if (const auto period = detectPeriod(path, tol.orbit)) {
      entry["period"] = *period;
      finish(NormalityStatus::Counterexample, "assumption violated: F_X periodic");
      continue;
    }
    const Vector normal = v0.normalized();
    const Matrix q = Eigen::HouseholderQR<Matrix>(Matrix(normal)).householderQ() * Matrix::Identity(n, n);
    const Matrix basis = q.rightCols(n - 1);
    const SectionPlane plane(vf, x, normal);

    std::vector<Vector> all, early;
    for (const auto& h : sectionHits(path, plane, x, basis, options.sectionRadius)) {
      all.push_back(h.y);
      if (std::abs(h.s) <= 0.1 * horizon) early.push_back(h.y);
    }
    const auto returns = dedupe(all, tol.check);
    const double gap = minPairwise(returns);
    const double gapTenth = minPairwise(dedupe(early, tol.check));
    entry["returns"] = returns.size();
    entry["minGap"] = jsonNumber(gap);
    entry["minGapAtTenthHorizon"] = jsonNumber(gapTenth);
    if (!isolated(gap, gapTenth, tol.check)) {
      finish(NormalityStatus::Inconclusive, "section returns accumulate within the horizon");
      continue;
    }

    // Flow box W over the section disk of radius rho; each orbit through W
    // must cross the disk exactly once.
    const double rho = std::isfinite(gap) ? std::min(options.sectionRadius, gap / 3.0) : options.sectionRadius;
    const double tau = 0.5 * rho / v0.norm();
    entry["boxRadius"] = rho;
    entry["boxHalfTime"] = tau;
    const Halton seq(static_cast<std::size_t>(n), m.seed + 1000 + pi);
    std::size_t tested = 0;
    std::optional<Json> bad;
    for (std::uint64_t idx = 0; tested < options.seedsPerPoint && idx < 64 * options.seedsPerPoint && !bad; ++idx) {
      const Vector u = seq.unit(idx);
      const Vector y = rho * (2.0 * u.tail(n - 1).array() - 1.0).matrix();
      if (y.norm() >= rho) continue;
      const Vector base = vf.wrap(x + basis * y);
      if (!m.domain().contains(base)) continue;
      const double t = tau * (2.0 * u[0] - 1.0);
      Trajectory seedPath(vf, base);
      seedPath.extend(std::abs(t), std::abs(t));
      if (t > 0 ? seedPath.sMax() < t : seedPath.sMin() > t) continue;
      const Vector seed = seedPath.wrappedAt(t);
      Trajectory p(vf, seed);
      p.extend(horizon, horizon);
      const auto hits = sectionHits(p, plane, x, basis, rho);
      ++tested;
      if (hits.size() != 1) {
        Json s = Json::array();
        for (const auto& h : hits) s.push_back(h.s);
        bad = Json{{"seed", jsonVector(seed)}, {"crossings", s}};
      }
    }
    entry["seedsTested"] = tested;
    if (bad) {
      entry["witness"] = *bad;
      finish(NormalityStatus::Counterexample, "orbit meets the flow box W in more than one arc");
    } else if (tested == 0) {
      finish(NormalityStatus::Inconclusive, "no flow-box seed inside the model domain");
    } else {
      finish(NormalityStatus::NormalEvidence, "isolated return and connected flow-box intersections");
    }
  }
  if (counter == 0) r.verdict = inconclusive > 0 ? Verdict::Inconclusive : Verdict::Pass;
  r.payload = {{"points", entries}, {"counterexamples", counter}, {"inconclusive", inconclusive}};
  return r;
}

}  // namespace orbitkit
