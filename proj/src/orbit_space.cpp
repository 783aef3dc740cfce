#include "orbitkit/orbit_space.hpp"

#include "orbitkit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace orbitkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector join(double t, const Vector& spatial) {
  Vector c(spatial.size() + 1);
  c[0] = t;
  c.tail(spatial.size()) = spatial;
  return c;
}

// Closest approach of a traced orbit to y: local minima of the sampled
// distance are refined by bisection on d/ds |x(s) - y|^2.
SameOrbit closestApproach(const Trajectory& path, const Vector& y) {
  const VectorFieldModel& vf = path.field();
  auto slope = [&](double t) {
    const Vector x = path.wrappedAt(t);
    return vf.difference(x, y).dot(vf(x));
  };
  const auto s = path.sampleParameters(8);
  std::vector<Vector> xs;
  xs.reserve(s.size());
  for (double t : s) xs.push_back(path.wrappedAt(t));
  std::vector<double> d(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) d[i] = vf.distance(xs[i], y);

  SameOrbit best;
  // Far misses keep the nearest sample; only near passes are refined.
  const auto nearest = std::min_element(d.begin(), d.end());
  best.distance = *nearest;
  best.s = s[static_cast<std::size_t>(nearest - d.begin())];
  auto consider = [&](double t) {
    const double dist = vf.distance(vf.wrap(path.exactAt(t)), y);
    if (dist < best.distance) {
      best.distance = dist;
      best.s = t;
    }
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool leftOk = i == 0 || d[i] <= d[i - 1];
    const bool rightOk = i + 1 == s.size() || d[i] <= d[i + 1];
    if (!leftOk || !rightOk) continue;
    const double chord = (i > 0 ? vf.distance(xs[i], xs[i - 1]) : 0.0) +
                         (i + 1 < s.size() ? vf.distance(xs[i], xs[i + 1]) : 0.0);
    if (d[i] > 2.0 * chord + 1e-12) continue;
    if (i == 0 || i + 1 == s.size()) {
      consider(s[i]);
      continue;
    }
    double lo = s[i - 1], hi = s[i + 1];
    if (!(slope(lo) < 0.0 && slope(hi) > 0.0)) {
      consider(s[i]);
      continue;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) < 0.0 ? lo : hi) = mid;
    }
    consider(0.5 * (lo + hi));
  }
  best.same = best.distance < vf.tol().orbit;
  best.confidence = best.same ? OrbitConfidence::Proven : OrbitConfidence::UnreachedWithinHorizon;
  return best;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Box boundingBox(const std::vector<Vector>& pts, double padFraction) {
  Vector lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vector pad = padFraction * (hi - lo).cwiseMax(Vector::Constant(lo.size(), 1e-6));
  return {lo - pad, hi + pad};
}

const OrbitChart& chartById(const std::vector<OrbitChart>& charts, const std::string& id) {
  for (const auto& c : charts) {
    if (c.id() == id) return c;
  }
  throw Error(ErrorKind::ValidationError, "no orbit chart '" + id + "'");
}

}  // namespace

std::string_view nameOf(OrbitConfidence c) {
  return c == OrbitConfidence::Proven ? "Proven" : "UnreachedWithinHorizon";
}

std::string_view nameOf(Separation s) {
  switch (s) {
    case Separation::Separated: return "Separated";
    case Separation::NotSeparatedWitness: return "NotSeparatedWitness";
    case Separation::Inconclusive: return "Inconclusive";
  }
  return "?";
}

SameOrbit sameOrbit(const VectorFieldModel& vf, const Vector& x, const Vector& y, double horizon) {
  const auto& dom = vf.manifold().domain();
  if (!dom.contains(vf.wrap(x)) || !dom.contains(vf.wrap(y))) return {};
  Trajectory path(vf, x);
  path.extend(horizon, horizon);
  return closestApproach(path, vf.wrap(y));
}

// ---------------------------------------------------------------- orbit charts

OrbitChart::OrbitChart(const VectorFieldModel& vf, ChartSpec source, DomainPredicate u, std::vector<Vector> barValues,
                       double horizon)
    : vf_(&vf), source_(std::move(source)), bars_(std::move(barValues)), horizon_(horizon) {
  u_ = u.intersect(source_.domain);
  const ManifoldModel& m = vf.manifold();
  const auto pts = samplePoints(m.samplingBox, 2000, m.seed + 59, [&](const Vector& x) { return inU(x); });
  if (pts.empty()) throw Error(ErrorKind::ValidationError, "orbit chart " + source_.id + " has an empty domain");
  std::vector<Vector> images;
  for (const auto& p : pts) images.push_back(source_.forward->apply(p));
  chartBox_ = boundingBox(images, 0.02);
  if (bars_.empty()) {
    for (const auto& q : images) bars_.push_back(spatialProject(q));
  }
  barBox_ = boundingBox(bars_, 0.0);
}

bool OrbitChart::inU(const Vector& x) const { return vf_->manifold().domain().contains(x) && u_.contains(x); }

Vector OrbitChart::bar(const Vector& x) const {
  const Vector w = vf_->wrap(x);
  if (inU(w)) return chartSpatial(source_, w);
  Trajectory path(*vf_, w);
  path.extend(horizon_, horizon_);
  const auto iv = intervalSet(path, u_, horizon_);
  if (iv.components.empty()) {
    throw Error(ErrorKind::OrbitMissesTarget, "orbit does not meet the domain of chart " + source_.id);
  }
  const auto nearest = std::min_element(iv.components.begin(), iv.components.end(), [](const auto& a, const auto& b) {
    return std::abs(a.mid()) < std::abs(b.mid());
  });
  return chartSpatial(source_, path.wrappedAt(nearest->mid()));
}

std::optional<double> OrbitChart::liftTime(const Vector& y) const {
  constexpr int kScan = 600;
  const double lo = chartBox_.lower[0], hi = chartBox_.upper[0];
  const double dt = (hi - lo) / kScan;
  std::optional<std::pair<double, double>> run;
  for (int k = 0; k < kScan; ++k) {
    const double t = lo + (k + 0.5) * dt;
    bool in = false;
    try {
      in = inU(source_.inverse->apply(join(t, y)));
    } catch (const Error&) {
    }
    if (in) {
      if (!run) run = std::pair{t, t};
      run->second = t;
    } else if (run) {
      break;
    }
  }
  if (!run) return std::nullopt;
  return 0.5 * (run->first + run->second);
}

Vector OrbitChart::lift(const Vector& y, double t) const { return source_.inverse->apply(join(t, y)); }

Vector OrbitChart::lift(const Vector& y) const {
  const auto t = liftTime(y);
  if (!t) throw Error(ErrorKind::OrbitMissesTarget, "no orbit of chart " + source_.id + " has the given chi bar");
  return lift(y, *t);
}

OrbitKey OrbitChart::key(const Vector& x) const { return {source_.id, bar(x), {vf_->manifold().reference.id, x}}; }

OrbitChart makeOrbitChart(const VectorFieldModel& vf, const ChartSpec& chart, const DomainPredicate& u,
                          const AdaptedVerdict& verdict) {
  if (!verdict.adapted || !verdict.nice) {
    throw Error(ErrorKind::NotNice, "chart " + chart.id + " is not a nice v-adapted chart on the given domain");
  }
  std::vector<Vector> bars;
  for (const auto& [seed, bar] : verdict.barValues) bars.push_back(bar);
  return OrbitChart(vf, chart, u, std::move(bars), verdict.horizon);
}

// ---------------------------------------------------------------- transitions

QuotientTransition::QuotientTransition(const VectorFieldModel& vf, const OrbitChart& a, const OrbitChart& b,
                                       const Vector& y, double t)
    : vf_(&vf), a_(&a), b_(&b), t_(t) {
  const Vector x = a.lift(y, t);
  const double horizon = std::min(std::max(a.horizon(), b.horizon()), vf.tol().horizon);
  const auto iv = intervalSet(vf, x, b.domain(), horizon);
  if (iv.components.empty()) {
    throw Error(ErrorKind::OrbitMissesTarget, "orbit from chart " + a.id() + " never enters chart " + b.id());
  }
  const auto nearest = std::min_element(iv.components.begin(), iv.components.end(), [](const auto& p, const auto& q) {
    return std::abs(p.mid()) < std::abs(q.mid());
  });
  s_ = nearest->contains(0.0) ? 0.0 : nearest->mid();
}

Vector QuotientTransition::operator()(const Vector& y) const {
  const Vector x = a_->lift(y, t_);
  if (!a_->inU(x)) throw Error(ErrorKind::OrbitMissesTarget, "lift leaves the domain of chart " + a_->id());
  const auto r = flow(*vf_, x, s_);
  if (r.status != FlowStatus::Interior || !b_->inU(r.point.coords)) {
    throw Error(ErrorKind::OrbitMissesTarget, "frozen shift does not land in chart " + b_->id());
  }
  return chartSpatial(b_->source(), r.point.coords);
}

Vector quotientTransition(const VectorFieldModel& vf, const OrbitChart& a, const OrbitChart& b, const Vector& y,
                          double t) {
  return QuotientTransition(vf, a, b, y, t)(y);
}

Vector quotientTransition(const VectorFieldModel& vf, const OrbitChart& a, const OrbitChart& b, const Vector& y) {
  const auto t = a.liftTime(y);
  if (!t) throw Error(ErrorKind::OrbitMissesTarget, "point outside the image of chart " + a.id());
  return quotientTransition(vf, a, b, y, *t);
}

Report atlasCompatibilityQuotient(const VectorFieldModel& vf, const std::vector<OrbitChart>& charts,
                                  std::size_t samples) {
  const Tolerances& tol = vf.tol();
  Report r;
  r.check = "quotientCompatibility";
  r.stamps = {{"tol_check", tol.check}, {"samples", samples}};
  Json pairs = Json::array();
  for (std::size_t i = 0; i < charts.size(); ++i) {
    for (std::size_t j = 0; j < charts.size(); ++j) {
      if (i == j) continue;
      const OrbitChart& a = charts[i];
      const OrbitChart& b = charts[j];
      std::size_t overlap = 0;
      double worstRoundTrip = 0.0, worstFd = 0.0, minDet = kInf;
      Json jac = Json::array();
      const auto pts = haltonPoints(a.barBox(), samples, vf.manifold().seed + 13 * i + 7 * j);
      for (const auto& y : pts) {
        const auto t = a.liftTime(y);
        if (!t) continue;
        try {
          const QuotientTransition fwd(vf, a, b, y, *t);
          const Vector z = fwd(y);
          const auto tb = b.liftTime(z);
          if (!tb) continue;
          const QuotientTransition back(vf, b, a, z, *tb);
          const Vector yBack = back(z);
          // Central differences at h and h/2 with the shift frozen.
          const auto n = y.size();
          Matrix jh(n, n), jh2(n, n);
          const double h = 1e-3;
          for (Eigen::Index k = 0; k < n; ++k) {
            Vector e = Vector::Zero(n);
            e[k] = 1.0;
            jh.col(k) = (fwd(y + h * e) - fwd(y - h * e)) / (2.0 * h);
            jh2.col(k) = (fwd(y + 0.5 * h * e) - fwd(y - 0.5 * h * e)) / h;
          }
          ++overlap;
          const double rt = maxNorm(yBack - y);
          const double fd = (jh - jh2).cwiseAbs().maxCoeff() / (1.0 + jh2.cwiseAbs().maxCoeff());
          const double det = std::abs(jh2.determinant());
          worstRoundTrip = std::max(worstRoundTrip, rt);
          worstFd = std::max(worstFd, fd);
          minDet = std::min(minDet, det);
          if (jac.size() < 8) jac.push_back({{"y", jsonVector(y)}, {"jacobian", jsonVector(jh2.reshaped())}});
          if (rt > 2.0 * tol.check) {
            r.fail("reverse transition does not return", {{"pair", {a.id(), b.id()}}, {"y", jsonVector(y)}, {"error", rt}});
          }
          if (fd > 0.05 || !(det > tol.singular)) {
            r.fail("transition not smooth and invertible", {{"pair", {a.id(), b.id()}}, {"y", jsonVector(y)}, {"fd", fd}, {"det", det}});
          }
        } catch (const Error&) {
          continue;  // this y is not in the overlap of orbit domains
        }
      }
      if (overlap == 0) continue;
      pairs.push_back({{"pair", {a.id(), b.id()}},
                       {"overlapSamples", overlap},
                       {"worstRoundTrip", worstRoundTrip},
                       {"worstFdDisagreement", worstFd},
                       {"minAbsDet", jsonNumber(minDet)},
                       {"jacobians", jac}});
    }
  }
  r.payload = {{"pairs", pairs}};
  return r;
}

// ---------------------------------------------------------------- separation

Json SeparationVerdict::toJson() const {
  Json j = {{"status", nameOf(status)}, {"chartFirst", chartFirst}, {"chartSecond", chartSecond}, {"resolution", resolution}};
  auto box = [](const Box& b) { return Json{{"lower", jsonVector(b.lower)}, {"upper", jsonVector(b.upper)}}; };
  if (boxFirst) j["boxFirst"] = box(*boxFirst);
  if (boxSecond) j["boxSecond"] = box(*boxSecond);
  Json w = Json::array();
  for (const auto& s : witnesses) {
    w.push_back({{"step", s.step},
                 {"radius", s.radius},
                 {"seed", jsonVector(s.witnessSeed)},
                 {"barFirst", jsonVector(s.barInFirst)},
                 {"barSecond", jsonVector(s.barInSecond)}});
  }
  j["witnesses"] = w;
  j["notes"] = notes;
  return j;
}

namespace {

Box around(const Vector& c, double r) { return {c.array() - r, c.array() + r}; }

// Both orbits seen through one chart: disjoint boxes around the two chi bar values.
std::optional<SeparationVerdict> singleChart(const OrbitChart& c, const Vector& y1, const Vector& y2, double tolCheck) {
  const double gap = maxNorm(y1 - y2);
  SeparationVerdict v;
  v.chartFirst = v.chartSecond = c.id();
  if (gap <= tolCheck) {
    v.status = Separation::Inconclusive;
    v.notes.push_back("keys coincide in chart " + c.id() + ": not two distinct orbits");
    return v;
  }
  v.status = Separation::Separated;
  v.boxFirst = around(y1, gap / 3.0);
  v.boxSecond = around(y2, gap / 3.0);
  v.resolution = gap / 3.0;
  v.notes.push_back("both orbits meet the domain of chart " + c.id());
  return v;
}

}  // namespace

SeparationVerdict hausdorffProbe(const VectorFieldModel& vf, const std::vector<OrbitChart>& charts, const OrbitKey& k1,
                                 const OrbitKey& k2, int shrinkSteps) {
  const double tolCheck = vf.tol().check;
  const OrbitChart& a = chartById(charts, k1.niceChart);
  const OrbitChart& b = chartById(charts, k2.niceChart);
  const Vector x1 = a.lift(k1.xValue);
  const Vector x2 = b.lift(k2.xValue);

  if (&a == &b) return *singleChart(a, k1.xValue, k2.xValue, tolCheck);
  // Either orbit may be visible in the other's chart.
  try {
    return *singleChart(a, k1.xValue, a.bar(x2), tolCheck);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::OrbitMissesTarget) throw;
  }
  try {
    return *singleChart(b, b.bar(x1), k2.xValue, tolCheck);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::OrbitMissesTarget) throw;
  }

  // Witness search: an orbit whose chi bar is within r_n of k1 in chart a and
  // within r_n of k2 in chart b, for r_n = 2^-(n-1).
  SeparationVerdict v;
  v.chartFirst = a.id();
  v.chartSecond = b.id();
  const auto n = k1.xValue.size();
  int reached = 0;
  for (int step = 1; step <= shrinkSteps; ++step) {
    const double radius = std::ldexp(1.0, -(step - 1));
    std::optional<SeparationWitness> found;
    for (Eigen::Index axis = 0; axis < n && !found; ++axis) {
      for (double sign : {1.0, -1.0}) {
        Vector y = k1.xValue;
        y[axis] += sign * 0.5 * radius;
        const auto t = a.liftTime(y);
        if (!t) continue;
        try {
          const Vector x = a.lift(y, *t);
          const Vector z = b.bar(x);
          if (maxNorm(z - k2.xValue) < radius) {
            found = SeparationWitness{step, radius, x, y, z};
            break;
          }
        } catch (const Error&) {
        }
      }
    }
    if (!found) break;
    v.witnesses.push_back(*found);
    reached = step;
  }
  if (reached == shrinkSteps) {
    v.status = Separation::NotSeparatedWitness;
    v.resolution = std::ldexp(1.0, -(shrinkSteps - 1));
    v.notes.push_back("orbits meeting both neighbourhoods persist down to radius " + num(v.resolution));
    return v;
  }
  // Disjoint boxes in the two charts at the first radius without a witness,
  // kept only if no probe orbit through the first box lands in the second.
  const double radius = std::ldexp(1.0, -reached);
  const Box boxA = around(k1.xValue, radius), boxB = around(k2.xValue, radius);
  std::size_t probes = 0, common = 0;
  for (const auto& y : haltonPoints(boxA, 1000, vf.manifold().seed + 211)) {
    const auto t = a.liftTime(y);
    if (!t) continue;
    ++probes;
    try {
      if (boxB.contains(b.bar(a.lift(y, *t)))) ++common;
    } catch (const Error&) {
    }
  }
  v.resolution = radius;
  if (common == 0 && probes > 0) {
    v.status = Separation::Separated;
    v.boxFirst = boxA;
    v.boxSecond = boxB;
    v.notes.push_back("pullback check: " + std::to_string(probes) + " probe orbits, none in both boxes");
  } else {
    v.status = Separation::Inconclusive;
    v.notes.push_back("witnesses stopped at step " + std::to_string(reached + 1) + "; boxes not certified");
  }
  return v;
}

// ---------------------------------------------------------------- frames

Report frameEquivalent(const ManifoldModel& m, const ChartSpec& a, const ChartSpec& b, std::size_t samples) {
  Report r;
  r.check = "frameEquivalent";
  r.stamps = {{"tol_check", m.tol.check}, {"samples", samples}};
  auto inside = [&](const Vector& x) { return m.domain().contains(x) && a.domain.contains(x) && b.domain.contains(x); };
  double worstTime = 0.0, worstMix = 0.0;
  const auto pts = samplePoints(m.samplingBox, samples, m.seed + 5, inside);
  for (const auto& x : pts) {
    const Vector c = a.forward->apply(x);
    const Vector f = transition(a, b, c);
    const Matrix j = transitionJacobian(a, b, c);
    const double dt = std::abs(f[0] - c[0]);
    const double mix = j.rows() > 1 ? j.col(0).tail(j.rows() - 1).cwiseAbs().maxCoeff() : 0.0;
    worstTime = std::max(worstTime, dt);
    worstMix = std::max(worstMix, mix);
    if (dt >= m.tol.check) r.fail("time coordinate changes", {{"point", jsonVector(x)}, {"error", dt}});
    if (mix >= m.tol.check) r.fail("spatial coordinates depend on x0", {{"point", jsonVector(x)}, {"derivative", mix}});
  }
  if (pts.empty()) {
    r.verdict = Verdict::Inconclusive;
    r.notes.push_back("no sampled point in the common domain");
  }
  r.payload = {{"pair", {a.id, b.id}}, {"worstTimeChange", worstTime}, {"worstSpatialDx0", worstMix}, {"samples", pts.size()}};
  return r;
}

Report embedLocalToGlobal(const VectorFieldModel& vf, const LocalFrame& frame, const OrbitChart& orbitChart,
                          std::size_t lines, std::size_t pointsPerLine) {
  const ManifoldModel& m = vf.manifold();
  const Tolerances& tol = vf.tol();
  const double horizon = orbitChart.horizon();
  if (frame.charts.empty()) throw Error(ErrorKind::HypothesisViolation, "frame has no charts");
  std::vector<OrbitChart> local;
  for (const auto& c : frame.charts) {
    AdaptedOptions opt;
    opt.budget = 36;
    opt.horizon = horizon;
    const auto verdict = checkAdapted(vf, c, frame.domain, opt);
    if (!verdict.adapted || !verdict.nice) {
      throw Error(ErrorKind::HypothesisViolation, "frame chart " + c.id + " is not nice v-adapted on the frame domain");
    }
    local.emplace_back(vf, c, frame.domain, std::vector<Vector>{}, horizon);
  }

  Report r;
  r.check = "embedLocalToGlobal";
  r.stamps = {{"horizon", horizon}, {"tol_check", tol.check}};
  for (std::size_t k = 1; k < frame.charts.size(); ++k) {
    const auto eq = frameEquivalent(m, frame.charts.front(), frame.charts[k], 200);
    if (!eq.passed()) r.fail("frame charts are not equivalent", {{"pair", {frame.charts.front().id, frame.charts[k].id}}});
  }
  const OrbitChart& first = local.front();
  auto inU = [&](const Vector& x) { return first.inU(x); };

  // World lines: distinct level sets of P_S o chi within U.
  std::vector<Vector> seeds;
  std::vector<Vector> tildes;
  for (const auto& p : samplePoints(m.samplingBox, 4 * lines, m.seed + 71, inU)) {
    const Vector xt = chartSpatial(frame.charts.front(), p);
    bool dup = false;
    for (const auto& q : tildes) dup = dup || maxNorm(q - xt) < tol.check;
    if (dup) continue;
    seeds.push_back(p);
    tildes.push_back(xt);
    if (seeds.size() == lines) break;
  }

  double worstOnOrbit = 0.0, worstInLine = 0.0, worstFrame = 0.0;
  std::size_t linePoints = 0, unliftable = 0;
  std::vector<Vector> keys;
  for (std::size_t li = 0; li < seeds.size(); ++li) {
    std::optional<Vector> firstKey;
    for (std::size_t k = 0; k < local.size(); ++k) {
      const ChartSpec& chart = frame.charts[k];
      const Vector xt = chartSpatial(chart, seeds[li]);
      const auto t = local[k].liftTime(xt);
      if (!t) {
        ++unliftable;
        continue;
      }
      // I(l): the global orbit through chi^-1(t, chi tilde(l)).
      const Vector z = local[k].lift(xt, *t);
      const Vector key = orbitChart.bar(z);
      if (!firstKey) {
        firstKey = key;
      } else {
        worstFrame = std::max(worstFrame, maxNorm(key - *firstKey));
      }
      if (k > 0) continue;

      Trajectory path(vf, z);
      path.extend(horizon, horizon);
      // l in I(l): points chi^-1(t, chi tilde) of U across the chart's time range.
      const Box& cb = local[k].chartBox();
      const std::size_t scan = 8 * pointsPerLine;
      std::size_t taken = 0;
      for (std::size_t q = 0; q < scan && taken < pointsPerLine; ++q) {
        const double tq = cb.lower[0] + (static_cast<double>(q) + 0.5) / static_cast<double>(scan) * (cb.upper[0] - cb.lower[0]);
        Vector onLine;
        try {
          onLine = local[k].lift(xt, tq);
        } catch (const Error&) {
          continue;
        }
        if (!inU(onLine)) continue;
        ++taken;
        worstOnOrbit = std::max(worstOnOrbit, closestApproach(path, onLine).distance);
      }
      linePoints += taken;
      // I(l) n U in l: every arc of the orbit inside U carries the same chi tilde.
      const auto iv = intervalSet(path, local[k].domain(), horizon);
      for (const auto& c : iv.components) {
        for (double fr : {0.02, 0.25, 0.5, 0.75, 0.98}) {
          const Vector y = path.wrappedAt(c.lower.s + fr * c.length());
          worstInLine = std::max(worstInLine, maxNorm(chartSpatial(chart, y) - xt));
        }
      }
    }
    if (firstKey) keys.push_back(*firstKey);
  }

  // Injectivity on the sampled lines.
  std::size_t collisions = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t j = i + 1; j < keys.size(); ++j) {
      if (maxNorm(keys[i] - keys[j]) < tol.check) ++collisions;
    }
  }
  // Surjectivity evidence: the orbit through a fresh point q of U is I of the line through q.
  std::size_t surjectiveMisses = 0, surjectiveSamples = 0;
  for (const auto& q : samplePoints(m.samplingBox, 50, m.seed + 97, inU)) {
    ++surjectiveSamples;
    const Vector xt = chartSpatial(frame.charts.front(), q);
    const auto t = first.liftTime(xt);
    if (!t || maxNorm(orbitChart.bar(first.lift(xt, *t)) - orbitChart.bar(q)) >= tol.check) ++surjectiveMisses;
  }

  if (unliftable > 0) r.fail("world lines without a lift", {{"count", unliftable}});
  if (worstOnOrbit >= tol.check || worstInLine >= tol.check) {
    r.fail("l differs from I(l) n U", {{"worstDistanceToOrbit", worstOnOrbit}, {"worstLineDeviation", worstInLine}});
  }
  if (collisions > 0) r.fail("I is not injective on the sampled lines", {{"collisions", collisions}});
  if (surjectiveMisses > 0) r.fail("sampled orbits of D_U not hit", {{"misses", surjectiveMisses}});
  if (worstFrame >= tol.check) r.fail("frame charts induce different embeddings", {{"worst", worstFrame}});
  Json sample = Json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(keys.size(), 8); ++i) {
    sample.push_back({{"line", jsonVector(tildes[i])}, {"key", jsonVector(keys[i])}});
  }
  r.payload = {{"lines", seeds.size()},
               {"linePoints", linePoints},
               {"worstDistanceToOrbit", worstOnOrbit},
               {"worstLineDeviation", worstInLine},
               {"injective", collisions == 0},
               {"surjectivitySamples", surjectiveSamples},
               {"surjectivityMisses", surjectiveMisses},
               {"frameCharts", frame.charts.size()},
               {"frameInvariant", worstFrame < tol.check},
               {"worstFrameDisagreement", worstFrame},
               {"keys", sample}};
  return r;
}

bool metrizableSeparable(const VectorFieldModel& vf, const std::vector<OrbitChart>& charts) {
  const ManifoldModel& m = vf.manifold();
  const auto pts = samplePoints(m.samplingBox, 500, m.seed + 3, [&](const Vector& x) { return m.domain().contains(x); });
  for (const auto& c : charts) {
    bool global = !pts.empty();
    for (const auto& p : pts) global = global && c.inU(p);
    if (global) return true;
  }
  return false;
}

}  // namespace orbitkit
