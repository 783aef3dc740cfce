#include "orbitkit/orbit_space.hpp"
#include "orbitkit/sampling.hpp"
#include "orbitkit/scene.hpp"
#include "orbitkit/transversality.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#ifndef ORBITKIT_VERSION
#define ORBITKIT_VERSION "0.0.0"
#endif

namespace orbitkit {

std::string toolVersion() { return ORBITKIT_VERSION; }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int stageOf(const std::string& check) {
  static const std::set<std::string> adapted = {"adapted", "detectors"};
  static const std::set<std::string> quotient = {"orbitMap", "quotient", "quotientAtlas", "hausdorff", "embedding",
                                                 "metrizable"};
  if (adapted.contains(check)) return 1;
  if (quotient.contains(check)) return 2;
  return 0;
}

std::uint64_t probeSeed(std::uint64_t seed, const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return seed * 1000003ULL + (h & 0xffffffffULL);
}

Vector vecOf(const Json& j) { return toVector(j.get<std::vector<double>>()); }

std::vector<Vector> pointsOf(const Json& j) {
  std::vector<Vector> out;
  for (const auto& p : j) out.push_back(vecOf(p));
  return out;
}

Box boxOf(const Json& j) { return {vecOf(j["lower"]), vecOf(j["upper"])}; }

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csvRow(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out + "\n";
}

std::vector<std::string> cellsOf(const Vector& v) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v[i]));
  return out;
}

std::vector<std::string> header(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Expression over named variables, evaluated with AD when a gradient is wanted.
class Formula {
 public:
  Formula(const std::string& text, std::vector<std::string> vars) : program_(parse(text), std::move(vars)) {}
  double operator()(const Vector& v) const { return program_(view(v)); }
  double operator()(const Vector& v, double extra) const {
    Vector w(v.size() + 1);
    w << v, extra;
    return program_(view(w));
  }
  Vector gradient(const Vector& v) const {
    std::vector<double> g(static_cast<std::size_t>(v.size()));
    (void)program_.withGradient(view(v), g);
    return toVector(g);
  }

 private:
  CompiledExpr program_;
};

std::vector<std::string> xVars(std::size_t n) { return coordinateNames(n); }
std::vector<std::string> yVars(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("y" + std::to_string(i));
  return out;
}

Report combine(const std::string& name, const std::vector<std::pair<std::string, Report>>& parts) {
  Report r;
  r.check = name;
  bool anyFail = false, anyInconclusive = false;
  for (const auto& [key, part] : parts) {
    anyFail |= part.verdict == Verdict::Fail;
    anyInconclusive |= part.verdict == Verdict::Inconclusive;
    for (const auto& w : part.witnesses) r.fail(key + ": " + w.description, w.data);
    r.payload[key] = part.payload;
    r.stamps[key] = part.stamps;
    for (const auto& n : part.notes) r.notes.push_back(key + ": " + n);
  }
  r.verdict = anyFail ? Verdict::Fail : anyInconclusive ? Verdict::Inconclusive : Verdict::Pass;
  return r;
}

struct Shared {
  const SceneDocument* scene;
  std::mutex mutex;
  std::map<std::string, OrbitChart> orbitCharts;

  const OrbitChart& chart(const std::string& probe) {
    std::lock_guard lock(mutex);
    const auto it = orbitCharts.find(probe);
    if (it == orbitCharts.end()) {
      throw Error(ErrorKind::HypothesisViolation, "orbit chart of probe '" + probe + "' is unavailable (not adapted and nice)");
    }
    return it->second;
  }
};

// ---------------------------------------------------------------- individual checks

struct Runner {
  const SceneDocument& scene;
  Shared& shared;
  const ProbeSpec& probe;
  std::map<std::string, std::string>& artifacts;

  const VectorFieldModel& vf() const { return *scene.field; }
  const ManifoldModel& m() const { return *scene.manifold; }
  const Json& p() const { return probe.params; }
  std::uint64_t seed() const { return probeSeed(m().seed, probe.name); }
  double horizon() const { return p().value("horizon", m().tol.horizon); }
  const DomainPredicate& domain(const char* key = "domain") const { return scene.domain(p()[key].get<std::string>()); }
  const ChartSpec& chartSpec(const char* key = "chart") const {
    return p().contains(key) ? m().chart(p()[key].get<std::string>()) : m().reference;
  }
  bool inModel(const Vector& x) const { return m().domain().contains(x); }
  std::vector<Vector> modelSamples(std::size_t n, std::uint64_t salt = 0) const {
    return samplePoints(m().samplingBox, n, seed() + salt, [&](const Vector& x) { return inModel(x); });
  }
  // One artifact per probe, named after it.
  std::string file(const std::string& ext = "csv") const { return probe.name + "." + ext; }

  Report run() {
    const auto& c = probe.check;
    if (c == "atlas") return atlas();
    if (c == "field") return checkFieldConsistency(vf(), p().value("samples", 200), scene.declares("nonVanishing"));
    if (c == "flowClosedForm") return flowClosedForm();
    if (c == "groupLaw") return groupLaw();
    if (c == "intervals") return intervals();
    if (c == "crossings") return crossings();
    if (c == "tangency") return tangency();
    if (c == "pullback") return pullback();
    if (c == "infinity") return infinity();
    if (c == "endpoints") return endpoints();
    if (c == "straighten") return straighten();
    if (c == "returnSet") return returnSet();
    if (c == "normality") return normality();
    if (c == "polylines") return polylines();
    if (c == "frameEquivalent") {
      const auto ids = p()["charts"].get<std::vector<std::string>>();
      if (ids.size() != 2) throw Error(ErrorKind::ValidationError, "frameEquivalent takes two charts");
      return frameEquivalent(m(), m().chart(ids[0]), m().chart(ids[1]), p().value("samples", 200));
    }
    if (c == "adapted") return adapted();
    if (c == "detectors") return detectors();
    if (c == "orbitMap") return orbitMap();
    if (c == "quotient") return quotient();
    if (c == "quotientAtlas") return atlasCompatibilityQuotient(vf(), charts(), p().value("samples", 60));
    if (c == "hausdorff") return hausdorff();
    if (c == "embedding") return embedding();
    if (c == "metrizable") return metrizable();
    throw Error(ErrorKind::ValidationError, "unknown check '" + c + "'");
  }

  std::vector<OrbitChart> charts() const {
    std::vector<OrbitChart> out;
    for (const auto& n : p()["charts"]) out.push_back(shared.chart(n.get<std::string>()));
    return out;
  }

  Report atlas() const {
    const std::size_t n = p().value("samples", 200);
    return combine("atlas", {{"compatibility", checkAtlasCompatibility(m(), n)}, {"roundTrips", checkChartRoundTrips(m(), n)}});
  }

  Report flowClosedForm() const {
    Report r;
    r.check = "flowClosedForm";
    const double tol = p().value("tolerance", 1e-9);
    const double span = p().value("sRange", 2.0);
    const std::size_t n = p().value("samples", 100);
    std::vector<Formula> expected;
    for (const auto& e : p()["expected"]) expected.emplace_back(e.get<std::string>(), [&] {
      auto v = xVars(scene.dim);
      v.push_back("s");
      return v;
    }());
    std::mt19937_64 rng(seed());
    std::uniform_real_distribution<double> us(-span, span);
    double worst = 0.0;
    std::size_t evaluated = 0, skipped = 0;
    for (const auto& x : modelSamples(n)) {
      const double s = us(rng);
      const auto fr = flow(vf(), x, s);
      if (fr.status != FlowStatus::Interior) {
        ++skipped;
        continue;
      }
      Vector want(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) want[i] = expected[static_cast<std::size_t>(i)](x, s);
      const double err = maxNorm(vf().difference(fr.point.coords, want));
      ++evaluated;
      worst = std::max(worst, err);
      if (err > tol) r.fail("flow differs from the closed form", {{"x", jsonVector(x)}, {"s", s}, {"error", err}});
    }
    if (evaluated == 0) r.verdict = Verdict::Inconclusive;
    r.payload = {{"samples", evaluated}, {"skipped", skipped}, {"worstError", worst}};
    r.stamps = {{"tolerance", tol}, {"sRange", span}, {"tol_position", m().tol.position}};
    return r;
  }

  Report groupLaw() const {
    Report r;
    r.check = "groupLaw";
    const std::size_t n = p().value("triples", 100);
    const double span = p().value("sRange", 2.0);
    std::mt19937_64 rng(seed());
    std::uniform_real_distribution<double> us(-span, span);
    double worst = 0.0;
    std::size_t evaluated = 0, inconclusive = 0;
    for (const auto& x : modelSamples(n)) {
      const double s = us(rng), t = us(rng);
      const auto g = groupLawCheck(vf(), x, s, t);
      if (g.verdict == Verdict::Inconclusive) {
        ++inconclusive;
        continue;
      }
      ++evaluated;
      const double e = g.payload["error"].get<double>();
      worst = std::max(worst, e);
      if (g.verdict == Verdict::Fail) r.fail("group law violated", {{"x", jsonVector(x)}, {"s", s}, {"t", t}, {"error", e}});
    }
    if (evaluated == 0) r.verdict = Verdict::Inconclusive;
    r.payload = {{"triples", evaluated}, {"leftDomain", inconclusive}, {"worstError", worst}};
    r.stamps = {{"tol_check", m().tol.check}, {"sRange", span}};
    return r;
  }

  Report intervals() {
    Report r;
    r.check = "intervals";
    const auto& u = domain();
    const double h = horizon();
    const double tol = p().value("tolerance", m().tol.check);
    std::optional<Formula> lo, hi;
    if (p().contains("expectLower")) lo.emplace(p()["expectLower"].get<std::string>(), xVars(scene.dim));
    if (p().contains("expectUpper")) hi.emplace(p()["expectUpper"].get<std::string>(), xVars(scene.dim));
    Json entries = Json::array();
    auto head = header("x", scene.dim);
    for (const char* c : {"component", "lower", "lowerKind", "upper", "upperKind"}) head.push_back(c);
    std::string csv = csvRow(head);
    double worst = 0.0;
    for (const auto& x : pointsOf(p()["points"])) {
      const auto iv = intervalSet(vf(), x, u, h);
      entries.push_back({{"point", jsonVector(x)}, {"intervals", iv.toJson()}});
      for (std::size_t k = 0; k < iv.components.size(); ++k) {
        const auto& c = iv.components[k];
        auto row = cellsOf(x);
        row.insert(row.end(), {std::to_string(k), num(c.lower.s), std::string(nameOf(c.lower.kind)), num(c.upper.s),
                               std::string(nameOf(c.upper.kind))});
        csv += csvRow(row);
      }
      if (!lo && !hi) continue;
      if (iv.components.size() != 1) {
        r.fail("expected one interval", {{"point", jsonVector(x)}, {"components", iv.components.size()}});
        continue;
      }
      const auto& c = iv.components[0];
      if (lo) {
        const double e = std::abs(c.lower.s - (*lo)(x));
        worst = std::max(worst, e);
        if (!(e <= tol)) r.fail("lower endpoint off the closed form", {{"point", jsonVector(x)}, {"s", c.lower.s}, {"expected", (*lo)(x)}});
      }
      if (hi) {
        const double e = std::abs(c.upper.s - (*hi)(x));
        worst = std::max(worst, e);
        if (!(e <= tol)) r.fail("upper endpoint off the closed form", {{"point", jsonVector(x)}, {"s", c.upper.s}, {"expected", (*hi)(x)}});
      }
    }
    r.payload = {{"points", entries}, {"worstEndpointError", worst}};
    r.stamps = {{"horizon", h}, {"tolerance", tol}, {"tol_event", m().tol.event}};
    artifacts[file()] = csv;
    return r;
  }

  Report crossings() const {
    Report r;
    r.check = "crossings";
    const auto& u = domain();
    const double h = horizon();
    const double tol = p().value("tolerance", m().tol.check);
    std::optional<Formula> dg;
    if (p().contains("expectDgds")) {
      auto v = xVars(scene.dim);
      v.push_back("s");
      dg.emplace(p()["expectDgds"].get<std::string>(), v);
    }
    Json entries = Json::array();
    double worst = 0.0;
    std::size_t events = 0;
    auto probeLine = [&](const Vector& x) {
      const auto ev = lineCrossings(vf(), x, u, h);
      Json list = Json::array();
      for (const auto& e : ev) {
        ++events;
        list.push_back({{"s", e.s}, {"dgds", e.dgds}, {"transverse", e.transverse}, {"conjunct", e.boundaryConjunct},
                        {"point", jsonVector(e.point)}});
        // Event invariant: the active conjunct vanishes to within tol_event |grad|.
        Vector g;
        const double val = u.conjuncts()[e.boundaryConjunct]->valueGradient(e.point, g);
        if (std::abs(val) > 10.0 * m().tol.event * std::max(1.0, g.norm() * std::max(1.0, vf()(e.point).norm()))) {
          r.fail("event off the boundary", {{"point", jsonVector(x)}, {"s", e.s}, {"value", val}});
        }
        if (dg) {
          const double want = (*dg)(x, e.s);
          const double err = std::abs(e.dgds - want);
          worst = std::max(worst, err);
          if (!(err <= tol)) r.fail("dg/ds off the closed form", {{"point", jsonVector(x)}, {"s", e.s}, {"dgds", e.dgds}, {"expected", want}});
        }
      }
      entries.push_back({{"point", jsonVector(x)}, {"events", list}});
      return ev;
    };
    for (const auto& x : pointsOf(p()["points"])) (void)probeLine(x);
    std::size_t tangent = 0;
    if (p().contains("tangentPoints")) {
      for (const auto& x : pointsOf(p()["tangentPoints"])) {
        const auto ev = probeLine(x);
        const bool flagged = std::any_of(ev.begin(), ev.end(), [](const auto& e) { return !e.transverse; });
        tangent += flagged ? 1 : 0;
        if (!flagged) r.fail("tangent line not flagged", {{"point", jsonVector(x)}});
      }
    }
    r.payload = {{"lines", entries}, {"events", events}, {"flaggedTangent", tangent}, {"worstDgdsError", worst}};
    r.stamps = {{"horizon", h}, {"tolerance", tol}, {"tol_tangent", m().tol.tangent}};
    return r;
  }

  Report tangency() {
    std::vector<Vector> grid;
    if (p().contains("points")) grid = pointsOf(p()["points"]);
    if (p().contains("grid")) {
      const auto& g = p()["grid"];
      for (const auto& x : gridPoints(boxOf(g), g.value("perAxis", 9))) {
        if (inModel(x)) grid.push_back(x);
      }
    }
    const auto scan = tangencyScan(vf(), domain(), grid, horizon());
    Report r;
    r.check = "tangency";
    r.payload = scan.toJson();
    r.payload["flagged"] = std::count(scan.inSSigma.begin(), scan.inSSigma.end(), true);
    r.stamps = {{"horizon", horizon()}, {"tol_tangent", m().tol.tangent}};
    artifacts[file()] = scan.toCsv();
    return r;
  }

  Report pullback() const {
    PullbackOptions opt;
    opt.samples = p().value("samples", std::size_t{1000});
    opt.sSpan = p().value("sSpan", 3.0);
    return pullbackBoundaryCheck(vf(), domain(), opt);
  }

  Report infinity() const {
    const auto ev = infinityTangencyProbe(vf(), domain(), vecOf(p()["point"]), p()["R"].get<double>(),
                                          p()["Rmax"].get<double>(), p().value("sSamples", std::size_t{64}));
    Report r;
    r.check = "infinity";
    r.verdict = ev.verdict == InfinityVerdict::NoEvidence ? Verdict::Pass : Verdict::Inconclusive;
    r.payload = ev.toJson();
    r.stamps = {{"tol_delta", m().tol.delta}};
    if (ev.verdict != InfinityVerdict::NoEvidence) r.notes.push_back("PossibleTangencyAtInfinity: evidence only, R may be too small");
    return r;
  }

  Report endpoints() {
    Report r;
    r.check = "endpoints";
    const auto& u = domain();
    const Vector x = vecOf(p()["center"]);
    const double h = horizon();
    // Precondition: the centre passes the tangency-at-infinity probe beyond its interval.
    const auto iv = intervalSet(vf(), x, u, h);
    double reach = 0.0;
    for (const auto& c : iv.components) reach = std::max({reach, std::abs(c.lower.s), std::abs(c.upper.s)});
    if (!std::isfinite(reach)) reach = 0.0;
    const double bigR = p().value("R", 2.0 * reach + 1.0);
    const double rMax = p().value("Rmax", std::min(h, bigR + 20.0));
    const auto inf = infinityTangencyProbe(vf(), u, x, bigR, rMax);
    r.payload["infinityProbe"] = inf.toJson();
    if (inf.verdict != InfinityVerdict::NoEvidence) {
      r.verdict = Verdict::Inconclusive;
      r.notes.push_back("centre fails the tangency-at-infinity precondition");
      return r;
    }
    const auto ef = endpointStability(vf(), u, x, pointsOf(p()["offsets"]), p().value("h", 1e-3), h);
    const double tol = p().value("tolerance", m().tol.check);
    std::optional<Formula> f1, f2;
    if (p().contains("expectPhi1")) f1.emplace(p()["expectPhi1"].get<std::string>(), xVars(scene.dim));
    if (p().contains("expectPhi2")) f2.emplace(p()["expectPhi2"].get<std::string>(), xVars(scene.dim));
    double worst = 0.0;
    for (const auto& row : ef.rows) {
      const Vector y = x + row.offset;
      if (!(row.phi1 < row.phi2)) r.fail("phi1 >= phi2", {{"offset", jsonVector(row.offset)}});
      if (f1) worst = std::max(worst, std::abs(row.phi1 - (*f1)(y)));
      if (f2) worst = std::max(worst, std::abs(row.phi2 - (*f2)(y)));
      if ((f1 && !(std::abs(row.phi1 - (*f1)(y)) <= tol)) || (f2 && !(std::abs(row.phi2 - (*f2)(y)) <= tol))) {
        r.fail("endpoint off the closed form", {{"offset", jsonVector(row.offset)}, {"phi1", row.phi1}, {"phi2", row.phi2}});
      }
      if (!(row.worstDisagreement < 0.05)) {
        r.fail("finite differences at h and h/2 disagree", {{"offset", jsonVector(row.offset)}, {"disagreement", row.worstDisagreement}});
      }
    }
    r.payload["endpoints"] = ef.toJson();
    r.payload["worstEndpointError"] = worst;
    r.stamps = {{"horizon", h}, {"tolerance", tol}, {"fdAgreement", 0.05}};
    artifacts[file()] = ef.toCsv();
    return r;
  }

  Report straighten() {
    Report r;
    r.check = "straighten";
    const auto& base = chartSpec();
    const Vector x = vecOf(p()["point"]);
    const auto st = buildStraightening(vf(), base, x, p()["radius"].get<double>());
    const auto map = std::dynamic_pointer_cast<const StraightenedMap>(st.forward);
    if (!map) throw Error(ErrorKind::ValidationError, "straightening did not produce a numeric chart");
    const Box& box = map->box();
    const double tol = p().value("tolerance", 1e-9);
    const double ftol = p().value("fieldTolerance", 1e-6);
    double worst = 0.0, worstField = 0.0;
    if (p().contains("expected")) {
      const Formula want(p()["expected"].get<std::string>(), xVars(scene.dim));
      for (const auto& q : haltonPoints(box, p().value("samples", std::size_t{100}), seed())) {
        const Vector ref = base.inverse->apply(q);
        const double got = st.forward->apply(ref)[0];
        const double e = std::abs(got - want(q));
        worst = std::max(worst, e);
        if (!(e <= tol)) r.fail("y'0 off the closed form", {{"chartPoint", jsonVector(q)}, {"value", got}, {"expected", want(q)}});
      }
    }
    const std::size_t perAxis = p().value("tablePerAxis", std::size_t{9});
    Vector e0 = Vector::Zero(static_cast<Eigen::Index>(scene.dim));
    e0[0] = 1.0;
    for (const auto& q : gridPoints(box, perAxis)) {
      const Vector ref = base.inverse->apply(q);
      const double e = maxNorm(vf().inChart(st, ref) - e0);
      worstField = std::max(worstField, e);
      if (!(e < ftol)) r.fail("pushed-forward field differs from d_0", {{"chartPoint", jsonVector(q)}, {"error", e}});
    }
    const Json table = straighteningTable(st, perAxis);
    r.payload = {{"worstError", worst}, {"worstFieldError", worstField}, {"box", {{"lower", jsonVector(box.lower)}, {"upper", jsonVector(box.upper)}}},
                 {"c0", map->c0()}, {"numericChart", true}};
    r.stamps = {{"tolerance", tol}, {"fieldTolerance", ftol}};
    artifacts[file("table.json")] = table.dump(2) + "\n";
    return r;
  }

  Report returnSet() const {
    Report r;
    r.check = "returnSet";
    const auto& chart = chartSpec();
    const Vector x = vecOf(p()["point"]);
    Json rows = Json::array();
    double prev = kInf;
    bool monotone = true;
    std::optional<ReturnSet> last;
    for (const double h : p()["horizons"].get<std::vector<double>>()) {
      auto rs = returnSetProbe(vf(), chart, x, h);
      monotone &= rs.minGap <= prev;
      prev = rs.minGap;
      rows.push_back(rs.toJson());
      last = std::move(rs);
    }
    r.payload = {{"horizons", rows}, {"monotoneDecrease", monotone}};
    if (last) {
      r.payload["minGap"] = jsonNumber(last->minGap);
      if (p().contains("gapBelow")) r.payload["belowThreshold"] = last->minGap < p()["gapBelow"].get<double>();
      if (!last->isolationEvidence) {
        r.fail("returns accumulate: isolation unavailable", {{"minGap", jsonNumber(last->minGap)}, {"horizon", last->horizon}});
      }
    }
    return r;
  }

  Report normality() const {
    NormalityOptions opt;
    opt.seedsPerPoint = p().value("seedsPerPoint", opt.seedsPerPoint);
    opt.sectionRadius = p().value("sectionRadius", opt.sectionRadius);
    opt.horizon = p().value("horizon", 0.0);
    return normalityProbe(vf(), pointsOf(p()["points"]), opt);
  }

  Report polylines() {
    Report r;
    r.check = "polylines";
    auto head = std::vector<std::string>{"orbit", "s"};
    const auto xs = header("x", scene.dim);
    head.insert(head.end(), xs.begin(), xs.end());
    std::string csv = csvRow(head);
    Json orbits = Json::array();
    std::size_t k = 0;
    for (const auto& x : pointsOf(p()["points"])) {
      const auto o = orbitPolyline(vf(), x, horizon(), p().value("maxPoints", std::size_t{400}));
      orbits.push_back({{"seed", jsonVector(x)}, {"points", o.samples.size()}, {"periodic", o.periodic},
                        {"period", o.period ? Json(*o.period) : Json(nullptr)}});
      for (const auto& [s, q] : o.samples) {
        auto row = std::vector<std::string>{std::to_string(k), num(s)};
        const auto c = cellsOf(q);
        row.insert(row.end(), c.begin(), c.end());
        csv += csvRow(row);
      }
      ++k;
    }
    r.payload = {{"orbits", orbits}};
    r.stamps = {{"horizon", horizon()}};
    artifacts[file()] = csv;
    return r;
  }

  Report adapted() {
    const auto& chart = chartSpec();
    const DomainPredicate u = p().contains("domain") ? domain() : DomainPredicate{};
    AdaptedOptions opt;
    opt.budget = p().value("budget", opt.budget);
    opt.horizon = p().value("horizon", 0.0);
    if (p().contains("seeds")) opt.seeds = pointsOf(p()["seeds"]);
    const auto verdict = checkAdapted(vf(), chart, u, opt);
    Report r = verdict.toReport();
    if (p().value("productForm", true)) {
      const auto pf = checkProductForm(m(), chart, u);
      r.payload["productForm"] = pf.verdict == Verdict::Pass;
      if (pf.verdict != Verdict::Pass) r.notes.push_back("chart image is not of product form");
    }
    r.payload["orbitChart"] = false;
    if (verdict.adapted && verdict.nice) {
      auto oc = makeOrbitChart(vf(), chart, u, verdict);
      r.payload["orbitChart"] = true;
      r.payload["barBox"] = {{"lower", jsonVector(oc.barBox().lower)}, {"upper", jsonVector(oc.barBox().upper)}};
      std::lock_guard lock(shared.mutex);
      shared.orbitCharts.emplace(probe.name, std::move(oc));
    }
    return r;
  }

  Report detectors() const {
    Report r;
    r.check = "detectors";
    const auto& chart = chartSpec();
    const Box box = boxOf(p()["box"]);
    const std::size_t n = p().value("subdomains", std::size_t{50});
    AdaptedOptions opt;
    opt.budget = p().value("budget", std::size_t{16});
    opt.horizon = p().value("horizon", 0.0);
    std::mt19937_64 rng(seed());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t disagreements = 0, adaptedCount = 0, evaluated = 0, internal = 0, drawn = 0;
    // Boxes holding no sampled orbit are redrawn, up to 4n draws.
    for (; evaluated < n && drawn < 4 * n; ++drawn) {
      std::vector<ScalarFunctionPtr> faces;
      Vector lo(box.lower.size()), hi(box.lower.size());
      for (Eigen::Index i = 0; i < box.lower.size(); ++i) {
        const double w = box.upper[i] - box.lower[i];
        double a = unit(rng), b = unit(rng);
        if (a > b) std::swap(a, b);
        if (b - a < 0.1) b = std::min(1.0, a + 0.1), a = b - 0.1;
        lo[i] = box.lower[i] + a * w;
        hi[i] = box.lower[i] + b * w;
        const auto idx = static_cast<std::size_t>(i);
        faces.push_back(std::make_shared<ChartComponentBound>(chart.forward, idx, lo[i], 1.0, chart.id));
        faces.push_back(std::make_shared<ChartComponentBound>(chart.forward, idx, hi[i], -1.0, chart.id));
      }
      const auto v = checkAdapted(vf(), chart, DomainPredicate::conjunction(faces), opt);
      if (v.orbits.empty()) continue;
      ++evaluated;
      adaptedCount += v.adapted ? 1 : 0;
      internal += v.detectorDisagreements;
      if (v.sliceAdapted != v.constancyAdapted) {
        ++disagreements;
        r.fail("slice and constancy detectors disagree",
               {{"lower", jsonVector(lo)}, {"upper", jsonVector(hi)}, {"slice", v.sliceAdapted}, {"constancy", v.constancyAdapted}});
      }
    }
    if (evaluated < n && r.verdict == Verdict::Pass) {
      r.verdict = Verdict::Inconclusive;
      r.notes.push_back("only " + std::to_string(evaluated) + " of " + std::to_string(n) + " sub-domains held orbits");
    }
    r.payload = {{"subdomains", evaluated}, {"drawn", drawn}, {"adapted", adaptedCount}, {"disagreements", disagreements},
                 {"perOrbitDisagreements", internal}};
    return r;
  }

  Report orbitMap() const {
    Report r;
    r.check = "orbitMap";
    const auto& oc = shared.chart(p()["chart"].get<std::string>());
    std::vector<Formula> want;
    for (const auto& e : p()["expected"]) want.emplace_back(e.get<std::string>(), xVars(scene.dim));
    const double tol = p().value("tolerance", m().tol.check);
    double worst = 0.0;
    Json rows = Json::array();
    for (const auto& x : pointsOf(p()["points"])) {
      const Vector bar = oc.bar(x);
      Vector w(bar.size());
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = want[static_cast<std::size_t>(i)](x);
      const double e = maxNorm(bar - w);
      worst = std::max(worst, e);
      rows.push_back({{"point", jsonVector(x)}, {"bar", jsonVector(bar)}});
      if (!(e <= tol)) r.fail("chi bar off the closed form", {{"point", jsonVector(x)}, {"bar", jsonVector(bar)}, {"expected", jsonVector(w)}});
    }
    r.payload = {{"points", rows}, {"worstError", worst}};
    r.stamps = {{"tolerance", tol}};
    return r;
  }

  Report quotient() const {
    Report r;
    r.check = "quotient";
    const auto& a = shared.chart(p()["from"].get<std::string>());
    const auto& b = shared.chart(p()["to"].get<std::string>());
    const Box range = p().contains("range") ? boxOf(p()["range"]) : a.barBox();
    const std::size_t n = p().value("samples", std::size_t{100});
    const double tol = p().value("tolerance", m().tol.check);
    const double roundTol = p().value("roundTrip", 2.0 * m().tol.check);
    const double jacTol = p().value("jacobianRel", 0.01);
    const auto nd = scene.dim - 1;
    std::vector<Formula> want;
    if (p().contains("expected")) {
      for (const auto& e : p()["expected"]) want.emplace_back(e.get<std::string>(), yVars(nd));
    }
    double worst = 0.0, worstRound = 0.0, worstJac = 0.0;
    std::size_t evaluated = 0, skipped = 0;
    const double h = 1e-4;
    for (const auto& y : haltonPoints(range, n, seed())) {
      const auto t = a.liftTime(y);
      if (!t) {
        ++skipped;
        continue;
      }
      try {
        const QuotientTransition fwd(vf(), a, b, y, *t);
        const Vector z = fwd(y);
        const auto tb = b.liftTime(z);
        if (!tb) throw Error(ErrorKind::OrbitMissesTarget, "image outside the second chart");
        const Vector back = QuotientTransition(vf(), b, a, z, *tb)(z);
        worstRound = std::max(worstRound, maxNorm(back - y));
        if (!want.empty()) {
          Vector w(static_cast<Eigen::Index>(nd));
          Matrix jw(static_cast<Eigen::Index>(nd), static_cast<Eigen::Index>(nd));
          for (std::size_t i = 0; i < nd; ++i) {
            w[static_cast<Eigen::Index>(i)] = want[i](y);
            jw.row(static_cast<Eigen::Index>(i)) = want[i].gradient(y).transpose();
          }
          Matrix fd(jw.rows(), jw.cols());
          for (Eigen::Index k = 0; k < fd.cols(); ++k) {
            Vector e = Vector::Zero(y.size());
            e[k] = h;
            fd.col(k) = (fwd(y + e) - fwd(y - e)) / (2.0 * h);
          }
          const double err = maxNorm(z - w);
          const double jac = (fd - jw).cwiseAbs().maxCoeff() / std::max(jw.cwiseAbs().maxCoeff(), 1e-300);
          worst = std::max(worst, err);
          worstJac = std::max(worstJac, jac);
          if (!(err <= tol)) r.fail("transition off the closed form", {{"y", jsonVector(y)}, {"value", jsonVector(z)}, {"expected", jsonVector(w)}});
          if (!(jac <= jacTol)) r.fail("FD Jacobian off the closed form", {{"y", jsonVector(y)}, {"relError", jac}});
        }
        if (!(maxNorm(back - y) <= roundTol)) r.fail("round trip error", {{"y", jsonVector(y)}, {"error", maxNorm(back - y)}});
        ++evaluated;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::OrbitMissesTarget) throw;
        ++skipped;
      }
    }
    if (evaluated < std::max<std::size_t>(1, n / 2)) {
      r.verdict = r.verdict == Verdict::Fail ? Verdict::Fail : Verdict::Inconclusive;
      r.notes.push_back("fewer than half of the samples lie in both orbit-chart images");
    }
    const auto compat = atlasCompatibilityQuotient(vf(), {a, b}, 60);
    if (compat.verdict == Verdict::Fail) {
      for (const auto& w : compat.witnesses) r.fail("compatibility: " + w.description, w.data);
    }
    r.payload = {{"samples", evaluated},  {"skipped", skipped},      {"worstError", worst},
                 {"worstRoundTrip", worstRound}, {"worstJacobianRel", worstJac}, {"compatibility", compat.payload}};
    r.stamps = {{"tolerance", tol}, {"roundTrip", roundTol}, {"jacobianRel", jacTol}, {"fdStep", h}};
    return r;
  }

  Report hausdorff() const {
    Report r;
    r.check = "hausdorff";
    const auto list = charts();
    const int steps = p().value("shrinkSteps", 20);
    Json pairs = Json::array();
    bool inconclusive = false;
    for (const auto& pr : p()["pairs"]) {
      const auto& c1 = shared.chart(pr["first"]["chart"].get<std::string>());
      const auto& c2 = shared.chart(pr["second"]["chart"].get<std::string>());
      const auto k1 = c1.key(vecOf(pr["first"]["point"]));
      const auto k2 = c2.key(vecOf(pr["second"]["point"]));
      const auto v = hausdorffProbe(vf(), list, k1, k2, steps);
      pairs.push_back(v.toJson());
      if (v.status == Separation::NotSeparatedWitness) {
        r.fail("orbits cannot be separated", {{"first", pr["first"]}, {"second", pr["second"]}, {"witnesses", v.witnesses.size()}});
      }
      inconclusive |= v.status == Separation::Inconclusive;
    }
    if (inconclusive && r.verdict == Verdict::Pass) r.verdict = Verdict::Inconclusive;
    r.payload = {{"pairs", pairs}};
    r.stamps = {{"shrinkSteps", steps}};
    return r;
  }

  Report embedding() const {
    LocalFrame frame;
    frame.domain = scene.domain(p()["frameDomain"].get<std::string>());
    for (const auto& id : p()["frameCharts"]) frame.charts.push_back(m().chart(id.get<std::string>()));
    return embedLocalToGlobal(vf(), frame, shared.chart(p()["orbitChart"].get<std::string>()),
                              p().value("lines", std::size_t{100}), p().value("pointsPerLine", std::size_t{20}));
  }

  Report metrizable() const {
    Report r;
    r.check = "metrizable";
    const bool ok = metrizableSeparable(vf(), charts());
    r.payload = {{"metrizableSeparable", ok}};
    if (!ok) {
      r.verdict = Verdict::Inconclusive;
      r.notes.push_back("no orbit chart covers the whole model domain");
    }
    return r;
  }
};

std::string isoNow() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json tolerancesJson(const Tolerances& t) {
  return {{"chart", t.chart},   {"singular", t.singular}, {"field", t.field}, {"position", t.position},
          {"event", t.event},   {"tangent", t.tangent},   {"check", t.check}, {"orbit", t.orbit},
          {"delta", t.delta},   {"maxStep", t.maxStep},   {"horizon", t.horizon}};
}

}  // namespace

std::size_t CheckReport::count(Verdict v) const {
  return static_cast<std::size_t>(
      std::count_if(probes.begin(), probes.end(), [&](const auto& p) { return p.report.verdict == v; }));
}

int CheckReport::exitCode() const { return count(Verdict::Fail) > 0 ? 1 : 0; }

Json CheckReport::toJson() const {
  Json checks = Json::array();
  for (const auto& p : probes) {
    Json j = p.report.toJson();
    j["name"] = p.name;
    j["check"] = p.check;
    j["stage"] = p.stage;
    if (p.expect) {
      j["expected"] = nameOf(*p.expect);
      j["matchesExpectation"] = *p.expect == p.report.verdict;
    }
    Json files = Json::array();
    for (const auto& [f, _] : p.artifacts) files.push_back(f);
    j["artifacts"] = files;
    checks.push_back(j);
  }
  Json out = {{"schemaVersion", kReportSchemaVersion},
              {"tool", "orbitkit"},
              {"toolVersion", toolVersion},
              {"scene", scene},
              {"seed", seed},
              {"tolerances", tolerances},
              {"summary",
               {{"pass", count(Verdict::Pass)},
                {"fail", count(Verdict::Fail)},
                {"inconclusive", count(Verdict::Inconclusive)},
                {"exitCode", exitCode()}}},
              {"checks", checks}};
  if (generatedAt) out["generatedAt"] = *generatedAt;
  return out;
}

std::string CheckReport::render(const Json& report) {
  std::ostringstream out;
  out << "scene " << report.value("scene", "?") << " (seed " << report.value("seed", 0) << ", orbitkit "
      << report.value("toolVersion", "?") << ")\n";
  for (const auto& c : report.value("checks", Json::array())) {
    std::string verdict = c.value("verdict", "?");
    std::transform(verdict.begin(), verdict.end(), verdict.begin(), ::toupper);
    out << "  [" << verdict << "] " << c.value("name", "?") << " (" << c.value("check", "?") << ")";
    if (c.contains("expected")) out << (c.value("matchesExpectation", false) ? " as expected" : " UNEXPECTED");
    out << "\n";
    std::size_t shown = 0;
    for (const auto& w : c.value("witnesses", Json::array())) {
      if (shown++ == 3) break;
      out << "      - " << w.value("description", "") << "\n";
    }
    const auto failures = c.value("failureCount", std::size_t{0});
    if (failures > 3) out << "      ... " << failures << " failures in total\n";
    for (const auto& n : c.value("notes", std::vector<std::string>{})) out << "      note: " << n << "\n";
  }
  const auto s = report.value("summary", Json::object());
  out << s.value("pass", 0) << " pass, " << s.value("fail", 0) << " fail, " << s.value("inconclusive", 0)
      << " inconclusive; exit code " << s.value("exitCode", 0) << "\n";
  return out.str();
}

CheckReport runChecks(const SceneDocument& scene, const RunOptions& options) {
  // Selection by probe name or check kind, closed under adapted-chart references.
  std::set<std::string> selected;
  for (const auto& p : scene.probes) {
    const bool all = options.checks.empty();
    const bool hit = std::find(options.checks.begin(), options.checks.end(), p.name) != options.checks.end() ||
                     std::find(options.checks.begin(), options.checks.end(), p.check) != options.checks.end();
    if (all || hit) selected.insert(p.name);
  }
  for (const auto& p : scene.probes) {
    if (!selected.contains(p.name)) continue;
    std::function<void(const Json&)> refs = [&](const Json& j) {
      if (j.is_object()) {
        for (const auto& item : j.items()) refs(item.value());
      } else if (j.is_array()) {
        for (const auto& v : j) refs(v);
      } else if (j.is_string()) {
        const auto name = j.get<std::string>();
        const auto it = std::find_if(scene.probes.begin(), scene.probes.end(), [&](const auto& q) { return q.name == name; });
        if (it != scene.probes.end() && it->check == "adapted") selected.insert(name);
      }
    };
    if (stageOf(p.check) == 2) refs(p.params);
  }

  Shared shared;
  shared.scene = &scene;
  std::vector<const ProbeSpec*> order;
  for (const auto& p : scene.probes) {
    if (selected.contains(p.name)) order.push_back(&p);
  }
  std::vector<ProbeOutcome> outcomes(order.size());
  for (int stage = 0; stage <= 2; ++stage) {
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (stageOf(order[i]->check) == stage) todo.push_back(i);
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t k = next++; k < todo.size(); k = next++) {
        const ProbeSpec& spec = *order[todo[k]];
        ProbeOutcome& out = outcomes[todo[k]];
        out.name = spec.name;
        out.check = spec.check;
        out.stage = stage;
        out.expect = spec.expect;
        try {
          Runner runner{scene, shared, spec, out.artifacts};
          out.report = runner.run();
        } catch (const Error& e) {
          out.report = Report{};
          out.report.fail(e.what(), {{"errorKind", nameOf(e.kind())}});
        } catch (const std::exception& e) {
          out.report = Report{};
          out.report.fail(std::string("error: ") + e.what());
        }
        out.report.check = spec.check;
      }
    };
    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(todo.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
  }

  CheckReport report;
  report.scene = scene.name;
  report.toolVersion = toolVersion();
  report.seed = scene.manifold->seed;
  report.tolerances = tolerancesJson(scene.manifold->tol);
  report.probes = std::move(outcomes);
  std::sort(report.probes.begin(), report.probes.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  if (!options.canonical) report.generatedAt = isoNow();
  return report;
}

}  // namespace orbitkit
