// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Reference values are computed here from closed forms, not taken from the
// library's own payloads, except where a check's result is itself the verdict.

#include "orbitkit/orbit_space.hpp"
#include "orbitkit/sampling.hpp"
#include "orbitkit/scene.hpp"
#include "orbitkit/transversality.hpp"
#include "support/expr_generator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace orbitkit;

namespace {

// Pinned tolerances.
constexpr double kFlowTol = 1e-9;
constexpr double kGroupLawTol = 1e-6;
constexpr std::size_t kGroupLawTriples = 100;
constexpr double kKruskalTol = 1e-6;
constexpr std::size_t kMinSubdomains = 50;
constexpr double kStraightenTol = 1e-9;
constexpr double kPushforwardTol = 1e-6;
constexpr double kCrossingTol = 1e-6;
constexpr double kEndpointTol = 1e-6;
constexpr double kFdAgreement = 0.05;
constexpr std::size_t kPullbackSamples = 1000;
constexpr double kQuotientTol = 1e-6;
constexpr double kRoundTripTol = 2e-6;
constexpr double kJacobianRel = 0.01;
constexpr int kShrinkSteps = 20;
constexpr double kSeparatedGap = 1e-3;
constexpr std::size_t kEmbeddingLines = 100;
constexpr double kEmbeddingTol = 1e-6;
constexpr double kPeriodTol = 1e-6;
constexpr double kGapBelow = 0.01;
constexpr std::size_t kFuzzInputs = 100000;
constexpr std::size_t kAdExpressions = 1000;
constexpr double kAdRel = 1e-6;

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

AdaptedOptions adaptedOptions(double horizon = 20.0) {
  AdaptedOptions opt;
  opt.budget = 25;
  opt.horizon = horizon;
  return opt;
}

OrbitChart orbitChart(const SceneDocument& doc, const std::string& chart, const DomainPredicate& u) {
  const auto& c = doc.manifold->chart(chart);
  const auto v = checkAdapted(*doc.field, c, u, adaptedOptions());
  return makeOrbitChart(*doc.field, c, u, v);
}

// ------------------------------------------------------------------ criteria

Outcome flowCorrectness() {
  Outcome o;
  const auto constant = loadGallery("constant");
  const auto& vf = *constant.field;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ux(-3, 3), us(-5, 5);
  double worstFlow = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vector x = vec({ux(rng), ux(rng)});
    const double s = us(rng);
    const Vector exact = x + s * vec({1, 0});
    const auto f = flow(vf, x, s);
    o.require(f.status == FlowStatus::Interior, "constant flow stays interior");
    worstFlow = std::max(worstFlow, maxNorm(f.point.coords - exact));
  }
  o.require(worstFlow <= kFlowTol, "constant flow error <= 1e-9");

  double worstLaw = 0.0;
  std::size_t scenes = 0, undefined = 0;
  for (const auto& g : galleryList()) {
    const auto doc = loadGallery(g.name);
    const auto& field = *doc.field;
    std::mt19937_64 r(202);
    std::uniform_real_distribution<double> ut(-1, 1);
    const auto pts = samplePoints(doc.manifold->samplingBox, 10 * kGroupLawTriples, 303,
                                  [&](const Vector& x) { return doc.manifold->domain().contains(x); });
    std::size_t triples = 0;
    for (const auto& x : pts) {
      if (triples == kGroupLawTriples) break;
      const double s = ut(r), t = ut(r);
      try {
        const auto a = flow(field, x, s);
        if (a.status != FlowStatus::Interior) continue;
        const auto b = flow(field, a.point.coords, t);
        const auto c = flow(field, x, s + t);
        if (b.status != FlowStatus::Interior || c.status != FlowStatus::Interior) continue;
        worstLaw = std::max(worstLaw, field.distance(b.point.coords, c.point.coords));
        ++triples;
      } catch (const Error& e) {
        // Finite-time blow-up: (s, X) lies outside the flow domain.
        if (e.kind() != ErrorKind::StepFailure) throw;
        ++undefined;
      }
    }
    o.require(triples == kGroupLawTriples, g.name + ": 100 triples with defined flows");
    ++scenes;
  }
  o.require(worstLaw < kGroupLawTol, "group law error < 1e-6");
  o.detail << "constant flow max|F-(X+sv)| = " << sci(worstFlow) << " over 100 (X,s); group law max error "
           << sci(worstLaw) << " over " << scenes << " scenes x 100 triples (" << undefined
           << " draws outside the flow domain)";
  return o;
}

Outcome kruskalAnchors() {
  Outcome o;
  const auto doc = loadGallery("kruskal-2d");
  const auto& vf = *doc.field;
  const auto& slab = doc.domain("slab");
  // Literal endpoint values for xi = 0, 1, 2.
  const std::map<double, double> anchors = {{0.0, 1.0}, {1.0, 1.4142136}, {2.0, 2.2360680}};
  double worstEnd = 0.0;
  for (const auto& [xi, end] : anchors) {
    const auto iv = intervalSet(vf, vec({0, xi}), slab, 20.0);
    o.require(iv.components.size() == 1 && iv.components[0].bounded(), "one bounded interval");
    if (iv.components.size() != 1) continue;
    const double closed = std::sqrt(1 + xi * xi);
    worstEnd = std::max({worstEnd, std::abs(iv.components[0].lower.s + closed), std::abs(iv.components[0].upper.s - closed),
                         std::abs(iv.components[0].upper.s - end)});
  }
  o.require(worstEnd <= kKruskalTol, "endpoints +-sqrt(1+xi^2)");

  const DomainPredicate everything;
  const auto& chart = doc.manifold->reference;
  const auto verdict = checkAdapted(vf, chart, everything, adaptedOptions());
  o.require(verdict.adapted && verdict.nice, "global chart adapted and nice");
  const auto oc = makeOrbitChart(vf, chart, everything, verdict);
  double worstBar = 0.0;
  const auto pts = samplePoints(doc.manifold->samplingBox, 50, 404, [&](const Vector& x) { return slab.contains(x); });
  for (const auto& x : pts) worstBar = std::max(worstBar, std::abs(oc.bar(x)[0] - x[1]));
  o.require(worstBar <= kKruskalTol, "chi bar = xi");

  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> uxi(-2.5, 2.5), ut(-0.5, 0.5);
  std::size_t separated = 0, pairs = 0;
  for (; pairs < 10; ++pairs) {
    const double a = uxi(rng);
    double b = uxi(rng);
    if (std::abs(a - b) <= kSeparatedGap) b = a + 0.5;
    const auto v = hausdorffProbe(vf, {oc}, oc.key(vec({ut(rng), a})), oc.key(vec({ut(rng), b})));
    separated += v.status == Separation::Separated ? 1 : 0;
  }
  o.require(separated == pairs, "xi-pairs Separated");
  const bool metrizable = metrizableSeparable(vf, {oc});
  o.require(metrizable, "metrizable-separable flag");
  o.detail << "endpoint error " << sci(worstEnd) << "; adapted=" << verdict.adapted << " nice=" << verdict.nice
           << "; chi bar error " << sci(worstBar) << "; Separated " << separated << "/" << pairs
           << "; metrizableSeparable=" << metrizable;
  return o;
}

Outcome detectorAgreement() {
  Outcome o;
  std::size_t probes = 0, subdomains = 0, disagreements = 0, adapted = 0;
  for (const auto& g : galleryList()) {
    const auto doc = loadGallery(g.name);
    const auto report = runChecks(doc, RunOptions{{"detectors"}, 1, true});
    for (const auto& p : report.probes) {
      const auto n = p.report.payload.value("subdomains", std::size_t{0});
      o.require(n >= kMinSubdomains, g.name + "/" + p.name + " >= 50 sub-domains");
      subdomains += n;
      disagreements += p.report.payload.value("disagreements", std::size_t{1});
      adapted += p.report.payload.value("adapted", std::size_t{0});
      ++probes;
    }
  }
  o.require(probes > 0, "detector probes exist");
  o.require(disagreements == 0, "zero disagreements");
  o.detail << disagreements << " disagreements over " << subdomains << " sub-domains in " << probes
           << " probes (" << adapted << " adapted, " << subdomains - adapted << " not)";
  return o;
}

Outcome straightening() {
  Outcome o;
  const auto doc = loadGallery("straighten-atan");
  const auto& vf = *doc.field;
  const auto& base = doc.manifold->reference;
  const auto st = buildStraightening(vf, base, vec({0, 0}), 1.0);
  const auto map = std::dynamic_pointer_cast<const StraightenedMap>(st.forward);
  o.require(map != nullptr, "numeric straightening chart");
  if (!map) return o;
  double worst = 0.0;
  const auto pts = haltonPoints(map->box(), 100, 606);
  for (const auto& q : pts) worst = std::max(worst, std::abs(st.forward->apply(q)[0] - std::atan(q[0])));
  o.require(worst <= kStraightenTol, "y'0 = atan(y0)");
  double worstField = 0.0;
  const auto grid = gridPoints(map->box(), 9);
  for (const auto& q : grid) worstField = std::max(worstField, maxNorm(vf.inChart(st, q) - vec({1, 0})));
  o.require(worstField < kPushforwardTol, "|v' - d0| < 1e-6");
  o.detail << "max|y'0 - atan| = " << sci(worst) << " at " << pts.size() << " points; max|v' - (1,0)| = "
           << sci(worstField) << " on " << grid.size() << " grid nodes";
  return o;
}

Outcome transversality() {
  Outcome o;
  const auto doc = loadGallery("disk");
  const auto& vf = *doc.field;
  const auto& disk = doc.domain("disk");
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> ux0(-2, 2), ux1(-0.95, 0.95);
  double worstDgds = 0.0, worstS = 0.0;
  std::size_t events = 0;
  for (int i = 0; i < 30; ++i) {
    const Vector x = vec({ux0(rng), ux1(rng)});
    const auto ev = lineCrossings(vf, x, disk, 10.0);
    o.require(ev.size() == 2, "two crossings per secant line");
    const double half = std::sqrt(1 - x[1] * x[1]);
    for (const auto& e : ev) {
      worstDgds = std::max(worstDgds, std::abs(e.dgds - 2 * (x[0] + e.s)));
      worstS = std::max(worstS, std::min(std::abs(e.s - (-x[0] - half)), std::abs(e.s - (-x[0] + half))));
      ++events;
    }
  }
  o.require(worstDgds <= kCrossingTol, "dg/ds = 2(x0+s)");
  o.require(worstS <= kCrossingTol, "crossing parameters");
  const auto tangent = lineCrossings(vf, vec({0, 1}), disk, 10.0);
  bool flagged = false;
  for (const auto& e : tangent) flagged |= !e.transverse;
  o.require(flagged, "X=(0,1) flagged non-transverse");

  std::vector<Vector> offsets;
  for (double y : {-0.8, -0.5, -0.2, 0.0, 0.3, 0.6, 0.85}) offsets.push_back(vec({0, y}));
  offsets.push_back(vec({0.4, 0.3}));
  const auto ef = endpointStability(vf, disk, vec({0, 0}), offsets);
  double worstPhi = 0.0;
  for (const auto& row : ef.rows) {
    const double r = std::sqrt(1 - row.offset[1] * row.offset[1]);
    worstPhi = std::max({worstPhi, std::abs(row.phi1 - (-row.offset[0] - r)), std::abs(row.phi2 - (-row.offset[0] + r))});
  }
  o.require(worstPhi <= kEndpointTol, "phi = -+sqrt(1-y^2)");
  o.require(ef.worstDisagreement < kFdAgreement, "FD h vs h/2 agreement < 5%");
  o.detail << "dg/ds error " << sci(worstDgds) << " over " << events << " crossings; tangent flagged=" << flagged
           << "; endpoint error " << sci(worstPhi) << "; FD disagreement " << sci(ef.worstDisagreement);
  return o;
}

Outcome boundaryPullback() {
  Outcome o;
  for (const auto& [scene, domain] : std::vector<std::pair<std::string, std::string>>{{"disk", "disk"}, {"square", "square"}}) {
    const auto doc = loadGallery(scene);
    PullbackOptions opt;
    opt.samples = kPullbackSamples;
    const auto r = pullbackBoundaryCheck(*doc.field, doc.domain(domain), opt);
    const auto done = r.payload["samples"].get<std::size_t>();
    const auto mismatches = r.payload["mismatches"].get<std::size_t>();
    o.require(done == kPullbackSamples, scene + ": 1000 samples classified");
    o.require(mismatches == 0, scene + ": zero mismatches");
    o.detail << scene << " " << mismatches << " mismatches / " << done << " samples ("
             << r.payload["boundary"].get<std::size_t>() << " on the boundary); ";
  }
  return o;
}

Outcome quotientAtlas() {
  Outcome o;
  const auto doc = loadGallery("warp-pushforward");
  const auto& vf = *doc.field;
  const auto a = orbitChart(doc, "warp", doc.domain("near"));
  const auto b = orbitChart(doc, "warp-cubic", doc.domain("ahead"));
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> uy(-1.1, 1.1);
  double worst = 0.0, worstRound = 0.0, worstJac = 0.0;
  std::size_t n = 0;
  for (int i = 0; i < 100; ++i) {
    const Vector y = vec({uy(rng)});
    const auto t = a.liftTime(y);
    if (!t) continue;
    const QuotientTransition fwd(vf, a, b, y, *t);
    const Vector z = fwd(y);
    worst = std::max(worst, std::abs(z[0] - (y[0] * y[0] * y[0] + y[0])));
    const auto tb = b.liftTime(z);
    if (!tb) continue;
    worstRound = std::max(worstRound, std::abs(QuotientTransition(vf, b, a, z, *tb)(z)[0] - y[0]));
    const double h = 1e-4;
    const double fd = (fwd(vec({y[0] + h}))[0] - fwd(vec({y[0] - h}))[0]) / (2 * h);
    worstJac = std::max(worstJac, std::abs(fd / (3 * y[0] * y[0] + 1) - 1));
    ++n;
  }
  o.require(n == 100, "100 points in both images");
  o.require(worst <= kQuotientTol, "y -> y^3 + y");
  o.require(worstRound < kRoundTripTol, "round trip < 2e-6");
  o.require(worstJac < kJacobianRel, "FD Jacobian within 1% of 3y^2+1");
  o.detail << "transition error " << sci(worst) << ", round trip " << sci(worstRound) << ", Jacobian rel "
           << sci(worstJac) << " at " << n << " points";
  return o;
}

Outcome nonHausdorff() {
  Outcome o;
  const auto doc = loadGallery("two-origins");
  const auto& vf = *doc.field;
  const DomainPredicate everything;
  const std::vector<OrbitChart> charts = {orbitChart(doc, "left", everything), orbitChart(doc, "right", everything)};
  const auto v = hausdorffProbe(vf, charts, charts[0].key(vec({-1, 0})), charts[1].key(vec({1, 0})), kShrinkSteps);
  o.require(v.status == Separation::NotSeparatedWitness, "rays not separated");
  o.require(v.witnesses.size() == static_cast<std::size_t>(kShrinkSteps), "a witness for each n = 1..20");
  double worstWitness = 0.0;
  int deepest = 0;
  for (const auto& w : v.witnesses) {
    const double yn = std::ldexp(1.0, -w.step);
    worstWitness = std::max({worstWitness, std::abs(std::abs(w.barInFirst[0]) - yn) / yn,
                             std::abs(w.barInSecond[0] - w.barInFirst[0]) / yn});
    deepest = std::max(deepest, w.step);
  }
  o.require(worstWitness <= 1e-6, "witness orbits at y = 2^-n");
  o.require(deepest == kShrinkSteps, "witnesses down to n = 20");

  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> uy(-2, 2);
  std::size_t separated = 0, pairs = 0;
  auto probe = [&](double y1, double y2) {
    const auto s = hausdorffProbe(vf, charts, charts[0].key(vec({-1, y1})), charts[1].key(vec({1, y2})));
    separated += s.status == Separation::Separated ? 1 : 0;
    ++pairs;
  };
  for (int i = 0; i < 20; ++i) {
    const double y1 = uy(rng);
    double y2 = uy(rng);
    if (std::abs(y1 - y2) <= kSeparatedGap) y2 = y1 + 0.5;
    probe(y1, y2);
  }
  probe(0.0, 1.5 * kSeparatedGap);
  o.require(separated == pairs, "|y - y'| > 1e-3 pairs Separated");
  o.detail << "rays: " << nameOf(v.status) << " with " << v.witnesses.size() << " witnesses down to n = " << deepest
           << " (relative error " << sci(worstWitness) << "); Separated " << separated << "/" << pairs;
  return o;
}

Outcome embedding() {
  Outcome o;
  const struct {
    const char* scene;
    const char* frameDomain;
    const char* globalChart;
    const char* globalDomain;
    std::vector<std::string> frameCharts;
    std::function<double(const Vector&)> bar;  // closed-form chi bar of the global chart
  } cases[] = {
      {"constant", "box", "cartesian", "slab", {"cartesian", "cubic"}, [](const Vector& x) { return x[1]; }},
      {"warp-pushforward", "near", "warp", "slab", {"warp", "warp-cubic"},
       [](const Vector& x) { return x[1] - 0.2 * std::sin(x[0]); }},
  };
  for (const auto& c : cases) {
    const auto doc = loadGallery(c.scene);
    const auto global = orbitChart(doc, c.globalChart, doc.domain(c.globalDomain));
    LocalFrame frame{doc.domain(c.frameDomain), {}};
    for (const auto& id : c.frameCharts) frame.charts.push_back(doc.manifold->chart(id));
    const auto r = embedLocalToGlobal(*doc.field, frame, global, kEmbeddingLines);
    const auto& p = r.payload;
    const std::string s = c.scene;
    o.require(r.verdict == Verdict::Pass, s + ": embedding check passes");
    o.require(p["lines"].get<std::size_t>() >= kEmbeddingLines, s + ": >= 100 world lines");
    o.require(p["injective"].get<bool>() && p["surjectivityMisses"].get<std::size_t>() == 0, s + ": bijective");
    o.require(p["worstDistanceToOrbit"].get<double>() <= kEmbeddingTol &&
                  p["worstLineDeviation"].get<double>() <= kEmbeddingTol,
              s + ": l = I(l) n U");
    o.require(p["frameInvariant"].get<bool>() && p["worstFrameDisagreement"].get<double>() <= kEmbeddingTol,
              s + ": frame invariance");
    // The orbit chart itself against its closed form on the frame domain.
    double worstBar = 0.0;
    const auto pts = samplePoints(doc.manifold->samplingBox, 100, 1001,
                                  [&](const Vector& x) { return frame.domain.contains(x); });
    for (const auto& x : pts) worstBar = std::max(worstBar, std::abs(global.bar(x)[0] - c.bar(x)));
    o.require(worstBar <= kEmbeddingTol, s + ": chi bar closed form");
    o.detail << s << ": " << p["lines"] << " lines, injective=" << p["injective"] << ", misses "
             << p["surjectivityMisses"] << ", distance " << sci(p["worstDistanceToOrbit"].get<double>())
             << ", frame disagreement " << sci(p["worstFrameDisagreement"].get<double>()) << "; ";
  }
  return o;
}

Outcome negativeControls() {
  Outcome o;
  const auto rot = loadGallery("rotation-periodic");
  double worstPeriod = 0.0;
  for (const auto& x : {vec({1, 0}), vec({0, 1.5}), vec({-0.3, 0.4})}) {
    const auto orbit = orbitPolyline(*rot.field, x, 10.0, 200);
    o.require(orbit.periodic && orbit.period.has_value(), "rotation orbit periodic");
    if (orbit.period) worstPeriod = std::max(worstPeriod, std::abs(*orbit.period - 2 * std::numbers::pi));
  }
  o.require(worstPeriod <= kPeriodTol, "period 2pi +- 1e-6");

  const auto torus = loadGallery("torus-irrational");
  const auto& strip = torus.manifold->chart("strip");
  const auto r100 = returnSetProbe(*torus.field, strip, vec({0.5, 0.25}), 100.0);
  const auto r1000 = returnSetProbe(*torus.field, strip, vec({0.5, 0.25}), 1000.0);
  o.require(r1000.minGap < kGapBelow, "minGap < 0.01 at 1000");
  o.require(r1000.minGap < r100.minGap, "minGap decreases from 100 to 1000");
  o.require(!r1000.isolationEvidence, "no isolation evidence");
  // Three-distance oracle: returns at x0 = 0.5 are 0.25 + k phi mod 1.
  const double phi = 1.6180339887498949;
  std::vector<double> ring;
  for (int k = -1000; k <= 1000; ++k) ring.push_back(std::fmod(std::fmod(0.25 + k * phi, 1.0) + 1.0, 1.0));
  std::sort(ring.begin(), ring.end());
  double oracleGap = 1.0 - ring.back() + ring.front();
  for (std::size_t i = 1; i < ring.size(); ++i) oracleGap = std::min(oracleGap, ring[i] - ring[i - 1]);
  o.detail << "rotation period error " << sci(worstPeriod) << "; torus minGap " << sci(r100.minGap) << " -> "
           << sci(r1000.minGap) << " (horizons 100, 1000; circle-rotation reference " << sci(oracleGap) << ")";
  return o;
}

Outcome parserAndAd() {
  Outcome o;
  std::mt19937_64 rng(1111);
  std::uniform_int_distribution<int> len(0, 32), byte(0, 255);
  static const char* tokens[] = {"x0", "x1", "x9", "1", "2.5", "e", "pi", "+", "-", "*", "/", "^", "(", ")", "sin",
                                 "log", "abs", "tanh", " ", "1e", ".", "e+", ",", "x", "sqrt(", "1e999", "0/0"};
  std::uniform_int_distribution<int> tok(0, static_cast<int>(std::size(tokens)) - 1);
  std::size_t parsed = 0, rejected = 0, badOffsets = 0, unexpected = 0;
  for (std::size_t i = 0; i < kFuzzInputs; ++i) {
    std::string s;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) {
      if (i % 2) s.push_back(static_cast<char>(byte(rng)));
      else s += tokens[tok(rng)];
    }
    try {
      const Expr e = parse(s);
      ++parsed;
      std::map<std::string, double> b;
      for (const auto& v : e.freeVariables()) b[v] = 0.5;
      try {
        (void)evalReal(e, b);
      } catch (const Error&) {
      }
    } catch (const Error& e) {
      ++rejected;
      if (e.kind() == ErrorKind::SyntaxError && (!e.offset() || *e.offset() > s.size())) ++badOffsets;
    } catch (...) {
      ++unexpected;
    }
  }
  o.require(parsed + rejected == kFuzzInputs && unexpected == 0, "every input parses or raises Error");
  o.require(badOffsets == 0, "syntax errors carry an in-range offset");

  testsupport::Generator gen(2222);
  std::uniform_real_distribution<double> bind(-1.5, 1.5);
  const auto names = coordinateNames(3);
  double worstRel = 0.0;
  for (std::size_t t = 0; t < kAdExpressions; ++t) {
    const std::string text = gen.text(4);
    const CompiledExpr program(parse(text), names);
    std::vector<double> x(3), grad(3);
    for (auto& v : x) v = bind(gen.rng());
    (void)program.withGradient(x, grad);
    for (std::size_t j = 0; j < 3; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (double h : {1e-5, 1e-6}) {
        auto plus = x, minus = x;
        plus[j] += h;
        minus[j] -= h;
        const double fd = (program(plus) - program(minus)) / (2 * h);
        best = std::min(best, std::abs(grad[j] - fd) / std::max(1.0, std::abs(grad[j])));
      }
      worstRel = std::max(worstRel, best);
    }
  }
  o.require(worstRel < kAdRel, "AD vs central differences < 1e-6");
  o.detail << kFuzzInputs << " fuzz inputs (" << parsed << " parsed, " << rejected << " rejected, " << unexpected
           << " crashes); AD vs CD worst relative error " << sci(worstRel) << " over " << kAdExpressions
           << " expressions";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"flow correctness", flowCorrectness},
      {"Kruskal anchors", kruskalAnchors},
      {"adaptedness detectors agree", detectorAgreement},
      {"straightening construction", straightening},
      {"transversality on the disk", transversality},
      {"boundary pullback", boundaryPullback},
      {"quotient atlas", quotientAtlas},
      {"non-Hausdorff witness", nonHausdorff},
      {"embedding of a local frame", embedding},
      {"negative controls", negativeControls},
      {"parser and AD", parserAndAd},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += o.pass ? 0 : 1;
    std::printf("criterion %2zu %s  %s: %s (%.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
