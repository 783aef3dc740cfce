#include "support/fixtures.hpp"

#include <doctest.h>

#include "orbitkit/orbit_space.hpp"
#include "orbitkit/sampling.hpp"

#include <cmath>
#include <random>

using namespace orbitkit;
using fixtures::vec;

namespace {

ErrorKind kindOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::ValidationError;
}

// Real root of w^3 + w = y: w = (2/sqrt 3) sinh(asinh(3 sqrt(3) y / 2) / 3).
std::string cubicRoot(const std::string& y) {
  const std::string a = "(log(2.598076211353316*(" + y + ") + sqrt((2.598076211353316*(" + y + "))^2 + 1))/3)";
  return "((exp(" + a + ") - exp(-" + a + "))/sqrt(3))";
}

ChartSpec warp() { return fixtures::chart("warp", {"x0", "x1 - 0.2*sin(x0)"}, {"x0", "x1 + 0.2*sin(x0)"}); }

ChartSpec warpCubic() {
  const std::string w = "(x1 - 0.2*sin(x0))";
  return fixtures::chart("warp-cubic", {"x0", w + "^3 + " + w}, {"x0", cubicRoot("x1") + " + 0.2*sin(x0)"});
}

std::shared_ptr<VectorFieldModel> warpField() { return fixtures::field(fixtures::plane({}, 4.0), {"1", "0.2*cos(x0)"}); }

DomainPredicate warpBox(double lo, double hi) {
  return fixtures::conj({"x0 - " + std::to_string(lo), std::to_string(hi) + " - x0", "1.44 - (x1 - 0.2*sin(x0))^2"});
}

OrbitChart adaptedChart(const VectorFieldModel& vf, const ChartSpec& c, const DomainPredicate& u) {
  AdaptedOptions opt;
  opt.budget = 25;
  opt.horizon = 20;
  return makeOrbitChart(vf, c, u, checkAdapted(vf, c, u, opt));
}

std::shared_ptr<VectorFieldModel> twoOrigins() {
  return fixtures::field(fixtures::plane({"x0^2 + x1^2"}), {"1", "0"});
}

}  // namespace

TEST_CASE("sameOrbit examples") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  const auto a = sameOrbit(*vf, vec({0, 0.5}), vec({3, 0.5}), 10);
  CHECK(a.same);
  CHECK(a.confidence == OrbitConfidence::Proven);
  CHECK(a.s == doctest::Approx(3.0).epsilon(1e-9));
  const auto b = sameOrbit(*vf, vec({0, 0.5}), vec({0, 0.6}), 10);
  CHECK_FALSE(b.same);
  CHECK(b.confidence == OrbitConfidence::UnreachedWithinHorizon);
  CHECK(b.distance == doctest::Approx(0.1).epsilon(1e-9));

  auto punctured = twoOrigins();
  CHECK_FALSE(sameOrbit(*punctured, vec({-1, 0}), vec({1, 0}), 10).same);
  CHECK(sameOrbit(*punctured, vec({-1, 1e-3}), vec({1, 1e-3}), 10).same);
}

TEST_CASE("orbit chart examples") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  const auto box = fixtures::conj({"1 - x0^2", "1 - x1^2"});
  const auto oc = adaptedChart(*vf, identityChart("id", 2), box);
  for (double y : {-0.9, -0.3, 0.0, 0.55}) {
    CHECK(oc.bar(vec({0.4, y}))[0] == doctest::Approx(y).epsilon(1e-12));
    // Points outside U are read through their orbit.
    CHECK(oc.bar(vec({-2.5, y}))[0] == doctest::Approx(y).epsilon(1e-9));
    CHECK(oc.inImage(vec({y})));
  }
  CHECK_FALSE(oc.inImage(vec({1.5})));
  CHECK(kindOf([&] { (void)oc.bar(vec({0, 2})); }) == ErrorKind::OrbitMissesTarget);

  auto wf = warpField();
  const auto wc = adaptedChart(*wf, warp(), warpBox(-1, 1));
  for (double c : {-1.0, 0.25, 0.8}) {
    // Orbit through (x0, c + 0.2 sin x0) is the image of the horizontal line at height c.
    CHECK(wc.bar(vec({3.0, c + 0.2 * std::sin(3.0)}))[0] == doctest::Approx(c).epsilon(1e-8));
  }

  const auto shear = fixtures::chart("shear", {"x0", "x1 - x0"}, {"x0", "x1 + x0"});
  AdaptedOptions opt;
  opt.budget = 16;
  const auto bad = checkAdapted(*vf, shear, box, opt);
  CHECK(kindOf([&] { (void)makeOrbitChart(*vf, shear, box, bad); }) == ErrorKind::NotNice);
}

TEST_CASE("quotient transition examples") {
  auto vf = fixtures::field(fixtures::plane({}, 7.0), {"1", "0"});
  const auto box = fixtures::conj({"1 - x0^2", "1 - x1^2"});
  const auto a = adaptedChart(*vf, identityChart("a", 2), box);
  const auto inner = box.intersect(fixtures::conj({"0.5 - x0^2"}));
  const auto b = adaptedChart(*vf, identityChart("b", 2), inner);
  for (double y : {-0.7, 0.1, 0.6}) CHECK(quotientTransition(*vf, a, b, vec({y}))[0] == doctest::Approx(y));

  // Disjoint manifold domains, overlapping orbit domains: only the flow links them.
  const auto left = adaptedChart(*vf, identityChart("left", 2), fixtures::conj({"x0 + 1", "-x0", "1 - x1^2"}));
  const auto right = adaptedChart(*vf, identityChart("right", 2), fixtures::conj({"x0 - 5", "6 - x0", "1 - x1^2"}));
  for (double y : {-0.5, 0.0, 0.8}) {
    const auto t = left.liftTime(vec({y}));
    REQUIRE(t);
    const QuotientTransition q(*vf, left, right, vec({y}), *t);
    CHECK(q(vec({y}))[0] == doctest::Approx(y).epsilon(1e-9));
    // Lifted at x0 = t, the frozen shift lands at the middle of (5, 6).
    CHECK(*t + q.shift() == doctest::Approx(5.5).epsilon(1e-6));
  }
  CHECK(kindOf([&] { (void)quotientTransition(*vf, left, right, vec({1.5})); }) == ErrorKind::OrbitMissesTarget);
}

TEST_CASE("quotient transition of warp and cubic charts") {
  auto vf = warpField();
  const auto a = adaptedChart(*vf, warp(), warpBox(-1, 1));
  const auto b = adaptedChart(*vf, warpCubic(), warpBox(2, 3));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.1, 1.1);
  double worst = 0, worstRound = 0, worstJac = 0;
  for (int i = 0; i < 100; ++i) {
    const Vector y = vec({u(rng)});
    const auto t = a.liftTime(y);
    REQUIRE(t);
    const QuotientTransition fwd(*vf, a, b, y, *t);
    const Vector z = fwd(y);
    worst = std::max(worst, std::abs(z[0] - (y[0] * y[0] * y[0] + y[0])));
    const auto tb = b.liftTime(z);
    REQUIRE(tb);
    worstRound = std::max(worstRound, std::abs(QuotientTransition(*vf, b, a, z, *tb)(z)[0] - y[0]));
    const double h = 1e-4;
    const double fd = (fwd(y.array() + h)[0] - fwd(y.array() - h)[0]) / (2 * h);
    worstJac = std::max(worstJac, std::abs(fd / (3 * y[0] * y[0] + 1) - 1));
  }
  CHECK(worst < 1e-6);
  CHECK(worstRound < 2e-6);
  CHECK(worstJac < 0.01);

  const auto rep = atlasCompatibilityQuotient(*vf, {a, b}, 60);
  CHECK(rep.verdict == Verdict::Pass);
  REQUIRE(rep.payload["pairs"].size() == 2);
  CHECK(rep.payload["pairs"][0]["minAbsDet"].get<double>() >= 1.0 - 1e-6);
}

TEST_CASE("quotient compatibility of constant-field boxes") {
  auto vf = fixtures::field(fixtures::plane({}, 7.0), {"1", "0"});
  std::vector<OrbitChart> charts;
  charts.push_back(adaptedChart(*vf, identityChart("b1", 2), fixtures::conj({"1 - x0^2", "1 - x1^2"})));
  charts.push_back(adaptedChart(*vf, identityChart("b2", 2), fixtures::conj({"x0 - 2", "3 - x0", "0.25 - x1^2"})));
  charts.push_back(adaptedChart(*vf, identityChart("b3", 2), fixtures::conj({"x0 + 4", "-3 - x0", "4 - x1^2"})));
  const auto rep = atlasCompatibilityQuotient(*vf, charts, 40);
  CHECK(rep.verdict == Verdict::Pass);
  CHECK(rep.payload["pairs"].size() == 6);
  CHECK_FALSE(metrizableSeparable(*vf, charts));
}

TEST_CASE("hausdorff probe in one chart") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  const std::vector<OrbitChart> charts = {
      adaptedChart(*vf, identityChart("id", 2), fixtures::conj({"4 - x0^2", "1 - x1^2"}))};
  const auto k1 = charts[0].key(vec({0, 0.2}));
  const auto k2 = charts[0].key(vec({1, 0.7}));
  const auto v = hausdorffProbe(*vf, charts, k1, k2);
  CHECK(v.status == Separation::Separated);
  REQUIRE(v.boxFirst);
  REQUIRE(v.boxSecond);
  CHECK(v.boxFirst->contains(vec({0.2})));
  CHECK(v.boxSecond->contains(vec({0.7})));
  CHECK(v.boxFirst->upper[0] < v.boxSecond->lower[0]);
}

TEST_CASE("two origins are not separated") {
  auto vf = twoOrigins();
  const std::vector<OrbitChart> charts = {
      adaptedChart(*vf, identityChart("left", 2), fixtures::conj({"-x0"})),
      adaptedChart(*vf, identityChart("right", 2), fixtures::conj({"x0"}))};
  const OrbitKey leftRay = charts[0].key(vec({-1, 0}));
  const OrbitKey rightRay = charts[1].key(vec({1, 0}));
  const auto v = hausdorffProbe(*vf, charts, leftRay, rightRay, 20);
  CHECK(v.status == Separation::NotSeparatedWitness);
  REQUIRE(v.witnesses.size() == 20);
  for (const auto& w : v.witnesses) {
    const double yn = std::ldexp(1.0, -w.step);
    CHECK(std::abs(w.barInFirst[0]) == doctest::Approx(yn));
    CHECK(w.barInSecond[0] == doctest::Approx(w.barInFirst[0]).epsilon(1e-9));
  }

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 20; ++i) {
    const double y1 = u(rng);
    double y2 = u(rng);
    if (std::abs(y1 - y2) <= 1e-3) y2 = y1 + 0.5;
    const auto s = hausdorffProbe(*vf, charts, charts[0].key(vec({-1, y1})), charts[1].key(vec({1, y2})));
    CHECK(s.status == Separation::Separated);
  }
  const auto close =
      hausdorffProbe(*vf, charts, charts[0].key(vec({-1, 0.0})), charts[1].key(vec({1, 1.5e-3})));
  CHECK(close.status == Separation::Separated);
}

TEST_CASE("frame equivalence examples") {
  auto m = fixtures::plane();
  const auto id = identityChart("id", 2);
  const auto cubic = fixtures::chart("cubic", {"x0", "x1^3 + x1"}, {"x0", cubicRoot("x1")});
  CHECK(frameEquivalent(*m, id, cubic, 200).verdict == Verdict::Pass);
  const auto timeShear = fixtures::chart("tshear", {"x0 + x1", "x1"}, {"x0 - x1", "x1"});
  CHECK(frameEquivalent(*m, id, timeShear, 200).verdict == Verdict::Fail);
  const auto boost = fixtures::chart("mix", {"x0", "x1 + 0.1*x0"}, {"x0", "x1 - 0.1*x0"});
  const auto r = frameEquivalent(*m, id, boost, 200);
  CHECK(r.verdict == Verdict::Fail);
  CHECK(r.payload["worstSpatialDx0"].get<double>() == doctest::Approx(0.1));
}

TEST_CASE("embedding of a local frame") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  const auto box = fixtures::conj({"1 - x0^2", "1 - x1^2"});
  const auto global = adaptedChart(*vf, identityChart("global", 2), fixtures::conj({"9 - x0^2", "4 - x1^2"}));
  const LocalFrame single{box, {identityChart("id", 2)}};
  const auto r = embedLocalToGlobal(*vf, single, global, 100);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(r.payload["lines"] == 100);
  CHECK(r.payload["linePoints"] == 2000);
  CHECK(r.payload["worstDistanceToOrbit"].get<double>() < 1e-6);

  const auto cubic = fixtures::chart("cubic", {"x0", "x1^3 + x1"}, {"x0", cubicRoot("x1")});
  const LocalFrame two{box, {identityChart("id", 2), cubic}};
  const auto r2 = embedLocalToGlobal(*vf, two, global, 100);
  CHECK(r2.verdict == Verdict::Pass);
  CHECK(r2.payload["frameInvariant"] == true);
  CHECK(r2.payload["worstFrameDisagreement"].get<double>() < 1e-9);

  const auto shear = fixtures::chart("shear", {"x0", "x1 - x0"}, {"x0", "x1 + x0"});
  CHECK(kindOf([&] { (void)embedLocalToGlobal(*vf, LocalFrame{box, {shear}}, global, 10); }) ==
        ErrorKind::HypothesisViolation);
}

TEST_CASE("embedding in the punctured plane uses the right ray only") {
  auto vf = twoOrigins();
  const auto left = adaptedChart(*vf, identityChart("left", 2), fixtures::conj({"-x0"}));
  const auto right = adaptedChart(*vf, identityChart("right", 2), fixtures::conj({"x0"}));
  const auto strip = fixtures::conj({"x0", "2 - x0", "1 - x1^2"});
  const auto r = embedLocalToGlobal(*vf, LocalFrame{strip, {identityChart("id", 2)}}, right, 40);
  CHECK(r.verdict == Verdict::Pass);
  // The local ray at height 0 lifts into the strip; its global orbit never meets x0 < 0.
  const Vector z = right.lift(vec({0.0}));
  CHECK(z[0] > 0);
  CHECK(kindOf([&] { (void)left.bar(z); }) == ErrorKind::OrbitMissesTarget);
  CHECK_FALSE(sameOrbit(*vf, z, vec({-1, 0}), 100).same);
}

TEST_CASE("property: chi bar agrees along an orbit") {
  auto vf = warpField();
  const auto wc = adaptedChart(*vf, warp(), warpBox(-1, 1));
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-1, 1), s(-3, 3);
  for (int i = 0; i < 50; ++i) {
    const Vector x = vec({u(rng), u(rng)});
    const auto r = flow(*vf, x, s(rng));
    REQUIRE(r.status == FlowStatus::Interior);
    REQUIRE(sameOrbit(*vf, x, r.point.coords, 10).same);
    CHECK(maxNorm(wc.bar(x) - wc.bar(r.point.coords)) < 1e-6);
  }
}

TEST_CASE("property: separated boxes share no probe orbit") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  const std::vector<OrbitChart> charts = {
      adaptedChart(*vf, identityChart("id", 2), fixtures::conj({"4 - x0^2", "1 - x1^2"}))};
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int trial = 0; trial < 5; ++trial) {
    const double y1 = u(rng), y2 = u(rng);
    const auto v = hausdorffProbe(*vf, charts, charts[0].key(vec({0, y1})), charts[0].key(vec({0, y2})));
    REQUIRE(v.status == Separation::Separated);
    std::size_t common = 0;
    for (const auto& y : haltonPoints(*v.boxFirst, 1000, 5 + trial)) {
      const auto t = charts[0].liftTime(y);
      if (!t) continue;
      if (v.boxSecond->contains(charts[0].bar(charts[0].lift(y, *t)))) ++common;
    }
    CHECK(common == 0);
  }
}
