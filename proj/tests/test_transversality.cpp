#include "support/fixtures.hpp"

#include <doctest.h>

#include "orbitkit/sampling.hpp"
#include "orbitkit/transversality.hpp"

#include <cmath>
#include <limits>

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

std::shared_ptr<VectorFieldModel> translation() { return fixtures::field(fixtures::plane({}, 3.0), {"1", "0"}); }
DomainPredicate disk() { return fixtures::conj({"1 - x0^2 - x1^2"}); }
DomainPredicate square() { return fixtures::conj({"x0 + 1", "1 - x0", "x1 + 1", "1 - x1"}); }
// Kruskal plane with T = x0, xi = x1 and the flow of d/dT.
DomainPredicate kruskal() { return fixtures::conj({"1 + x1^2 - x0^2"}); }

}  // namespace

TEST_CASE("disk crossings") {
  auto vf = translation();
  const auto ev = lineCrossings(*vf, vec({0, 0}), disk(), 10.0);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].s == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(ev[1].s == doctest::Approx(1.0).epsilon(1e-9));
  // g = x0^2 + x1^2 - 1 along the line: g' = 2s.
  CHECK(ev[0].dgds == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(ev[1].dgds == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(ev[0].transverse);
  CHECK(ev[1].transverse);
  for (const auto& e : ev) {
    // Event invariant: the conjunct vanishes at the event point.
    const double g = 1.0 - e.point.squaredNorm();
    CHECK(std::abs(g) <= 10.0 * vf->tol().event * 2.0);
  }
}

TEST_CASE("tangent line touches the disk once") {
  auto vf = translation();
  const auto ev = lineCrossings(*vf, vec({0, 1}), disk(), 10.0);
  REQUIRE(ev.size() == 1);
  CHECK(std::abs(ev[0].s) < 1e-6);
  CHECK(std::abs(ev[0].dgds) < 1e-7);
  CHECK_FALSE(ev[0].transverse);
}

TEST_CASE("kruskal crossings") {
  auto vf = translation();
  const auto ev = lineCrossings(*vf, vec({0, 1}), kruskal(), 10.0);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].s == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-9));
  CHECK(ev[1].s == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  CHECK(ev[0].boundaryConjunct == 0);
  // g = T^2 - 1 - xi^2, g' = 2T.
  CHECK(ev[1].dgds == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("tangency scan") {
  auto vf = translation();
  const std::vector<Vector> row = {vec({-2, -1.2}), vec({-2, 0}), vec({-2, 0.999}), vec({-2, 1.0})};
  const auto scan = tangencyScan(*vf, disk(), row, 10.0);
  CHECK_FALSE(scan.inSSigma[0]);
  CHECK_FALSE(scan.inSSigma[1]);
  CHECK_FALSE(scan.inSSigma[2]);
  CHECK(scan.inSSigma[3]);
  CHECK(std::isinf(scan.worstAbsDgds[0]));
  CHECK(scan.worstAbsDgds[1] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(scan.worstAbsDgds[2] == doctest::Approx(2.0 * std::sqrt(1.0 - 0.999 * 0.999)).epsilon(1e-5));
  REQUIRE(scan.witnesses.size() == 1);
  CHECK_FALSE(scan.witnesses[0].second.transverse);
  CHECK(std::abs(1.0 - scan.witnesses[0].second.point.squaredNorm()) < 1e-8);

  const auto csv = scan.toCsv();
  CHECK(csv.rfind("x0,x1,inSSigma,worstAbsDgds\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(scan.toJson()["witnesses"].size() == 1);
}

TEST_CASE("square has no tangencies off the corner lines") {
  auto vf = translation();
  std::vector<Vector> grid;
  for (double y : {-0.95, -0.5, 0.0, 0.3, 0.9}) grid.push_back(vec({-2.5, y}));
  const auto scan = tangencyScan(*vf, square(), grid, 10.0);
  CHECK(scan.witnesses.empty());
  for (double w : scan.worstAbsDgds) CHECK(w == doctest::Approx(1.0).epsilon(1e-6));

  // Outside the swept band: no crossings at all.
  const auto far = tangencyScan(*vf, square(), {vec({0, 2}), vec({0, -2.5})}, 10.0);
  CHECK(far.witnesses.empty());
  CHECK(std::isinf(far.worstAbsDgds[0]));
  CHECK(lineCrossings(*vf, vec({0, 2}), square(), 10.0).empty());
}

TEST_CASE("pullback boundary classification") {
  auto vf = translation();
  PullbackOptions opt;
  opt.samples = 1000;
  const auto r = pullbackBoundaryCheck(*vf, disk(), opt);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(r.payload["samples"] == 1000);
  CHECK(r.payload["mismatches"] == 0);
  // Boundary samples are actually exercised.
  CHECK(r.payload["boundary"] == r.payload["placedOnCrossings"]);
  CHECK(r.payload["boundary"].get<std::size_t>() >= 100);
  CHECK(r.payload["interior"].get<std::size_t>() > 0);
  CHECK(r.payload["exterior"].get<std::size_t>() > 0);

  const auto sq = pullbackBoundaryCheck(*vf, square(), opt);
  CHECK(sq.verdict == Verdict::Pass);
  CHECK(sq.payload["mismatches"] == 0);
  CHECK(sq.payload["boundary"] == sq.payload["placedOnCrossings"]);
  CHECK(sq.payload["boundary"].get<std::size_t>() >= 100);

  auto kr = pullbackBoundaryCheck(*vf, kruskal(), opt);
  CHECK(kr.verdict == Verdict::Pass);
  CHECK(kr.payload["mismatches"] == 0);
}

TEST_CASE("pullback is inconclusive when flows mostly leave the model") {
  // U equals the model domain: almost every sampled flow is undefined.
  auto vf = fixtures::field(fixtures::plane({"1 + x1^2 - x0^2"}), {"1", "0"});
  PullbackOptions opt;
  opt.samples = 50;
  const auto r = pullbackBoundaryCheck(*vf, kruskal(), opt);
  CHECK(r.verdict == Verdict::Inconclusive);
  CHECK(r.payload["mismatches"] == 0);
  CHECK(2 * r.payload["samples"].get<std::size_t>() < 50);
}

TEST_CASE("pullback on a non-constant field") {
  auto vf = fixtures::field(fixtures::plane({}, 2.0), {"1", "0.4*sin(x0)"});
  PullbackOptions opt;
  opt.samples = 1000;
  const auto r = pullbackBoundaryCheck(*vf, disk(), opt);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(r.payload["mismatches"] == 0);
  CHECK(r.payload["boundary"] == r.payload["placedOnCrossings"]);
  CHECK(r.payload["boundary"].get<std::size_t>() >= 100);
}

TEST_CASE("infinity tangency probe") {
  auto vf = translation();
  // Sigma_s is the unit circle shifted by -s e0, at distance |s| - 1 from the origin.
  const auto far = infinityTangencyProbe(*vf, disk(), vec({0, 0}), 5.0, 20.0);
  CHECK(far.verdict == InfinityVerdict::NoEvidence);
  CHECK(far.deltaLowerBound == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(std::abs(far.sAtMinimum) == doctest::Approx(5.0).epsilon(1e-6));

  const auto close = infinityTangencyProbe(*vf, disk(), vec({0, 0}), 0.5, 20.0);
  CHECK(close.verdict == InfinityVerdict::PossibleTangencyAtInfinity);
  CHECK(close.deltaLowerBound <= vf->tol().delta);
  CHECK(std::abs(close.sAtMinimum) == doctest::Approx(1.0).epsilon(1e-4));

  const auto whole = infinityTangencyProbe(*vf, DomainPredicate{}, vec({0, 0}), 0.5, 20.0);
  CHECK(whole.verdict == InfinityVerdict::NoEvidence);
  CHECK(std::isinf(whole.deltaLowerBound));
  CHECK(whole.toJson()["deltaLowerBound"] == "+inf");

  CHECK(kindOf([&] { (void)infinityTangencyProbe(*vf, disk(), vec({0, 0}), 5.0, 2.0); }) ==
        ErrorKind::ValidationError);
  CHECK(kindOf([&] { (void)infinityTangencyProbe(*vf, disk(), vec({0, 0}), 5.0, 1e6); }) ==
        ErrorKind::ValidationError);
}

TEST_CASE("endpoint functions on the disk") {
  auto vf = translation();
  std::vector<Vector> offsets;
  for (double y : {-0.5, -0.2, 0.0, 0.3, 0.5, 0.7}) offsets.push_back(vec({0, y}));
  const auto ef = endpointStability(*vf, disk(), vec({0, 0}), offsets);
  REQUIRE(ef.rows.size() == offsets.size());
  for (const auto& row : ef.rows) {
    const double y = row.offset[1];
    const double r = std::sqrt(1.0 - y * y);
    CHECK(row.phi1 == doctest::Approx(-r).epsilon(1e-6));
    CHECK(row.phi2 == doctest::Approx(r).epsilon(1e-6));
    CHECK(row.phi1 < row.phi2);
    CHECK(row.worstDisagreement < 0.05);
    // d phi2 / dy = -y / sqrt(1 - y^2); nothing depends on x0 beyond a shift: d phi / dx0 = -1.
    CHECK(row.fdHalf(1, 1) == doctest::Approx(-y / r).epsilon(1e-4));
    CHECK(row.fdHalf(0, 1) == doctest::Approx(y / r).epsilon(1e-4));
    CHECK(row.fdHalf(0, 0) == doctest::Approx(-1.0).epsilon(1e-6));
  }
  CHECK(std::abs(ef.rows[4].fdHalf(1, 1)) == doctest::Approx(0.5773502692).epsilon(1e-4));
  CHECK(ef.worstDisagreement < 0.05);
  const auto csv = ef.toCsv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("endpoint functions on the kruskal slab") {
  auto vf = translation();
  const auto ef = endpointStability(*vf, kruskal(), vec({0, 1}), {vec({0, 0}), vec({0, 0.5}), vec({0, -0.5})});
  CHECK(ef.rows[0].phi2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(ef.rows[0].fdHalf(1, 1) == doctest::Approx(0.70710678).epsilon(1e-5));
  CHECK(ef.rows[1].phi2 == doctest::Approx(std::sqrt(1.0 + 1.5 * 1.5)).epsilon(1e-6));
  CHECK(ef.rows[2].phi1 == doctest::Approx(-std::sqrt(1.25)).epsilon(1e-6));
  CHECK(ef.worstDisagreement < 0.05);
}

TEST_CASE("endpoint persistence failures") {
  auto vf = translation();
  // Near-tangent line: the interval disappears once the offset line leaves the disk.
  CHECK(kindOf([&] { (void)endpointStability(*vf, disk(), vec({0, 0.999}), {vec({0, 0}), vec({0, 0.002})}); }) ==
        ErrorKind::PersistenceViolation);
  // Tangent line: no bounded interval to start from.
  CHECK(kindOf([&] { (void)endpointStability(*vf, disk(), vec({0, 1}), {vec({0, 0})}); }) ==
        ErrorKind::HypothesisViolation);
  // Unbounded interval.
  CHECK(kindOf([&] { (void)endpointStability(*vf, fixtures::conj({"1 - x1^2"}), vec({0, 0}), {vec({0, 0})}); }) ==
        ErrorKind::HypothesisViolation);
  // Two components on an annulus line.
  CHECK(kindOf([&] {
          (void)endpointStability(*vf, fixtures::conj({"4 - x0^2 - x1^2", "x0^2 + x1^2 - 1"}), vec({0, 0}),
                                  {vec({0, 0})});
        }) == ErrorKind::HypothesisViolation);
}

TEST_CASE("property: parity and detector agreement") {
  struct Scene {
    std::shared_ptr<VectorFieldModel> vf;
    DomainPredicate u;
  };
  std::vector<Scene> scenes = {
      {translation(), disk()},
      {translation(), square()},
      {translation(), kruskal()},
      {fixtures::field(fixtures::plane({}, 2.0), {"1", "0.4*sin(x0)"}), disk()},
      {fixtures::field(fixtures::plane({}, 2.0), {"1", "0.4*sin(x0)"}),
       fixtures::domain({{"0.25 - (x0 - 1)^2 - x1^2"}, {"0.25 - (x0 + 1)^2 - x1^2"}}, 2)},
  };
  const double tolEvent = 1e-10;
  for (const auto& sc : scenes) {
    const auto pts = haltonPoints(sc.vf->manifold().samplingBox, 80, 17);
    for (const auto& x : pts) {
      const auto ev = lineCrossings(*sc.vf, x, sc.u, 8.0);
      const auto iv = intervalSet(*sc.vf, x, sc.u, 8.0);
      // Every Crossing endpoint of a component is a located event, and vice versa for flips.
      for (const auto& c : iv.components) {
        for (const Endpoint* e : {&c.lower, &c.upper}) {
          if (e->kind != EndpointKind::Crossing) continue;
          const bool found = std::any_of(ev.begin(), ev.end(), [&](const auto& v) {
            return std::abs(v.s - e->s) <= 10.0 * tolEvent;
          });
          CHECK(found);
        }
      }
      std::size_t flips = 0;
      for (const auto& e : ev) {
        if (!e.transverse) continue;
        ++flips;
        // Membership actually changes across a transverse event.
        const auto before = iv.componentContaining(e.s - 1e-6).has_value();
        const auto after = iv.componentContaining(e.s + 1e-6).has_value();
        CHECK(before != after);
        const bool isEndpoint = std::any_of(iv.components.begin(), iv.components.end(), [&](const auto& c) {
          return std::abs(c.lower.s - e.s) <= 10.0 * tolEvent || std::abs(c.upper.s - e.s) <= 10.0 * tolEvent;
        });
        CHECK(isEndpoint);
      }
      const bool startOut = !iv.components.empty() ? iv.components.front().lower.kind != EndpointKind::Horizon
                                                   : true;
      const bool endOut = !iv.components.empty() ? iv.components.back().upper.kind != EndpointKind::Horizon : true;
      if (startOut && endOut) CHECK(flips % 2 == 0);
    }
  }
}

TEST_CASE("property: endpoint derivative convergence on sampled centres") {
  auto vf = translation();
  for (double y : {-0.8, -0.3, 0.1, 0.6}) {
    for (double x0 : {-0.5, 0.4}) {
      const auto ef = endpointStability(*vf, disk(), vec({x0, y}), {vec({0, 0}), vec({0.1, 0.05}), vec({-0.1, -0.05})});
      CHECK(ef.worstDisagreement < 0.05);
      for (const auto& row : ef.rows) CHECK(row.phi1 < row.phi2);
    }
  }
}
