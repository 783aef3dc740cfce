#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include "orbitkit/sampling.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace orbitkit;
using fixtures::vec;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("constant field flow is a translation") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  const auto r = flow(*vf, vec({0.25, 0.5}), 0.5);
  CHECK(r.status == FlowStatus::Interior);
  CHECK(r.sAchieved == 0.5);
  CHECK(r.point.coords[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(r.point.coords[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero parameter leaves the point unchanged") {
  auto vf = fixtures::field(fixtures::plane(), {"-x1", "x0"});
  const auto r = flow(*vf, vec({0.3, -0.2}), 0.0);
  CHECK(r.point.coords == vec({0.3, -0.2}));
  CHECK(r.status == FlowStatus::Interior);
}

TEST_CASE("rotation field quarter turn") {
  auto vf = fixtures::field(fixtures::plane(), {"-x1", "x0"});
  const auto r = flow(*vf, vec({1, 0}), kPi / 2);
  CHECK(std::abs(r.point.coords[0]) < 1e-8);
  CHECK(std::abs(r.point.coords[1] - 1.0) < 1e-8);
}

TEST_CASE("warp field flow against fixed-step RK4") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "-0.2*cos(x0)"});
  auto f = [](double x, double) { return std::pair{1.0, -0.2 * std::cos(x)}; };
  for (double s : {0.5, 1.0, 2.5, -1.75}) {
    const auto [ox, oy] = oracles::rk4(f, 0.1, 0.3, s, 20000);
    const auto r = flow(*vf, vec({0.1, 0.3}), s);
    CHECK(std::abs(r.point.coords[0] - ox) < 1e-9);
    CHECK(std::abs(r.point.coords[1] - oy) < 1e-9);
  }
}

TEST_CASE("group law examples") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  auto r = groupLawCheck(*vf, vec({0, 0}), 0.3, 0.4);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(r.payload["direct"][0].get<double>() == doctest::Approx(0.7));
  CHECK(groupLawCheck(*vf, vec({0, 0}), 0.5, 0.0).verdict == Verdict::Pass);
  auto warp = fixtures::field(fixtures::plane(), {"1", "-0.2*cos(x0)"});
  auto back = groupLawCheck(*warp, vec({0, 0}), 1.0, -1.0);
  CHECK(back.verdict == Verdict::Pass);
  CHECK(back.payload["error"].get<double>() < 1e-6);
}

TEST_CASE("interval set on a square, closed-form endpoints") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  const auto u = fixtures::conj({"x0 + 1", "1 - x0", "x1 + 1", "1 - x1"});
  const auto iv = intervalSet(*vf, vec({0, 0}), u, 10.0);
  // Oracle: dense sampling of the exact line x0 = s.
  const auto roots = oracles::rootsBySampling([](double s) { return 1 - std::abs(s); }, -10, 10);
  REQUIRE(roots.size() == 2);
  REQUIRE(iv.components.size() == 1);
  CHECK(iv.components[0].lower.s == doctest::Approx(roots[0]).epsilon(1e-10));
  CHECK(iv.components[0].upper.s == doctest::Approx(roots[1]).epsilon(1e-10));
  CHECK(iv.components[0].lower.kind == EndpointKind::Crossing);
  CHECK(iv.components[0].upper.kind == EndpointKind::Crossing);
  CHECK(iv.components[0].lower.dgds == doctest::Approx(-1.0));
  CHECK(iv.components[0].upper.dgds == doctest::Approx(1.0));
}

TEST_CASE("interval set on a union of slabs") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  const auto u = fixtures::domain({{"x0 + 2", "-1 - x0", "x1 + 1", "1 - x1"}, {"x0 - 1", "2 - x0", "x1 + 1", "1 - x1"}}, 2);
  const auto iv = intervalSet(*vf, vec({1.5, 0}), u, 10.0);
  REQUIRE(iv.components.size() == 2);
  CHECK(iv.components[0].lower.s == doctest::Approx(-3.5).epsilon(1e-10));
  CHECK(iv.components[0].upper.s == doctest::Approx(-2.5).epsilon(1e-10));
  CHECK(iv.components[1].lower.s == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(iv.components[1].upper.s == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("rotation field half plane, truncated at the horizon") {
  auto vf = fixtures::field(fixtures::plane(), {"-x1", "x0"});
  const auto iv = intervalSet(*vf, vec({1, 0}), fixtures::conj({"x0"}), 10.0);
  // cos s > 0 on (-pi/2 + 2 pi k, pi/2 + 2 pi k), cut to [-10, 10].
  std::vector<std::pair<double, double>> expect;
  for (int k = -2; k <= 2; ++k) {
    const double a = std::max(-10.0, -kPi / 2 + 2 * kPi * k);
    const double b = std::min(10.0, kPi / 2 + 2 * kPi * k);
    if (a < b) expect.emplace_back(a, b);
  }
  REQUIRE(iv.components.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CHECK(std::abs(iv.components[i].lower.s - expect[i].first) < 1e-8);
    CHECK(std::abs(iv.components[i].upper.s - expect[i].second) < 1e-8);
  }
  // No component reaches +-10 (the nearest cut would be at 11.0), so all ends are crossings.
  for (const auto& c : iv.components) CHECK(c.bounded());
  const auto cut = intervalSet(*vf, vec({1, 0}), fixtures::conj({"x0"}), 5.0);
  CHECK(cut.components.back().upper.kind == EndpointKind::Horizon);
  CHECK(cut.components.back().upper.s == doctest::Approx(5.0));
  CHECK(cut.components.back().lower.s == doctest::Approx(1.5 * kPi));
}

TEST_CASE("disk crossings and tangent line") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  const auto disk = fixtures::conj({"1 - x0^2 - x1^2"});
  const auto iv = intervalSet(*vf, vec({0, 0}), disk, 10.0);
  REQUIRE(iv.events.size() == 2);
  CHECK(iv.events[0].s == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(iv.events[0].dgds == doctest::Approx(-2.0).epsilon(1e-8));
  CHECK(iv.events[1].dgds == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(iv.events[0].transverse);

  const auto tangent = intervalSet(*vf, vec({0, 1}), disk, 10.0);
  CHECK(tangent.components.empty());
  REQUIRE(tangent.events.size() == 1);
  CHECK(std::abs(tangent.events[0].s) < 1e-9);
  CHECK(std::abs(tangent.events[0].dgds) < 1e-7);
  CHECK_FALSE(tangent.events[0].transverse);
}

TEST_CASE("model-domain exit truncates trajectories") {
  auto m = fixtures::plane({"1 + x1^2 - x0^2"});
  auto vf = fixtures::field(m, {"1", "0"});
  const auto r = flow(*vf, vec({0, 1}), 3.0);
  CHECK(r.status == FlowStatus::ExitedModelDomain);
  CHECK(r.sAchieved == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  const auto o = orbitPolyline(*vf, vec({0, 1}), 5.0, 50);
  CHECK(o.forwardStatus == FlowStatus::ExitedModelDomain);
  CHECK(o.samples.back().first == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(o.samples.front().first == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-10));
  CHECK_FALSE(o.periodic);
  // U equal to the model domain: endpoints are crossings of the same conjunct.
  const auto iv = intervalSet(*vf, vec({0, 1}), fixtures::conj({"1 + x1^2 - x0^2"}), 10.0);
  REQUIRE(iv.components.size() == 1);
  CHECK(iv.components[0].lower.kind == EndpointKind::Crossing);
  CHECK(iv.components[0].upper.s == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(iv.events.size() == 2);
}

TEST_CASE("touching the puncture ends the orbit") {
  auto vf = fixtures::field(fixtures::plane({"x0^2 + x1^2"}), {"1", "0"});
  const auto r = flow(*vf, vec({-1, 0}), 2.0);
  CHECK(r.status == FlowStatus::ExitedModelDomain);
  CHECK(r.sAchieved == doctest::Approx(1.0).epsilon(1e-9));
  const auto pass = flow(*vf, vec({-1, 1e-3}), 2.0);
  CHECK(pass.status == FlowStatus::Interior);
}

TEST_CASE("periodicity of the rotation field") {
  auto vf = fixtures::field(fixtures::plane(), {"-x1", "x0"});
  const auto o = orbitPolyline(*vf, vec({1, 0}), 10.0, 200);
  REQUIRE(o.periodic);
  CHECK(std::abs(*o.period - 2 * kPi) < 1e-6);
  auto c = fixtures::field(fixtures::plane(), {"1", "0"});
  const auto line = orbitPolyline(*c, vec({0, 0}), 5.0, 20);
  CHECK_FALSE(line.periodic);
  CHECK(line.samples.front().second[0] == doctest::Approx(-5.0));
  CHECK(line.samples.back().second[0] == doctest::Approx(5.0));
  CHECK(line.samples.size() <= 20);
}

TEST_CASE("property: group law, reversibility and interval translation") {
  struct Scene {
    std::vector<std::string> field;
    std::vector<std::string> model;
  };
  const std::vector<Scene> scenes = {
      {{"1", "0"}, {}},
      {{"1", "-0.2*cos(x0)"}, {}},
      {{"-x1", "x0"}, {"x0^2 + x1^2"}},
      {{"1", "0"}, {"1 + x1^2 - x0^2"}},
  };
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> pos(-1.0, 1.0), par(-2.0, 2.0);
  for (const auto& sc : scenes) {
    auto vf = fixtures::field(fixtures::plane(sc.model), sc.field);
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
      const Vector x = vec({pos(rng), pos(rng)});
      const double s = par(rng), t = par(rng);
      if (!vf->manifold().domain().contains(x)) continue;
      const auto r = groupLawCheck(*vf, x, s, t);
      if (r.verdict == Verdict::Inconclusive) continue;
      ++checked;
      CHECK(r.verdict == Verdict::Pass);
      const auto there = flow(*vf, x, s);
      if (there.status != FlowStatus::Interior) continue;
      const auto back = flow(*vf, there.point.coords, -s);
      CHECK(maxNorm(back.point.coords - x) < 10 * vf->tol().position);
    }
    CHECK(checked > 30);
  }

  auto vf = fixtures::field(fixtures::plane(), {"1", "-0.2*cos(x0)"});
  const auto u = fixtures::conj({"1 - x0^2 - x1^2"});
  const Vector x = vec({-2, 0.1});
  const auto ix = intervalSet(*vf, x, u, 20.0);
  for (double s : {0.7, 1.9, 2.6}) {
    const auto y = flow(*vf, x, s);
    const auto iy = intervalSet(*vf, y.point.coords, u, 20.0);
    REQUIRE(iy.components.size() == ix.components.size());
    for (std::size_t k = 0; k < ix.components.size(); ++k) {
      CHECK(std::abs(iy.components[k].lower.s - (ix.components[k].lower.s - s)) < 2 * vf->tol().event);
      CHECK(std::abs(iy.components[k].upper.s - (ix.components[k].upper.s - s)) < 2 * vf->tol().event);
    }
  }
}

TEST_CASE("crossing completeness on line-disk intersections") {
  auto vf = fixtures::field(fixtures::plane(), {"1", "0"});
  const auto disk = fixtures::conj({"1 - x0^2 - x1^2"});
  for (double y : {-1.2, -0.9, -0.5, 0.0, 0.3, 0.99, 1.5}) {
    const auto iv = intervalSet(*vf, vec({-2, y}), disk, 10.0);
    const auto roots = oracles::rootsBySampling([&](double s) { return 1 - (s - 2) * (s - 2) - y * y; }, -10, 10);
    std::size_t flips = 0;
    for (const auto& e : iv.events) flips += e.flip ? 1 : 0;
    CHECK(flips == roots.size());
    for (std::size_t k = 0; k < std::min(flips, roots.size()); ++k) {
      CHECK(std::abs(iv.events[k].s - roots[k]) < 1e-9);
    }
  }
}
