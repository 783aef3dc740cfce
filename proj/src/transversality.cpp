#include "orbitkit/transversality.hpp"

#include "orbitkit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace orbitkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double effectiveHorizon(const VectorFieldModel& vf, double h) { return h > 0.0 ? h : vf.tol().horizon; }

// Signed distance estimate to Fr(U): per term the smallest value/|grad| of its
// conjuncts, over terms the largest. Positive inside U.
double signedDepth(const DomainPredicate& u, const Vector& p) {
  const auto& conj = u.conjuncts();
  std::vector<double> d(conj.size(), -kInf);
  Vector g;
  for (std::size_t j = 0; j < conj.size(); ++j) {
    try {
      const double v = conj[j]->valueGradient(p, g);
      const double gn = g.norm();
      if (std::isfinite(v)) d[j] = gn > 0.0 ? v / gn : (v > 0 ? kInf : -kInf);
    } catch (const Error&) {
    }
  }
  double best = -kInf;
  for (const auto& term : u.terms()) {
    double t = kInf;
    for (auto j : term) t = std::min(t, d[j]);
    best = std::max(best, t);
  }
  return best;
}

// Columns d F(s, X) / d X_k by central differences of whole trajectories.
struct SideTrajectories {
  std::vector<Trajectory> plus, minus;
  double h;

  SideTrajectories(const VectorFieldModel& vf, const Vector& x, double reach, double step) : h(step) {
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      Vector e = Vector::Zero(x.size());
      e[k] = step;
      plus.emplace_back(vf, x + e);
      minus.emplace_back(vf, x - e);
      plus.back().extend(reach, reach);
      minus.back().extend(reach, reach);
    }
  }

  [[nodiscard]] std::optional<Matrix> jacobian(const VectorFieldModel& vf, double s) const {
    const auto n = static_cast<Eigen::Index>(plus.size());
    Matrix j(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& a = plus[static_cast<std::size_t>(k)];
      const auto& b = minus[static_cast<std::size_t>(k)];
      if (s > a.sMax() || s < a.sMin() || s > b.sMax() || s < b.sMin()) return std::nullopt;
      j.col(k) = vf.difference(a.exactAt(s), b.exactAt(s)) / (2.0 * h);
    }
    return j;
  }
};

std::string csvNumber(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csvVector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + csvNumber(v[i]);
  return out;
}

std::string csvHeader(const std::string& prefix, Eigen::Index n) {
  std::string out;
  for (Eigen::Index i = 0; i < n; ++i) out += (i ? "," : "") + prefix + std::to_string(i);
  return out;
}

}  // namespace

std::string_view nameOf(PointClass c) {
  switch (c) {
    case PointClass::Interior: return "Interior";
    case PointClass::Boundary: return "Boundary";
    case PointClass::Exterior: return "Exterior";
  }
  return "?";
}

std::string_view nameOf(InfinityVerdict v) {
  return v == InfinityVerdict::NoEvidence ? "NoEvidence" : "PossibleTangencyAtInfinity";
}

// ---------------------------------------------------------------- crossings

std::vector<CrossingEvent> lineCrossings(const VectorFieldModel& vf, const Vector& x, const DomainPredicate& u,
                                         double horizon) {
  const auto iv = intervalSet(vf, x, u, horizon);
  std::vector<CrossingEvent> out = iv.events;
  // Ends at a model-domain exit that lie on Fr(U) are crossings too.
  const double tolEvent = vf.tol().event;
  for (const auto& c : iv.components) {
    for (const Endpoint* e : {&c.lower, &c.upper}) {
      if (e->kind != EndpointKind::Crossing) continue;
      const bool known = std::any_of(out.begin(), out.end(), [&](const CrossingEvent& ev) {
        return std::abs(ev.s - e->s) <= 10.0 * tolEvent;
      });
      if (known) continue;
      CrossingEvent ev;
      ev.s = e->s;
      ev.boundaryConjunct = e->conjunct.value_or(0);
      ev.dgds = e->dgds;
      ev.transverse = std::abs(ev.dgds) > vf.tol().tangent;
      ev.flip = true;
      ev.point = flow(vf, x, e->s).point.coords;
      out.push_back(ev);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.s < b.s; });
  return out;
}

Json TangencyScan::toJson() const {
  Json pts = Json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    pts.push_back({{"point", jsonVector(grid[i])}, {"inSSigma", static_cast<bool>(inSSigma[i])},
                   {"worstAbsDgds", jsonNumber(worstAbsDgds[i])}});
  }
  Json w = Json::array();
  for (const auto& [p, ev] : witnesses) {
    w.push_back({{"point", jsonVector(p)}, {"s", ev.s}, {"dgds", ev.dgds}, {"conjunct", ev.boundaryConjunct}});
  }
  return {{"grid", pts}, {"witnesses", w}};
}

std::string TangencyScan::toCsv() const {
  const Eigen::Index n = grid.empty() ? 0 : grid.front().size();
  std::string out = csvHeader("x", n) + ",inSSigma,worstAbsDgds\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out += csvVector(grid[i]) + "," + (inSSigma[i] ? "1" : "0") + "," + csvNumber(worstAbsDgds[i]) + "\n";
  }
  return out;
}

TangencyScan tangencyScan(const VectorFieldModel& vf, const DomainPredicate& u, const std::vector<Vector>& grid,
                          double horizon) {
  const double h = effectiveHorizon(vf, horizon);
  TangencyScan out;
  out.grid = grid;
  for (const auto& p : grid) {
    bool tangent = false;
    double worst = kInf;
    for (const auto& ev : lineCrossings(vf, p, u, h)) {
      worst = std::min(worst, std::abs(ev.dgds));
      if (!ev.transverse) {
        tangent = true;
        out.witnesses.emplace_back(p, ev);
      }
    }
    out.inSSigma.push_back(tangent);
    out.worstAbsDgds.push_back(worst);
  }
  return out;
}

// ---------------------------------------------------------------- pullback

Report pullbackBoundaryCheck(const VectorFieldModel& vf, const DomainPredicate& u, const PullbackOptions& options) {
  const ManifoldModel& m = vf.manifold();
  const Tolerances& tol = vf.tol();
  const double eps = 10.0 * tol.event;
  Report r;
  r.check = "pullbackBoundary";
  r.stamps = {{"epsilon", eps}, {"sSpan", options.sSpan}, {"tol_event", tol.event}};

  const auto n = static_cast<Eigen::Index>(m.dim);
  const Halton seq(m.dim + 1, m.seed + 301);
  const auto nBoundary = static_cast<std::size_t>(options.boundaryShare * static_cast<double>(options.samples));
  std::size_t done = 0, skipped = 0, mismatches = 0, onCrossing = 0;
  std::size_t counts[3] = {0, 0, 0};
  auto inModel = [&](const Vector& p) { return m.domain().contains(p); };

  for (std::uint64_t idx = 0; done < options.samples && idx < 20 * options.samples; ++idx) {
    const Vector unit = seq.unit(idx);
    const Vector x = vf.wrap(m.samplingBox.at(unit.head(n)));
    if (!inModel(x)) continue;
    double s = options.sSpan * (2.0 * unit[n] - 1.0);
    bool placed = false;
    if (done < nBoundary) {
      // Put the sample on a located crossing of its line when there is one.
      const auto events = lineCrossings(vf, x, u, options.sSpan);
      if (!events.empty()) {
        s = events[idx % events.size()].s;
        placed = true;
      }
    }
    Trajectory path(vf, x);
    path.extend(std::abs(s) + 2.0 * eps, std::abs(s) + 2.0 * eps);
    if (s + eps > path.sMax() || s - eps < path.sMin()) {
      ++skipped;
      continue;
    }
    const SideTrajectories side(vf, x, std::abs(s) + 1e-3, 1e-6);
    const auto jac = side.jacobian(vf, s);
    if (!jac) {
      ++skipped;
      continue;
    }
    const Vector p = vf.wrap(path.exactAt(s));
    // U side: F(s, X) against Fr(U), band half the s-perturbation displacement.
    const double band = 0.5 * eps * std::max(vf(p).norm(), 1e-300);
    const double depth = signedDepth(u, p);
    const PointClass uSide = depth > band ? PointClass::Interior : depth < -band ? PointClass::Exterior : PointClass::Boundary;

    // Pullback side: flip test on perturbations of (s, X).
    std::vector<Vector> probes = {vf.wrap(path.exactAt(s + eps)), vf.wrap(path.exactAt(s - eps))};
    for (Eigen::Index k = 0; k < n; ++k) {
      probes.push_back(vf.wrap(p + eps * jac->col(k)));
      probes.push_back(vf.wrap(p - eps * jac->col(k)));
    }
    std::size_t in = 0;
    for (const auto& q : probes) in += (inModel(q) && u.contains(q)) ? 1 : 0;
    const PointClass dSide =
        in == probes.size() ? PointClass::Interior : in == 0 ? PointClass::Exterior : PointClass::Boundary;

    ++done;
    onCrossing += placed ? 1 : 0;
    ++counts[static_cast<int>(dSide)];
    if (uSide != dSide) {
      ++mismatches;
      r.fail("classifications disagree", {{"s", s},
                                          {"x", jsonVector(x)},
                                          {"image", jsonVector(p)},
                                          {"imageClass", nameOf(uSide)},
                                          {"pullbackClass", nameOf(dSide)},
                                          {"depth", depth}});
    }
  }
  if (2 * done < options.samples && r.verdict == Verdict::Pass) {
    // Mostly flows leaving the model domain: too little evidence either way.
    r.verdict = Verdict::Inconclusive;
    r.notes.push_back("only " + std::to_string(done) + " of " + std::to_string(options.samples) +
                      " samples had a defined flow");
  }
  r.payload = {{"samples", done},
               {"placedOnCrossings", onCrossing},
               {"skipped", skipped},
               {"mismatches", mismatches},
               {"interior", counts[0]},
               {"boundary", counts[1]},
               {"exterior", counts[2]}};
  return r;
}

// ---------------------------------------------------------------- tangency at infinity

Json InfinityTangencyEvidence::toJson() const {
  return {{"R", horizonR},
          {"Rmax", rMax},
          {"deltaLowerBound", jsonNumber(deltaLowerBound)},
          {"sAtMinimum", std::isfinite(sAtMinimum) ? Json(sAtMinimum) : Json(nullptr)},
          {"sSamples", sSamples},
          {"verdict", nameOf(verdict)}};
}

InfinityTangencyEvidence infinityTangencyProbe(const VectorFieldModel& vf, const DomainPredicate& u, const Vector& x,
                                               double r, double rMax, std::size_t sSamples) {
  if (!(r >= 0.0) || !(rMax > r)) throw Error(ErrorKind::ValidationError, "need 0 <= R < Rmax");
  if (rMax > vf.tol().horizon) throw Error(ErrorKind::ValidationError, "Rmax exceeds the horizon S_max");
  InfinityTangencyEvidence out;
  out.horizonR = r;
  out.rMax = rMax;
  const auto& conj = u.conjuncts();
  if (conj.empty()) return out;

  Trajectory path(vf, x);
  path.extend(rMax, rMax);
  const SideTrajectories side(vf, x, rMax, 1e-6);

  // First-order distance from X to {Y : g_j(F(s, Y)) = 0}: |g| / |DF^T grad g|.
  auto estimate = [&](double s) {
    if (s > path.sMax() || s < path.sMin()) return kInf;
    const auto jac = side.jacobian(vf, s);
    if (!jac) return kInf;
    const Vector p = vf.wrap(path.exactAt(s));
    double best = kInf;
    Vector g;
    for (const auto& c : conj) {
      try {
        const double v = c->valueGradient(p, g);
        const double gn = (jac->transpose() * g).norm();
        if (std::isfinite(v)) best = std::min(best, gn > 0.0 ? std::abs(v) / gn : (v == 0.0 ? 0.0 : kInf));
      } catch (const Error&) {
      }
    }
    return best;
  };

  // Newton projection of X onto the slice level set of conjunct j.
  auto project = [&](double s, std::size_t j) {
    Vector y = x;
    for (int it = 0; it < 30; ++it) {
      Trajectory t(vf, y);
      t.extend(std::abs(s) + 1e-3, std::abs(s) + 1e-3);
      const SideTrajectories sd(vf, y, std::abs(s) + 1e-3, 1e-6);
      const auto jac = sd.jacobian(vf, s);
      if (s > t.sMax() || s < t.sMin() || !jac) return kInf;
      Vector g;
      double v = 0.0;
      try {
        v = conj[j]->valueGradient(vf.wrap(t.exactAt(s)), g);
      } catch (const Error&) {
        return kInf;
      }
      const Vector grad = jac->transpose() * g;
      const double gn2 = grad.squaredNorm();
      if (!(gn2 > 0.0) || !std::isfinite(v)) return kInf;
      const Vector step = v / gn2 * grad;
      y -= step;
      if (step.norm() <= 1e-13 * std::max(1.0, y.norm())) break;
    }
    return vf.distance(y, x);
  };

  std::vector<double> grid;
  const std::size_t half = std::max<std::size_t>(sSamples / 2, 2);
  for (std::size_t i = 0; i < half; ++i) {
    const double s = r + (rMax - r) * static_cast<double>(i) / static_cast<double>(half - 1);
    grid.push_back(-s);
    grid.push_back(s);
  }
  std::sort(grid.begin(), grid.end());
  out.sSamples = grid.size();
  std::vector<double> est(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) est[i] = estimate(grid[i]);

  // Distance to the slice: Newton projection where it converges, first-order value otherwise.
  auto distance = [&](double s) {
    const double first = estimate(s);
    if (!std::isfinite(first)) return first;
    double d = kInf;
    for (std::size_t j = 0; j < conj.size(); ++j) d = std::min(d, project(s, j));
    return std::isfinite(d) ? d : first;
  };

  std::vector<std::size_t> order(grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return est[a] < est[b]; });
  double best = kInf;
  double bestS = std::numeric_limits<double>::quiet_NaN();
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (std::size_t k = 0; k < std::min<std::size_t>(3, order.size()); ++k) {
    const std::size_t i0 = order[k];
    if (!std::isfinite(est[i0])) break;
    // Golden section between the neighbouring samples, kept on the same side of s = 0.
    double lo = i0 > 0 ? grid[i0 - 1] : grid[i0];
    double hi = i0 + 1 < grid.size() ? grid[i0 + 1] : grid[i0];
    if (grid[i0] > 0) lo = std::max(lo, r);
    if (grid[i0] < 0) hi = std::min(hi, -r);
    double a = lo, b = hi;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = distance(c), fd = distance(d);
    for (int it = 0; it < 60 && b - a > 1e-10; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = distance(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = distance(d);
      }
    }
    for (double sc : {grid[i0], lo, hi, 0.5 * (a + b)}) {
      const double v = distance(sc);
      if (v < best) {
        best = v;
        bestS = sc;
      }
    }
  }
  out.deltaLowerBound = best;
  out.sAtMinimum = bestS;
  out.verdict = best > vf.tol().delta ? InfinityVerdict::NoEvidence : InfinityVerdict::PossibleTangencyAtInfinity;
  return out;
}

// ---------------------------------------------------------------- endpoint functions

Json EndpointFunctions::toJson() const {
  Json rowsJson = Json::array();
  for (const auto& row : rows) {
    rowsJson.push_back({{"offset", jsonVector(row.offset)},
                        {"phi1", row.phi1},
                        {"phi2", row.phi2},
                        {"gradPhi1", jsonVector(row.fdHalf.row(0).transpose())},
                        {"gradPhi2", jsonVector(row.fdHalf.row(1).transpose())},
                        {"gradPhi1StepH", jsonVector(row.fdH.row(0).transpose())},
                        {"gradPhi2StepH", jsonVector(row.fdH.row(1).transpose())},
                        {"disagreement", row.worstDisagreement}});
  }
  return {{"center", jsonVector(center.coords)}, {"h", h}, {"rows", rowsJson}, {"worstDisagreement", worstDisagreement}};
}

std::string EndpointFunctions::toCsv() const {
  const Eigen::Index n = center.coords.size();
  std::string out = csvHeader("offset", n) + ",phi1,phi2," + csvHeader("dphi1_h_", n) + "," +
                    csvHeader("dphi2_h_", n) + "," + csvHeader("dphi1_half_", n) + "," + csvHeader("dphi2_half_", n) +
                    ",disagreement\n";
  for (const auto& r : rows) {
    out += csvVector(r.offset) + "," + csvNumber(r.phi1) + "," + csvNumber(r.phi2) + "," +
           csvVector(r.fdH.row(0).transpose()) + "," + csvVector(r.fdH.row(1).transpose()) + "," +
           csvVector(r.fdHalf.row(0).transpose()) + "," + csvVector(r.fdHalf.row(1).transpose()) + "," +
           csvNumber(r.worstDisagreement) + "\n";
  }
  return out;
}

EndpointFunctions endpointStability(const VectorFieldModel& vf, const DomainPredicate& u, const Vector& x,
                                    const std::vector<Vector>& offsets, double h, double horizon) {
  const Tolerances& tol = vf.tol();
  const double hz = effectiveHorizon(vf, horizon);
  const auto base = intervalSet(vf, x, u, hz);
  if (base.components.size() != 1 || !base.components[0].bounded() ||
      !(std::abs(base.components[0].lower.dgds) > tol.tangent) ||
      !(std::abs(base.components[0].upper.dgds) > tol.tangent)) {
    throw Error(ErrorKind::HypothesisViolation,
                "the line of X must meet U in one bounded interval with transverse ends");
  }
  auto ends = [&](const Vector& y, const Vector& offset) {
    const auto iv = intervalSet(vf, y, u, hz);
    if (iv.components.size() != 1 || !iv.components[0].bounded()) {
      std::string off;
      for (Eigen::Index k = 0; k < offset.size(); ++k) off += (k ? ", " : "") + std::to_string(offset[k]);
      throw Error(ErrorKind::PersistenceViolation, "interval does not persist at offset (" + off + "): " +
                                                       std::to_string(iv.components.size()) + " components");
    }
    return std::pair{iv.components[0].lower.s, iv.components[0].upper.s};
  };

  EndpointFunctions out;
  out.center = {vf.manifold().reference.id, x};
  out.h = h;
  const auto n = x.size();
  for (const auto& off : offsets) {
    EndpointRow row;
    row.offset = off;
    const Vector y = x + off;
    std::tie(row.phi1, row.phi2) = ends(y, off);
    row.fdH.resize(2, n);
    row.fdHalf.resize(2, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      for (int pass = 0; pass < 2; ++pass) {
        const double step = pass == 0 ? h : 0.5 * h;
        Vector e = Vector::Zero(n);
        e[k] = step;
        const auto [a1, a2] = ends(y + e, off + e);
        const auto [b1, b2] = ends(y - e, off - e);
        Matrix& fd = pass == 0 ? row.fdH : row.fdHalf;
        fd(0, k) = (a1 - b1) / (2.0 * step);
        fd(1, k) = (a2 - b2) / (2.0 * step);
      }
    }
    row.worstDisagreement = ((row.fdH - row.fdHalf).array().abs() / (1.0 + row.fdHalf.array().abs())).maxCoeff();
    out.worstDisagreement = std::max(out.worstDisagreement, row.worstDisagreement);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace orbitkit
