#include "orbitkit/flow.hpp"

#include "orbitkit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace orbitkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Stages {
  std::array<Vector, 7> k;
  Vector y1;
};

// Throws Error(NonFinite) when the field cannot be evaluated along the step.
Stages stages(const VectorFieldModel& vf, const Vector& y, const Vector& k1, double h) {
  Stages st;
  auto& k = st.k;
  k[0] = k1;
  k[1] = vf(y + h * (a21 * k[0]));
  k[2] = vf(y + h * (a31 * k[0] + a32 * k[1]));
  k[3] = vf(y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]));
  k[4] = vf(y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]));
  k[5] = vf(y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]));
  st.y1 = y + h * (a71 * k[0] + a73 * k[2] + a74 * k[3] + a75 * k[4] + a76 * k[5]);
  if (!st.y1.allFinite()) throw Error(ErrorKind::NonFinite, "non-finite step result");
  k[6] = vf(st.y1);
  return st;
}

bool positive(double v) { return v > 0.0; }

}  // namespace

// ---------------------------------------------------------------- field

VectorFieldModel::VectorFieldModel(std::shared_ptr<const ManifoldModel> manifold,
                                   const std::vector<std::string>& components)
    : manifold_(std::move(manifold)), text_(components) {
  const std::size_t n = manifold_->dim;
  if (components.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "field has " + std::to_string(components.size()) +
                                                  " components, manifold dimension is " + std::to_string(n));
  }
  const auto names = coordinateNames(n);
  for (const auto& c : components) components_.emplace_back(parse(c), names);
  periods_ = Vector::Zero(static_cast<Eigen::Index>(n));
}

Vector VectorFieldModel::operator()(const Vector& x) const {
  Vector v(x.size());
  const std::span<const double> in(x.data(), static_cast<std::size_t>(x.size()));
  for (std::size_t i = 0; i < components_.size(); ++i) v[static_cast<Eigen::Index>(i)] = components_[i](in);
  if (speedLimiter_) v /= 1.0 + v.squaredNorm();
  return v;
}

Vector VectorFieldModel::inChart(const ChartSpec& chart, const Vector& x) const {
  return chart.forward->jacobian(x) * (*this)(x);
}

void VectorFieldModel::setPeriods(Vector periods) {
  if (periods.size() != periods_.size()) throw Error(ErrorKind::DimensionMismatch, "period vector has wrong length");
  periods_ = std::move(periods);
  periodic_ = (periods_.array() > 0.0).any();
}

Vector VectorFieldModel::wrap(const Vector& x) const {
  if (!periodic_) return x;
  Vector y = x;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double p = periods_[i];
    if (p > 0.0) y[i] -= p * std::floor(y[i] / p);
  }
  return y;
}

Vector VectorFieldModel::difference(const Vector& a, const Vector& b) const {
  Vector d = a - b;
  if (!periodic_) return d;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double p = periods_[i];
    if (p > 0.0) d[i] -= p * std::round(d[i] / p);
  }
  return d;
}

double VectorFieldModel::distance(const Vector& a, const Vector& b) const {
  return difference(a, b).norm();
}

void VectorFieldModel::declareChartComponents(const std::string& chartId,
                                              const std::vector<std::string>& components) {
  if (components.size() != dim()) throw Error(ErrorKind::DimensionMismatch, "chart field has wrong length");
  std::vector<Expr> parsed;
  for (const auto& c : components) parsed.push_back(parse(c));
  declared_[chartId] = std::move(parsed);
}

Report checkFieldConsistency(const VectorFieldModel& vf, std::size_t samples, bool nonVanishing) {
  const ManifoldModel& m = vf.manifold();
  Report r;
  r.check = "fieldConsistency";
  r.stamps = {{"tol_field", m.tol.field}, {"tol_sing", m.tol.singular}, {"samples", samples}};
  Json charts = Json::array();
  std::size_t idx = 0;
  for (const auto& [id, comps] : vf.declaredChartComponents()) {
    ++idx;
    const ChartSpec& chart = m.chart(id);
    const ExprMap declared(comps, vf.dim());
    auto inside = [&](const Vector& x) { return m.domain().contains(x) && chart.domain.contains(x); };
    double worst = 0.0;
    for (const auto& x : samplePoints(m.samplingBox, samples, m.seed + 7 * idx, inside)) {
      try {
        const Vector pushed = vf.inChart(chart, vf.wrap(x));
        const Vector given = declared.apply(chart.forward->apply(x));
        const double err = maxNorm(pushed - given) / (1.0 + maxNorm(pushed));
        worst = std::max(worst, err);
        if (!(err < m.tol.field)) r.fail("declared components disagree with the pushforward",
                                         {{"chart", id}, {"point", jsonVector(x)}, {"error", err}});
      } catch (const Error& e) {
        r.fail("field evaluation failed", {{"chart", id}, {"point", jsonVector(x)}, {"error", e.what()}});
      }
    }
    charts.push_back({{"chart", id}, {"worstRelativeError", worst}});
  }
  double minSpeed = std::numeric_limits<double>::infinity();
  if (nonVanishing) {
    auto inside = [&](const Vector& x) { return m.domain().contains(x); };
    for (const auto& x : samplePoints(m.samplingBox, samples, m.seed + 5, inside)) {
      const double speed = vf(vf.wrap(x)).norm();
      minSpeed = std::min(minSpeed, speed);
      if (!(speed > m.tol.singular)) r.fail("field vanishes", {{"point", jsonVector(x)}, {"speed", speed}});
    }
  }
  r.payload = {{"charts", charts}, {"minSpeed", jsonNumber(minSpeed)}};
  return r;
}

std::string_view nameOf(FlowStatus s) {
  switch (s) {
    case FlowStatus::Interior: return "Interior";
    case FlowStatus::ExitedModelDomain: return "ExitedModelDomain";
    case FlowStatus::HorizonReached: return "HorizonReached";
    case FlowStatus::StepFailure: return "StepFailure";
  }
  return "StepFailure";
}

std::string_view nameOf(EndpointKind k) {
  switch (k) {
    case EndpointKind::Crossing: return "Crossing";
    case EndpointKind::Horizon: return "Horizon";
    case EndpointKind::ModelBoundary: return "ModelBoundary";
  }
  return "Horizon";
}

// ---------------------------------------------------------------- integration

Vector DenseStep::at(double s) const {
  const double theta = (s - s0) / h;
  const double t1 = 1.0 - theta;
  return r[0] + theta * (r[1] + t1 * (r[2] + theta * (r[3] + t1 * r[4])));
}

Vector rkStep(const VectorFieldModel& vf, const Vector& y, double h) {
  if (h == 0.0) return y;
  return stages(vf, y, vf(y), h).y1;
}

Trajectory::Trajectory(const VectorFieldModel& vf, Vector seed) : vf_(&vf), seed_(std::move(seed)) {
  requireCoordinates(seed_, vf.dim());
  if (!vf.manifold().domain().contains(vf.wrap(seed_))) {
    throw Error(ErrorKind::DomainViolation, "seed lies outside the model domain");
  }
}

void Trajectory::extend(double sBackward, double sForward, bool stopAtModelExit) {
  if (sForward > sMax_ && forwardStatus_ == FlowStatus::HorizonReached) {
    forwardStatus_ = integrate(+1, sForward, stopAtModelExit);
  }
  if (sBackward > -sMin_ && backwardStatus_ == FlowStatus::HorizonReached) {
    backwardStatus_ = integrate(-1, sBackward, stopAtModelExit);
  }
}

FlowStatus Trajectory::integrate(int direction, double target, bool stopAtModelExit) {
  const VectorFieldModel& vf = *vf_;
  const Tolerances& tol = vf.tol();
  const DomainPredicate& model = vf.manifold().domain();
  const bool checkExit = stopAtModelExit && !model.unrestricted();
  auto& steps = direction > 0 ? forward_ : backward_;
  double& reached = direction > 0 ? sMax_ : sMin_;

  double s = std::abs(reached);
  Vector y = steps.empty() ? seed_ : steps.back().y1;
  Vector k1 = vf(y);
  const double dirSign = static_cast<double>(direction);
  double h = std::min(tol.maxStep, 0.01 / std::max(1.0, k1.norm()));

  // The last two samples of the previous step let touches straddle step boundaries.
  std::vector<double> carryS;
  std::vector<Vector> carryX;

  while (s < target) {
    const double hmin = 1e-12 * std::max(1.0, s);
    h = std::min({h, target - s, tol.maxStep});
    if (h < hmin) {
      if (target - s < hmin) break;
      return FlowStatus::StepFailure;
    }
    Stages st;
    double err = 0.0;
    try {
      st = stages(vf, y, k1, dirSign * h);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double e = dirSign * h *
                         (e1 * st.k[0][i] + e3 * st.k[2][i] + e4 * st.k[3][i] + e5 * st.k[4][i] +
                          e6 * st.k[5][i] + e7 * st.k[6][i]);
        const double sk = tol.position + tol.position * std::max(std::abs(y[i]), std::abs(st.y1[i]));
        acc += (e / sk) * (e / sk);
      }
      err = std::sqrt(acc / static_cast<double>(y.size()));
    } catch (const Error&) {
      err = std::numeric_limits<double>::infinity();
    }
    if (!(err <= 1.0)) {
      h *= std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
      continue;
    }

    DenseStep step;
    step.s0 = dirSign * s;
    step.h = dirSign * h;
    step.sEnd = step.s0 + step.h;
    step.y0 = y;
    step.y1 = st.y1;
    const Vector ydiff = st.y1 - y;
    const Vector bspl = step.h * st.k[0] - ydiff;
    step.r[0] = y;
    step.r[1] = ydiff;
    step.r[2] = bspl;
    step.r[3] = ydiff - step.h * st.k[6] - bspl;
    step.r[4] = step.h * (d1 * st.k[0] + d3 * st.k[2] + d4 * st.k[3] + d5 * st.k[4] + d6 * st.k[5] + d7 * st.k[6]);
    steps.push_back(std::move(step));
    reached = steps.back().sEnd;

    if (checkExit) {
      // Scan the model-domain conjuncts over this step (plus two carried samples).
      const DenseStep& cur = steps.back();
      std::vector<double> asc = carryS;
      for (int k = 1; k <= 9; ++k) asc.push_back(cur.s0 + cur.h * k / 9.0);
      std::sort(asc.begin(), asc.end());
      const auto& conj = model.conjuncts();
      std::vector<std::vector<double>> vals(conj.size(), std::vector<double>(asc.size()));
      std::vector<bool> member(asc.size());
      for (std::size_t i = 0; i < asc.size(); ++i) {
        const Vector x = vf.wrap(at(asc[i]));
        std::vector<double> cv(conj.size());
        for (std::size_t j = 0; j < conj.size(); ++j) {
          try {
            cv[j] = conj[j]->value(x);
          } catch (const Error&) {
            cv[j] = kNaN;
          }
          vals[j][i] = cv[j];
        }
        member[i] = model.containsGiven(cv);
      }
      double exitS = kNaN;
      auto consider = [&](double candidate) {
        if (direction * candidate <= 0.0) return;
        if (std::isnan(exitS) || direction * candidate < direction * exitS) exitS = candidate;
      };
      for (std::size_t j = 0; j < conj.size(); ++j) {
        for (const auto& z : locateZeros(*this, *conj[j], j, asc, vals[j], tol.event)) {
          const Vector x = vf.wrap(exactAt(z.s));
          std::vector<double> cv(conj.size());
          for (std::size_t q = 0; q < conj.size(); ++q) {
            try {
              cv[q] = q == j ? 0.0 : conj[q]->value(x);
            } catch (const Error&) {
              cv[q] = kNaN;
            }
          }
          if (!model.containsGiven(cv)) consider(z.s);
        }
      }
      // Membership lost without a located zero (a conjunct stopped evaluating):
      // bisect the boolean membership.
      for (std::size_t i = 0; i + 1 < asc.size(); ++i) {
        const std::size_t a = direction > 0 ? i : asc.size() - 1 - i;
        const std::size_t b = direction > 0 ? i + 1 : asc.size() - 2 - i;
        if (member[a] && !member[b]) {
          double lo = asc[a], hi = asc[b];
          for (int it = 0; it < 200 && std::abs(hi - lo) > 0.25 * tol.event; ++it) {
            const double mid = 0.5 * (lo + hi);
            (model.contains(vf.wrap(at(mid))) ? lo : hi) = mid;
          }
          if (std::isnan(exitS) || direction * hi < direction * exitS) consider(hi);
          break;
        }
      }
      if (!std::isnan(exitS)) {
        steps.back().sEnd = exitS;
        reached = exitS;
        return FlowStatus::ExitedModelDomain;
      }
      carryS = {cur.s0 + cur.h * 8.0 / 9.0, cur.sEnd};
    }

    s += h;
    y = steps.back().y1;
    k1 = st.k[6];
    h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
  }
  reached = dirSign * target;
  if (!steps.empty()) {
    steps.back().sEnd = reached;
  }
  return FlowStatus::HorizonReached;
}

const DenseStep& Trajectory::stepFor(double s) const {
  if (s >= 0.0) {
    auto it = std::upper_bound(forward_.begin(), forward_.end(), s,
                               [](double v, const DenseStep& st) { return v < st.s0; });
    if (it == forward_.begin()) throw Error(ErrorKind::DomainViolation, "parameter outside the traced range");
    return *(it - 1);
  }
  auto it = std::upper_bound(backward_.begin(), backward_.end(), s,
                             [](double v, const DenseStep& st) { return v > st.s0; });
  if (it == backward_.begin()) throw Error(ErrorKind::DomainViolation, "parameter outside the traced range");
  return *(it - 1);
}

Vector Trajectory::at(double s) const {
  if (s == 0.0 || (s > 0 && forward_.empty()) || (s < 0 && backward_.empty())) return seed_;
  return stepFor(s).at(s);
}

Vector Trajectory::exactAt(double s) const {
  if (s == 0.0 || (s > 0 && forward_.empty()) || (s < 0 && backward_.empty())) return seed_;
  const DenseStep& st = stepFor(s);
  return rkStep(*vf_, st.y0, s - st.s0);
}

std::vector<double> Trajectory::sampleParameters(int internal) const {
  std::vector<double> out;
  out.reserve((forward_.size() + backward_.size()) * static_cast<std::size_t>(internal + 1) + 1);
  auto addStep = [&](double lo, double hi) {
    for (int k = 1; k <= internal + 1; ++k) out.push_back(lo + (hi - lo) * k / (internal + 1));
  };
  out.push_back(sMin_);
  for (auto it = backward_.rbegin(); it != backward_.rend(); ++it) {
    addStep(std::max(it->sEnd, sMin_), it->s0);
  }
  for (const auto& st : forward_) addStep(st.s0, std::min(st.sEnd, sMax_));
  // Remove duplicates produced by truncated steps.
  out.erase(std::unique(out.begin(), out.end()), out.end());
  std::vector<double> cleaned;
  cleaned.reserve(out.size());
  for (double s : out) {
    if (cleaned.empty() || s > cleaned.back()) cleaned.push_back(s);
  }
  return cleaned;
}

// ---------------------------------------------------------------- zeros

std::vector<LocatedZero> locateZeros(const Trajectory& path, const ScalarFunction& f, std::size_t index,
                                     const std::vector<double>& s, const std::vector<double>& values,
                                     double tolEvent) {
  const VectorFieldModel& vf = path.field();
  const double touchTol = vf.tol().position;
  std::vector<LocatedZero> out;
  if (s.size() < 2) return out;

  auto valueAt = [&](double t, bool exact) {
    try {
      return f.value(vf.wrap(exact ? path.exactAt(t) : path.at(t)));
    } catch (const Error&) {
      return kNaN;
    }
  };
  // d f / ds along the curve and |grad f|.
  auto slopeAt = [&](double t, bool exact, double* value, double* gnorm) {
    try {
      const Vector x = vf.wrap(exact ? path.exactAt(t) : path.at(t));
      Vector g;
      const double v = f.valueGradient(x, g);
      if (value) *value = v;
      if (gnorm) *gnorm = g.norm();
      return g.dot(vf(x));
    } catch (const Error&) {
      if (value) *value = kNaN;
      return kNaN;
    }
  };

  auto refineRoot = [&](double lo, double hi) -> std::optional<LocatedZero> {
    const bool posLo = positive(valueAt(lo, false));
    for (int it = 0; it < 200 && hi - lo > 0.25 * tolEvent; ++it) {
      const double mid = 0.5 * (lo + hi);
      (positive(valueAt(mid, false)) == posLo ? lo : hi) = mid;
    }
    double t = 0.5 * (lo + hi);
    double v = 0.0, gn = 0.0;
    double d = slopeAt(t, true, &v, &gn);
    for (int it = 0; it < 3 && std::isfinite(d) && std::abs(d) > 1e-14 && std::isfinite(v); ++it) {
      const double dt = -v / d;
      if (std::abs(dt) > 4.0 * tolEvent) break;
      t += dt;
      d = slopeAt(t, true, &v, &gn);
    }
    if (!std::isfinite(v) || std::abs(v) > 1e-6 * std::max(1.0, gn)) return std::nullopt;
    return LocatedZero{t, index, false, v, d, gn};
  };

  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double va = values[i], vb = values[i + 1];
    if (positive(va) != positive(vb)) {
      if (std::isnan(va) || std::isnan(vb)) continue;
      if (auto z = refineRoot(s[i], s[i + 1])) out.push_back(*z);
    }
  }

  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double va = values[i - 1], vb = values[i], vc = values[i + 1];
    if (!std::isfinite(va) || !std::isfinite(vb) || !std::isfinite(vc)) continue;
    if (positive(va) != positive(vb) || positive(vb) != positive(vc)) continue;
    if (std::abs(vb) > std::abs(va) || std::abs(vb) > std::abs(vc)) continue;
    const double spread = std::max(std::abs(va - vb), std::abs(vc - vb));
    if (std::abs(vb) > 4.0 * spread) continue;
    double lo = s[i - 1], hi = s[i + 1];
    double dlo = slopeAt(lo, false, nullptr, nullptr);
    const double dhi = slopeAt(hi, false, nullptr, nullptr);
    if (!std::isfinite(dlo) || !std::isfinite(dhi) || positive(dlo) == positive(dhi)) continue;
    const bool posDlo = positive(dlo);
    for (int it = 0; it < 200 && hi - lo > 0.25 * tolEvent; ++it) {
      const double mid = 0.5 * (lo + hi);
      (positive(slopeAt(mid, false, nullptr, nullptr)) == posDlo ? lo : hi) = mid;
    }
    const double sm = 0.5 * (lo + hi);
    double em = 0.0, gn = 0.0;
    const double dm = slopeAt(sm, true, &em, &gn);
    if (!std::isfinite(em)) continue;
    if (positive(em) != positive(vb)) {
      if (auto z = refineRoot(s[i - 1], sm)) out.push_back(*z);
      if (auto z = refineRoot(sm, s[i + 1])) out.push_back(*z);
    } else if (std::abs(em) <= touchTol * (gn + touchTol)) {
      // Within position resolution of the zero set: for a squared-distance
      // conjunct this means a distance of about tol_position.
      out.push_back({sm, index, true, em, dm, gn});
    }
  }

  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.s < b.s; });
  // Two roots closer than the event resolution are one tangential touch.
  std::vector<LocatedZero> merged;
  for (const auto& z : out) {
    if (!merged.empty() && std::abs(z.s - merged.back().s) <= 10.0 * tolEvent) {
      merged.back().touch = true;
      merged.back().s = 0.5 * (merged.back().s + z.s);
      merged.back().dvds = 0.5 * (merged.back().dvds + z.dvds);
      continue;
    }
    merged.push_back(z);
  }
  return merged;
}

// ---------------------------------------------------------------- flow

FlowResult flow(const VectorFieldModel& vf, const Vector& x, double s) {
  if (std::abs(s) > vf.tol().horizon) {
    throw Error(ErrorKind::ValidationError, "flow parameter exceeds the horizon S_max");
  }
  Trajectory path(vf, x);
  FlowResult r;
  r.point.chart = vf.manifold().reference.id;
  if (s == 0.0) {
    r.point.coords = vf.wrap(x);
    return r;
  }
  path.extend(s < 0 ? -s : 0.0, s > 0 ? s : 0.0);
  const double achieved = s > 0 ? path.sMax() : path.sMin();
  const FlowStatus st = s > 0 ? path.forwardStatus() : path.backwardStatus();
  r.sAchieved = achieved;
  r.status = st == FlowStatus::HorizonReached ? FlowStatus::Interior : st;
  r.point.coords = path.wrappedAt(achieved);
  if (st == FlowStatus::StepFailure) {
    throw Error(ErrorKind::StepFailure, "step size underflow at s = " + std::to_string(achieved));
  }
  return r;
}

FlowResult flow(const VectorFieldModel& vf, const PointRef& x, double s) {
  return flow(vf, toReference(vf.manifold(), x), s);
}

Report groupLawCheck(const VectorFieldModel& vf, const Vector& x, double s, double t) {
  Report r;
  r.check = "groupLaw";
  r.stamps = {{"tol_check", vf.tol().check}};
  const FlowResult a = flow(vf, x, s);
  if (t == 0.0) {
    r.payload = {{"error", 0.0}};
    if (a.status != FlowStatus::Interior) r.verdict = Verdict::Inconclusive;
    return r;
  }
  const FlowResult direct = flow(vf, x, s + t);
  if (a.status != FlowStatus::Interior || direct.status != FlowStatus::Interior) {
    r.verdict = Verdict::Inconclusive;
    r.notes.push_back("trajectory left the model domain");
    return r;
  }
  const FlowResult composite = flow(vf, a.point.coords, t);
  if (composite.status != FlowStatus::Interior) {
    r.verdict = Verdict::Inconclusive;
    r.notes.push_back("trajectory left the model domain");
    return r;
  }
  const double err = maxNorm(vf.difference(composite.point.coords, direct.point.coords));
  r.payload = {{"error", err}, {"composite", jsonVector(composite.point.coords)}, {"direct", jsonVector(direct.point.coords)}};
  if (!(err < vf.tol().check)) r.fail("F(t, F(s, X)) differs from F(s + t, X)", {{"error", err}});
  return r;
}

// ---------------------------------------------------------------- interval sets

std::optional<std::size_t> IntervalSet::componentContaining(double s) const {
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (components[i].contains(s)) return i;
  }
  return std::nullopt;
}

Json IntervalSet::toJson() const {
  Json comps = Json::array();
  auto endpoint = [](const Endpoint& e) {
    Json j = {{"s", jsonNumber(e.s)}, {"kind", std::string(nameOf(e.kind))}};
    if (e.kind == EndpointKind::Crossing) j["dgds"] = jsonNumber(e.dgds);
    return j;
  };
  for (const auto& c : components) comps.push_back({{"lower", endpoint(c.lower)}, {"upper", endpoint(c.upper)}});
  Json ev = Json::array();
  for (const auto& e : events) {
    ev.push_back({{"s", e.s}, {"conjunct", e.boundaryConjunct}, {"dgds", e.dgds}, {"transverse", e.transverse},
                  {"flip", e.flip}});
  }
  return {{"components", comps}, {"events", ev}, {"warnings", warnings}, {"horizon", horizon},
          {"forwardStatus", std::string(nameOf(forwardStatus))},
          {"backwardStatus", std::string(nameOf(backwardStatus))}};
}

IntervalSet intervalSet(const VectorFieldModel& vf, const Vector& x, const DomainPredicate& u, double horizon) {
  Trajectory path(vf, x);
  path.extend(horizon, horizon);
  return intervalSet(path, u, horizon);
}

namespace {

struct Break {
  double s;
  std::size_t conjunct;
  bool touch;
  double dvds;
};

}  // namespace

IntervalSet intervalSet(const Trajectory& path, const DomainPredicate& u, double horizon) {
  const VectorFieldModel& vf = path.field();
  const Tolerances& tol = vf.tol();
  if (path.forwardStatus() == FlowStatus::StepFailure || path.backwardStatus() == FlowStatus::StepFailure) {
    throw Error(ErrorKind::StepFailure, "integration failed while tracing the orbit");
  }
  IntervalSet out;
  out.horizon = horizon;
  const double sMin = std::max(path.sMin(), -horizon);
  const double sMax = std::min(path.sMax(), horizon);
  out.sMin = sMin;
  out.sMax = sMax;
  out.forwardStatus = path.sMax() <= horizon ? path.forwardStatus() : FlowStatus::HorizonReached;
  out.backwardStatus = path.sMin() >= -horizon ? path.backwardStatus() : FlowStatus::HorizonReached;

  const auto& conj = u.conjuncts();
  std::vector<double> s;
  for (double t : path.sampleParameters(8)) {
    if (t >= sMin && t <= sMax) s.push_back(t);
  }
  if (s.empty() || s.front() > sMin) s.insert(s.begin(), sMin);
  if (s.back() < sMax) s.push_back(sMax);

  std::vector<Break> breaks;
  {
    std::vector<Vector> xs;
    xs.reserve(s.size());
    for (double t : s) xs.push_back(path.wrappedAt(t));
    for (std::size_t j = 0; j < conj.size(); ++j) {
      std::vector<double> vals(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        try {
          vals[i] = conj[j]->value(xs[i]);
        } catch (const Error&) {
          vals[i] = kNaN;
        }
      }
      for (const auto& z : locateZeros(path, *conj[j], j, s, vals, tol.event)) {
        breaks.push_back({z.s, j, z.touch, z.dvds});
      }
    }
  }
  const bool fwdExit = out.forwardStatus == FlowStatus::ExitedModelDomain;
  const bool bwdExit = out.backwardStatus == FlowStatus::ExitedModelDomain;
  const double endGuard = 100.0 * tol.event;
  std::erase_if(breaks, [&](const Break& b) {
    return b.s <= sMin || b.s >= sMax || (fwdExit && b.s > sMax - endGuard) || (bwdExit && b.s < sMin + endGuard);
  });
  std::sort(breaks.begin(), breaks.end(), [](const Break& a, const Break& b) { return a.s < b.s; });

  auto conjunctValues = [&](const Vector& x, std::optional<std::size_t> zeroed) {
    std::vector<double> cv(conj.size());
    for (std::size_t q = 0; q < conj.size(); ++q) {
      try {
        cv[q] = zeroed && *zeroed == q ? 0.0 : conj[q]->value(x);
      } catch (const Error&) {
        cv[q] = kNaN;
      }
    }
    return cv;
  };
  // Point on Fr(U): some term containing the conjunct has all other conjuncts >= 0.
  auto onFrontier = [&](const std::vector<double>& cv, std::size_t j) {
    for (const auto& term : u.terms()) {
      if (std::find(term.begin(), term.end(), j) == term.end()) continue;
      bool ok = true;
      for (auto q : term) {
        if (q != j && !(cv[q] > -1e-12)) ok = false;
      }
      if (ok) return true;
    }
    return false;
  };

  const std::size_t nb = breaks.size();
  std::vector<double> edges;
  edges.push_back(sMin);
  for (const auto& b : breaks) edges.push_back(b.s);
  edges.push_back(sMax);
  std::vector<bool> segIn(nb + 1);
  for (std::size_t k = 0; k <= nb; ++k) {
    segIn[k] = edges[k + 1] > edges[k] && u.contains(path.wrappedAt(0.5 * (edges[k] + edges[k + 1])));
  }
  std::vector<bool> breakIn(nb);
  std::vector<std::vector<double>> breakValues(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    breakValues[b] = conjunctValues(vf.wrap(path.exactAt(breaks[b].s)), breaks[b].conjunct);
    breakIn[b] = u.containsGiven(breakValues[b]);
  }

  auto crossingEndpoint = [&](std::size_t b) {
    Endpoint e;
    e.s = breaks[b].s;
    e.kind = EndpointKind::Crossing;
    e.dgds = -breaks[b].dvds;
    e.conjunct = breaks[b].conjunct;
    return e;
  };
  // Trajectory ends: a model exit that also lies on Fr(U) is a crossing.
  auto terminalEndpoint = [&](double sEnd, bool exited) {
    Endpoint e;
    e.s = sEnd;
    e.kind = EndpointKind::Horizon;
    if (!exited) return e;
    e.kind = EndpointKind::ModelBoundary;
    const Vector x = path.wrappedAt(sEnd);
    Vector g;
    for (std::size_t j = 0; j < conj.size(); ++j) {
      try {
        const double v = conj[j]->valueGradient(x, g);
        if (std::abs(v) <= 1e-7 * std::max(1.0, g.norm())) {
          e.kind = EndpointKind::Crossing;
          e.conjunct = j;
          e.dgds = -g.dot(vf(x));
          break;
        }
      } catch (const Error&) {
      }
    }
    return e;
  };

  std::size_t k = 0;
  while (k <= nb) {
    if (!segIn[k]) {
      ++k;
      continue;
    }
    IntervalComponent c;
    c.lower = k == 0 ? terminalEndpoint(sMin, bwdExit) : crossingEndpoint(k - 1);
    std::size_t last = k;
    while (last < nb && breakIn[last] && segIn[last + 1]) ++last;
    c.upper = last == nb ? terminalEndpoint(sMax, fwdExit) : crossingEndpoint(last);
    out.components.push_back(c);
    k = last + 1;
  }

  for (std::size_t b = 0; b < nb; ++b) {
    const bool flip = segIn[b] != segIn[b + 1] || (breakIn[b] != segIn[b]);
    const bool frontier = flip || (!breakIn[b] && onFrontier(breakValues[b], breaks[b].conjunct));
    if (!frontier) continue;
    CrossingEvent ev;
    ev.s = breaks[b].s;
    ev.boundaryConjunct = breaks[b].conjunct;
    ev.dgds = -breaks[b].dvds;
    ev.transverse = std::abs(ev.dgds) > tol.tangent;
    ev.flip = segIn[b] != segIn[b + 1];
    ev.point = vf.wrap(path.exactAt(ev.s));
    if (ev.flip && !ev.transverse) {
      out.warnings.push_back("TangentialCrossingWarning at s = " + std::to_string(ev.s) +
                             " (|dg/ds| = " + std::to_string(std::abs(ev.dgds)) + ")");
    }
    out.events.push_back(std::move(ev));
  }
  for (const auto& c : out.components) {
    for (const Endpoint* e : {&c.lower, &c.upper}) {
      if (e->kind != EndpointKind::Crossing) continue;
      if (e->s != sMin && e->s != sMax) continue;
      CrossingEvent ev;
      ev.s = e->s;
      ev.boundaryConjunct = *e->conjunct;
      ev.dgds = e->dgds;
      ev.transverse = std::abs(ev.dgds) > tol.tangent;
      ev.point = path.wrappedAt(e->s);
      out.events.push_back(std::move(ev));
    }
  }
  std::sort(out.events.begin(), out.events.end(), [](const auto& a, const auto& b) { return a.s < b.s; });
  return out;
}

// ---------------------------------------------------------------- orbits

std::optional<double> detectPeriod(const Trajectory& path, double tolOrbit) {
  const VectorFieldModel& vf = path.field();
  const Vector x0 = vf.wrap(path.seed());
  const Vector v0 = vf(x0);
  if (v0.norm() == 0.0) return std::nullopt;
  auto sq = [&](double t) { return vf.difference(path.wrappedAt(t), x0).squaredNorm(); };
  auto slope = [&](double t) {
    const Vector x = path.wrappedAt(t);
    return vf.difference(x, x0).dot(vf(x));
  };
  std::vector<double> s;
  for (double t : path.sampleParameters(8)) {
    if (t > 0.0) s.push_back(t);
  }
  const double away = 100.0 * tolOrbit;
  bool left = false;
  std::vector<double> d(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) d[i] = sq(s[i]);
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (!left) {
      left = d[i] > away * away;
      continue;
    }
    if (!(d[i] <= d[i - 1] && d[i] <= d[i + 1])) continue;
    double lo = s[i - 1], hi = s[i + 1];
    if (slope(lo) >= 0.0 || slope(hi) <= 0.0) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) < 0.0 ? lo : hi) = mid;
    }
    const double sStar = 0.5 * (lo + hi);
    const Vector x = vf.wrap(path.exactAt(sStar));
    if (vf.distance(x, x0) >= tolOrbit) continue;
    const Vector v = vf(x);
    const double cosine = v.dot(v0) / (v.norm() * v0.norm());
    if (cosine > 0.999) return sStar;
  }
  return std::nullopt;
}

OrbitRef orbitPolyline(const VectorFieldModel& vf, const Vector& x, double horizon, std::size_t maxPoints) {
  Trajectory path(vf, x);
  path.extend(horizon, horizon);
  if (path.forwardStatus() == FlowStatus::StepFailure || path.backwardStatus() == FlowStatus::StepFailure) {
    throw Error(ErrorKind::StepFailure, "integration failed while tracing the orbit");
  }
  OrbitRef o;
  o.seed = {vf.manifold().reference.id, x};
  o.horizon = horizon;
  o.forwardStatus = path.forwardStatus();
  o.backwardStatus = path.backwardStatus();
  o.period = detectPeriod(path, vf.tol().orbit);
  o.periodic = o.period.has_value();

  const auto s = path.sampleParameters(8);
  std::vector<double> arc(s.size(), 0.0);
  Vector prev = path.at(s.front());
  for (std::size_t i = 1; i < s.size(); ++i) {
    const Vector cur = path.at(s[i]);
    arc[i] = arc[i - 1] + (cur - prev).norm();
    prev = cur;
  }
  const double total = arc.back();
  const std::size_t n = std::max<std::size_t>(maxPoints, 2);
  const double spacing = total / static_cast<double>(n - 1);
  double next = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool last = i + 1 == s.size();
    if (arc[i] >= next || last || spacing == 0.0) {
      if (o.samples.size() + 1 >= n && !last) continue;
      o.samples.emplace_back(s[i], path.wrappedAt(s[i]));
      next = arc[i] + spacing;
      if (spacing == 0.0 && !last) {
        o.samples.emplace_back(s.back(), path.wrappedAt(s.back()));
        break;
      }
    }
  }
  return o;
}

}  // namespace orbitkit
