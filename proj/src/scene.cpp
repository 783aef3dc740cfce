#include "orbitkit/scene.hpp"

#include "gallery_data.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace orbitkit {

namespace {

// ---------------------------------------------------------------- positioned errors

struct Context {
  std::string source;

  [[noreturn]] void fail(const YAML::Mark& mark, ErrorKind kind, const std::string& msg, std::size_t extra = 0) const {
    const std::size_t line = mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0;
    const std::size_t col = mark.column >= 0 ? static_cast<std::size_t>(mark.column) + 1 + extra : 0;
    const std::optional<std::size_t> pos =
        mark.pos >= 0 ? std::optional<std::size_t>(static_cast<std::size_t>(mark.pos) + extra) : std::nullopt;
    throw Error(kind, source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg, pos);
  }
  [[noreturn]] void fail(const YAML::Node& node, ErrorKind kind, const std::string& msg, std::size_t extra = 0) const {
    fail(node.Mark(), kind, msg, extra);
  }
};

// Quoted scalars start one character before their text.
std::size_t textStart(const YAML::Node& n) { return n.Tag() == "!" ? 1 : 0; }

std::string scalar(const Context& cx, const YAML::Node& n, const std::string& what) {
  if (!n || !n.IsScalar()) cx.fail(n ? n.Mark() : YAML::Mark::null_mark(), ErrorKind::ValidationError, what + " must be a scalar");
  return n.Scalar();
}

double real(const Context& cx, const YAML::Node& n, const std::string& what) {
  const std::string s = scalar(cx, n, what);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    cx.fail(n, ErrorKind::ValidationError, what + " must be a finite number, got '" + s + "'");
  }
}

std::int64_t integer(const Context& cx, const YAML::Node& n, const std::string& what) {
  const double v = real(cx, n, what);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) cx.fail(n, ErrorKind::ValidationError, what + " must be an integer");
  return static_cast<std::int64_t>(v);
}

bool boolean(const Context& cx, const YAML::Node& n, const std::string& what) {
  const std::string s = scalar(cx, n, what);
  if (s == "true") return true;
  if (s == "false") return false;
  cx.fail(n, ErrorKind::ValidationError, what + " must be true or false");
}

std::vector<double> reals(const Context& cx, const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) cx.fail(n, ErrorKind::ValidationError, what + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& e : n) out.push_back(real(cx, e, what));
  return out;
}

Vector point(const Context& cx, const YAML::Node& n, std::size_t dim, const std::string& what) {
  const auto v = reals(cx, n, what);
  if (v.size() != dim) {
    cx.fail(n, ErrorKind::DimensionMismatch,
            what + " needs " + std::to_string(dim) + " coordinates, got " + std::to_string(v.size()));
  }
  return toVector(v);
}

// ---------------------------------------------------------------- expressions

std::vector<std::string> withExtra(std::vector<std::string> vars, const std::vector<std::string>& extra) {
  vars.insert(vars.end(), extra.begin(), extra.end());
  return vars;
}

// Parses `text` (located at `node`, starting `offset` characters into it) and
// checks that it only uses `vars`.
Expr checkedExpr(const Context& cx, const YAML::Node& node, std::string_view text, std::size_t offset,
                 const std::vector<std::string>& vars) {
  const std::size_t base = textStart(node) + offset;
  std::optional<Expr> parsed;
  try {
    parsed = parse(text);
  } catch (const Error& err) {
    cx.fail(node, err.kind(), err.what(), base + err.offset().value_or(0));
  }
  const Expr& e = *parsed;
  for (const auto& v : e.freeVariables()) {
    if (std::find(vars.begin(), vars.end(), v) != vars.end()) continue;
    const std::regex word("\\b" + v + "\\b");
    std::match_results<std::string_view::const_iterator> m;
    std::size_t at = 0;
    if (std::regex_search(text.begin(), text.end(), m, word)) at = static_cast<std::size_t>(m.position(0));
    std::string allowed;
    for (const auto& a : vars) allowed += (allowed.empty() ? "" : ", ") + a;
    cx.fail(node, ErrorKind::UnknownVariable, "unknown variable '" + v + "' (allowed: " + allowed + ")", base + at);
  }
  return *parsed;
}

std::string exprText(const Context& cx, const YAML::Node& n, const std::vector<std::string>& vars,
                     const std::string& what) {
  const std::string s = scalar(cx, n, what);
  (void)checkedExpr(cx, n, s, 0, vars);
  return s;
}

std::vector<std::string> exprList(const Context& cx, const YAML::Node& n, const std::vector<std::string>& vars,
                                  std::size_t count, const std::string& what) {
  if (!n.IsSequence()) cx.fail(n, ErrorKind::ValidationError, what + " must be a list of expressions");
  if (count > 0 && n.size() != count) {
    cx.fail(n, ErrorKind::DimensionMismatch,
            what + " needs " + std::to_string(count) + " expressions, got " + std::to_string(n.size()));
  }
  std::vector<std::string> out;
  for (const auto& e : n) out.push_back(exprText(cx, e, vars, what));
  return out;
}

// "a < b" or "a > b" -> the open conjunct (b) - (a) > 0 or (a) - (b) > 0.
std::string inequality(const Context& cx, const YAML::Node& n, std::size_t dim) {
  const std::string s = scalar(cx, n, "domain inequality");
  if (s.find("<=") != std::string::npos || s.find(">=") != std::string::npos || s.find("≤") != std::string::npos ||
      s.find("≥") != std::string::npos || s.find("=") != std::string::npos) {
    const auto at = s.find_first_of("<>=\xe2");
    cx.fail(n, ErrorKind::ValidationError, "domains must be open: use strict < or >", textStart(n) + at);
  }
  const auto lt = s.find('<');
  const auto gt = s.find('>');
  if ((lt == std::string::npos) == (gt == std::string::npos) ||
      s.find_first_of("<>", std::min(lt, gt) + 1) != std::string::npos) {
    cx.fail(n, ErrorKind::ValidationError, "a domain inequality needs exactly one strict < or >");
  }
  const std::size_t op = std::min(lt, gt);
  const std::string lhs = s.substr(0, op);
  const std::string rhs = s.substr(op + 1);
  const auto vars = coordinateNames(dim);
  (void)checkedExpr(cx, n, lhs, 0, vars);
  (void)checkedExpr(cx, n, rhs, op + 1, vars);
  return lt != std::string::npos ? "(" + rhs + ") - (" + lhs + ")" : "(" + lhs + ") - (" + rhs + ")";
}

DomainPredicate domainPredicate(const Context& cx, const YAML::Node& n, std::size_t dim) {
  if (!n || n.IsNull()) return {};
  auto conjunction = [&](const YAML::Node& list) {
    std::vector<ScalarFunctionPtr> out;
    if (list.IsScalar()) {
      out.push_back(exprFunction(inequality(cx, list, dim), dim));
      return out;
    }
    if (!list.IsSequence()) cx.fail(list, ErrorKind::ValidationError, "a domain is a list of strict inequalities");
    for (const auto& c : list) out.push_back(exprFunction(inequality(cx, c, dim), dim));
    return out;
  };
  if (n.IsMap()) {
    for (const auto& kv : n) {
      if (kv.first.Scalar() != "any") cx.fail(kv.first, ErrorKind::ValidationError, "unknown domain key '" + kv.first.Scalar() + "'");
    }
    const auto any = n["any"];
    if (!any.IsSequence() || any.size() == 0) cx.fail(n, ErrorKind::ValidationError, "'any' needs a list of conjunctions");
    std::vector<std::vector<ScalarFunctionPtr>> terms;
    for (const auto& t : any) terms.push_back(conjunction(t));
    return DomainPredicate::unionOf(terms);
  }
  const auto c = conjunction(n);
  return c.empty() ? DomainPredicate{} : DomainPredicate::conjunction(c);
}

void onlyKeys(const Context& cx, const YAML::Node& map, const std::set<std::string>& keys, const std::string& where) {
  if (!map.IsMap()) cx.fail(map, ErrorKind::ValidationError, where + " must be a mapping");
  for (const auto& kv : map) {
    if (!keys.contains(kv.first.Scalar())) {
      cx.fail(kv.first, ErrorKind::ValidationError, "unknown key '" + kv.first.Scalar() + "' in " + where);
    }
  }
}

YAML::Node required(const Context& cx, const YAML::Node& map, const std::string& key, const std::string& where) {
  const auto n = map[key];
  if (!n) cx.fail(map, ErrorKind::ValidationError, where + " needs '" + key + "'");
  return n;
}

// ---------------------------------------------------------------- probe schema

enum class P { Int, Real, Bool, Str, Domain, Chart, Probe, Point, Points, Reals, Expr, Exprs, Charts, Probes, Pairs, Box };

struct Param {
  std::string key;
  P type;
  bool required = false;
  std::vector<std::string> extraVars = {};  // for expressions, beyond x0..
  bool spatial = false;                      // N expressions instead of N+1
  bool yVars = false;                        // expressions in y0.. (orbit-space coordinates)
};

const std::map<std::string, std::vector<Param>>& schema() {
  static const std::map<std::string, std::vector<Param>> s = {
      {"atlas", {{"samples", P::Int}}},
      {"field", {{"samples", P::Int}}},
      {"flowClosedForm",
       {{"expected", P::Exprs, true, {"s"}}, {"samples", P::Int}, {"sRange", P::Real}, {"tolerance", P::Real}}},
      {"groupLaw", {{"triples", P::Int}, {"sRange", P::Real}}},
      {"intervals",
       {{"domain", P::Domain, true},
        {"points", P::Points, true},
        {"expectLower", P::Expr},
        {"expectUpper", P::Expr},
        {"horizon", P::Real},
        {"tolerance", P::Real}}},
      {"crossings",
       {{"domain", P::Domain, true},
        {"points", P::Points, true},
        {"expectDgds", P::Expr, false, {"s"}},
        {"tangentPoints", P::Points},
        {"horizon", P::Real},
        {"tolerance", P::Real}}},
      {"tangency", {{"domain", P::Domain, true}, {"points", P::Points}, {"grid", P::Box}, {"horizon", P::Real}}},
      {"pullback", {{"domain", P::Domain, true}, {"samples", P::Int}, {"sSpan", P::Real}}},
      {"infinity",
       {{"domain", P::Domain, true}, {"point", P::Point, true}, {"R", P::Real, true}, {"Rmax", P::Real, true},
        {"sSamples", P::Int}}},
      {"endpoints",
       {{"domain", P::Domain, true},
        {"center", P::Point, true},
        {"offsets", P::Points, true},
        {"h", P::Real},
        {"expectPhi1", P::Expr},
        {"expectPhi2", P::Expr},
        {"tolerance", P::Real},
        {"R", P::Real},
        {"Rmax", P::Real}}},
      {"straighten",
       {{"chart", P::Chart},
        {"point", P::Point, true},
        {"radius", P::Real, true},
        {"expected", P::Expr},
        {"samples", P::Int},
        {"tolerance", P::Real},
        {"fieldTolerance", P::Real},
        {"tablePerAxis", P::Int}}},
      {"returnSet", {{"chart", P::Chart, true}, {"point", P::Point, true}, {"horizons", P::Reals, true}, {"gapBelow", P::Real}}},
      {"normality",
       {{"points", P::Points, true}, {"seedsPerPoint", P::Int}, {"sectionRadius", P::Real}, {"horizon", P::Real}}},
      {"polylines", {{"points", P::Points, true}, {"horizon", P::Real}, {"maxPoints", P::Int}}},
      {"frameEquivalent", {{"charts", P::Charts, true}, {"samples", P::Int}}},
      {"adapted",
       {{"chart", P::Chart, true}, {"domain", P::Domain}, {"budget", P::Int}, {"horizon", P::Real},
        {"productForm", P::Bool}, {"seeds", P::Points}}},
      {"detectors",
       {{"chart", P::Chart, true}, {"box", P::Box, true}, {"subdomains", P::Int}, {"budget", P::Int}, {"horizon", P::Real}}},
      {"orbitMap", {{"chart", P::Probe, true}, {"points", P::Points, true}, {"expected", P::Exprs, true, {}, true, false},
                    {"tolerance", P::Real}}},
      {"quotient",
       {{"from", P::Probe, true},
        {"to", P::Probe, true},
        {"expected", P::Exprs, false, {}, true, true},
        {"range", P::Box},
        {"samples", P::Int},
        {"tolerance", P::Real},
        {"roundTrip", P::Real},
        {"jacobianRel", P::Real}}},
      {"quotientAtlas", {{"charts", P::Probes, true}, {"samples", P::Int}}},
      {"hausdorff", {{"charts", P::Probes, true}, {"pairs", P::Pairs, true}, {"shrinkSteps", P::Int}}},
      {"embedding",
       {{"frameDomain", P::Domain, true},
        {"frameCharts", P::Charts, true},
        {"orbitChart", P::Probe, true},
        {"lines", P::Int},
        {"pointsPerLine", P::Int}}},
      {"metrizable", {{"charts", P::Probes, true}}},
  };
  return s;
}

Json yamlToJson(const YAML::Node& n) {
  if (n.IsSequence()) {
    Json a = Json::array();
    for (const auto& e : n) a.push_back(yamlToJson(e));
    return a;
  }
  if (n.IsMap()) {
    Json o = Json::object();
    for (const auto& kv : n) o[kv.first.Scalar()] = yamlToJson(kv.second);
    return o;
  }
  if (n.IsScalar()) return n.Scalar();
  return nullptr;
}

Json pointJson(const Vector& v) { return toStd(v); }

}  // namespace

bool SceneDocument::declares(std::string_view property) const {
  return std::find(declaredProperties.begin(), declaredProperties.end(), property) != declaredProperties.end();
}

const DomainPredicate& SceneDocument::domain(const std::string& n) const {
  const auto it = domains.find(n);
  if (it == domains.end()) throw Error(ErrorKind::ValidationError, "unknown domain '" + n + "'");
  return it->second;
}

std::vector<std::string> checkKinds() {
  return {"atlas",     "field",      "flowClosedForm", "groupLaw", "intervals",       "crossings", "tangency",
          "pullback",  "infinity",   "endpoints",      "straighten", "returnSet",     "normality", "polylines",
          "frameEquivalent", "adapted", "detectors",   "orbitMap", "quotient",        "quotientAtlas", "hausdorff",
          "embedding", "metrizable"};
}

SceneDocument loadSceneText(std::string_view text, const std::string& source, const LoadOverrides& overrides) {
  const Context cx{source};
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    cx.fail(e.mark, ErrorKind::SyntaxError, e.msg);
  }
  if (!root.IsMap()) cx.fail(root.Mark(), ErrorKind::ValidationError, "a scene is a mapping");
  onlyKeys(cx, root,
           {"name", "description", "dim", "seed", "reference", "samplingBox", "periods", "atlas", "field",
            "declaredProperties", "tolerances", "domains", "probes"},
           "scene");

  SceneDocument doc;
  doc.source = source;
  doc.name = scalar(cx, required(cx, root, "name", "scene"), "name");
  if (root["description"]) doc.description = scalar(cx, root["description"], "description");
  const auto dimNode = required(cx, root, "dim", "scene");
  const auto dim = integer(cx, dimNode, "dim");
  if (dim < 2) cx.fail(dimNode, ErrorKind::ValidationError, "dim is N+1 and must be at least 2");
  doc.dim = static_cast<std::size_t>(dim);
  const auto vars = coordinateNames(doc.dim);

  auto m = std::make_shared<ManifoldModel>();
  m->dim = doc.dim;
  if (root["seed"]) {
    const auto s = integer(cx, root["seed"], "seed");
    if (s < 0) cx.fail(root["seed"], ErrorKind::ValidationError, "seed must be non-negative");
    m->seed = static_cast<std::uint64_t>(s);
  }
  if (overrides.seed) m->seed = *overrides.seed;

  if (const auto t = root["tolerances"]) {
    onlyKeys(cx, t,
             {"chart", "singular", "field", "position", "event", "tangent", "check", "orbit", "delta", "maxStep",
              "horizon"},
             "tolerances");
    const std::map<std::string, double*> slots = {
        {"chart", &m->tol.chart},       {"singular", &m->tol.singular}, {"field", &m->tol.field},
        {"position", &m->tol.position}, {"event", &m->tol.event},       {"tangent", &m->tol.tangent},
        {"check", &m->tol.check},       {"orbit", &m->tol.orbit},       {"delta", &m->tol.delta},
        {"maxStep", &m->tol.maxStep},   {"horizon", &m->tol.horizon}};
    for (const auto& kv : t) {
      const double v = real(cx, kv.second, kv.first.Scalar());
      if (!(v > 0)) cx.fail(kv.second, ErrorKind::ValidationError, "tolerances must be positive");
      *slots.at(kv.first.Scalar()) = v;
    }
  }
  if (overrides.horizon) m->tol.horizon = *overrides.horizon;

  const auto ref = required(cx, root, "reference", "scene");
  onlyKeys(cx, ref, {"id", "domain"}, "reference");
  m->reference = identityChart(scalar(cx, required(cx, ref, "id", "reference"), "reference id"), doc.dim,
                               domainPredicate(cx, ref["domain"], doc.dim));

  const auto box = required(cx, root, "samplingBox", "scene");
  onlyKeys(cx, box, {"lower", "upper"}, "samplingBox");
  m->samplingBox = {point(cx, required(cx, box, "lower", "samplingBox"), doc.dim, "samplingBox.lower"),
                    point(cx, required(cx, box, "upper", "samplingBox"), doc.dim, "samplingBox.upper")};
  if (!(m->samplingBox.lower.array() < m->samplingBox.upper.array()).all()) {
    cx.fail(box, ErrorKind::ValidationError, "samplingBox needs lower < upper in every coordinate");
  }

  if (const auto atlas = root["atlas"]) {
    if (!atlas.IsSequence()) cx.fail(atlas, ErrorKind::ValidationError, "atlas must be a list of charts");
    for (const auto& c : atlas) {
      onlyKeys(cx, c, {"id", "forward", "inverse", "domain"}, "chart");
      ChartSpec spec;
      spec.id = scalar(cx, required(cx, c, "id", "chart"), "chart id");
      if (m->hasChart(spec.id)) cx.fail(c["id"], ErrorKind::ValidationError, "duplicate chart id '" + spec.id + "'");
      spec.dim = doc.dim;
      spec.forward = exprMap(exprList(cx, required(cx, c, "forward", "chart"), vars, doc.dim, "forward"), doc.dim);
      spec.inverse = exprMap(exprList(cx, required(cx, c, "inverse", "chart"), vars, doc.dim, "inverse"), doc.dim);
      spec.domain = domainPredicate(cx, c["domain"], doc.dim);
      m->atlas.push_back(std::move(spec));
    }
  }

  const auto field = required(cx, root, "field", "scene");
  onlyKeys(cx, field, {"reference", "charts", "speedLimiter"}, "field");
  const auto comps = exprList(cx, required(cx, field, "reference", "field"), vars, doc.dim, "field component");

  if (const auto periods = root["periods"]) {
    const Vector p = point(cx, periods, doc.dim, "periods");
    if ((p.array() < 0).any()) cx.fail(periods, ErrorKind::ValidationError, "periods must be >= 0");
  }
  doc.manifold = m;
  doc.field = std::make_shared<VectorFieldModel>(m, comps);
  if (const auto periods = root["periods"]) doc.field->setPeriods(point(cx, periods, doc.dim, "periods"));
  if (field["speedLimiter"]) doc.field->setSpeedLimiter(boolean(cx, field["speedLimiter"], "speedLimiter"));
  if (const auto charts = field["charts"]) {
    // Components of v declared in other charts; the `field` probe checks them.
    if (!charts.IsMap()) cx.fail(charts, ErrorKind::ValidationError, "field.charts must map chart ids to components");
    for (const auto& kv : charts) {
      const auto id = kv.first.Scalar();
      if (!m->hasChart(id)) cx.fail(kv.first, ErrorKind::ValidationError, "unknown chart '" + id + "'");
      doc.field->declareChartComponents(id, exprList(cx, kv.second, vars, doc.dim, "field component"));
    }
  }

  if (const auto props = root["declaredProperties"]) {
    if (!props.IsSequence()) cx.fail(props, ErrorKind::ValidationError, "declaredProperties must be a list");
    for (const auto& p : props) {
      const auto s = scalar(cx, p, "property");
      if (s != "nonVanishing" && s != "orbitsClosed" && s != "orbitsNonPeriodic") {
        cx.fail(p, ErrorKind::ValidationError, "unknown property '" + s + "'");
      }
      doc.declaredProperties.push_back(s);
    }
  }

  if (const auto domains = root["domains"]) {
    if (!domains.IsMap()) cx.fail(domains, ErrorKind::ValidationError, "domains must be a mapping");
    for (const auto& kv : domains) doc.domains[kv.first.Scalar()] = domainPredicate(cx, kv.second, doc.dim);
  }

  // Probes: schema validation and name resolution.
  std::set<std::string> probeNames;
  std::map<std::string, std::string> probeKinds;
  if (const auto probes = root["probes"]) {
    if (!probes.IsSequence()) cx.fail(probes, ErrorKind::ValidationError, "probes must be a list");
    for (const auto& p : probes) {
      if (!p.IsMap()) cx.fail(p, ErrorKind::ValidationError, "a probe is a mapping");
      ProbeSpec spec;
      spec.name = scalar(cx, required(cx, p, "name", "probe"), "probe name");
      spec.check = scalar(cx, required(cx, p, "check", "probe"), "check");
      spec.line = static_cast<std::size_t>(p.Mark().line + 1);
      if (!probeNames.insert(spec.name).second) cx.fail(p["name"], ErrorKind::ValidationError, "duplicate probe '" + spec.name + "'");
      const auto sit = schema().find(spec.check);
      if (sit == schema().end()) cx.fail(p["check"], ErrorKind::ValidationError, "unknown check '" + spec.check + "'");
      probeKinds[spec.name] = spec.check;
      std::set<std::string> keys = {"name", "check", "expect"};
      for (const auto& prm : sit->second) keys.insert(prm.key);
      onlyKeys(cx, p, keys, "probe '" + spec.name + "'");
      if (const auto e = p["expect"]) {
        const auto s = scalar(cx, e, "expect");
        if (s != "pass" && s != "fail" && s != "inconclusive") {
          cx.fail(e, ErrorKind::ValidationError, "expect is pass, fail or inconclusive");
        }
        spec.expect = verdictFromString(s);
      }
      for (const auto& prm : sit->second) {
        const auto n = p[prm.key];
        if (!n) {
          if (prm.required) cx.fail(p, ErrorKind::ValidationError, "probe '" + spec.name + "' needs '" + prm.key + "'");
          continue;
        }
        const std::size_t pd = prm.spatial ? doc.dim - 1 : doc.dim;
        const auto exprVars = prm.yVars ? [&] {
          std::vector<std::string> y;
          for (std::size_t i = 0; i < doc.dim - 1; ++i) y.push_back("y" + std::to_string(i));
          return y;
        }() : withExtra(vars, prm.extraVars);
        Json& out = spec.params[prm.key];
        switch (prm.type) {
          case P::Int: {
            const auto v = integer(cx, n, prm.key);
            if (v <= 0) cx.fail(n, ErrorKind::ValidationError, prm.key + " must be positive");
            out = v;
            break;
          }
          case P::Real: out = real(cx, n, prm.key); break;
          case P::Bool: out = boolean(cx, n, prm.key); break;
          case P::Str: out = scalar(cx, n, prm.key); break;
          case P::Domain: {
            const auto s = scalar(cx, n, prm.key);
            if (!doc.domains.contains(s)) cx.fail(n, ErrorKind::ValidationError, "unknown domain '" + s + "'");
            out = s;
            break;
          }
          case P::Chart: {
            const auto s = scalar(cx, n, prm.key);
            if (!m->hasChart(s)) cx.fail(n, ErrorKind::ValidationError, "unknown chart '" + s + "'");
            out = s;
            break;
          }
          case P::Charts: {
            if (!n.IsSequence()) cx.fail(n, ErrorKind::ValidationError, prm.key + " must be a list of chart ids");
            out = Json::array();
            for (const auto& c : n) {
              const auto s = scalar(cx, c, "chart");
              if (!m->hasChart(s)) cx.fail(c, ErrorKind::ValidationError, "unknown chart '" + s + "'");
              out.push_back(s);
            }
            break;
          }
          case P::Probe:
          case P::Probes: {
            auto one = [&](const YAML::Node& c) {
              const auto s = scalar(cx, c, "probe");
              const auto it = probeKinds.find(s);
              if (it == probeKinds.end() || it->second != "adapted") {
                cx.fail(c, ErrorKind::ValidationError, "'" + s + "' is not an earlier adapted probe");
              }
              return s;
            };
            if (prm.type == P::Probe) {
              out = one(n);
            } else {
              if (!n.IsSequence()) cx.fail(n, ErrorKind::ValidationError, prm.key + " must be a list of probe names");
              out = Json::array();
              for (const auto& c : n) out.push_back(one(c));
            }
            break;
          }
          case P::Point: out = pointJson(point(cx, n, doc.dim, prm.key)); break;
          case P::Points: {
            if (!n.IsSequence()) cx.fail(n, ErrorKind::ValidationError, prm.key + " must be a list of points");
            out = Json::array();
            for (const auto& q : n) out.push_back(pointJson(point(cx, q, doc.dim, prm.key)));
            break;
          }
          case P::Reals: out = reals(cx, n, prm.key); break;
          case P::Expr: out = exprText(cx, n, exprVars, prm.key); break;
          case P::Exprs: out = exprList(cx, n, exprVars, pd, prm.key); break;
          case P::Box: {
            onlyKeys(cx, n, {"lower", "upper", "perAxis"}, prm.key);
            const std::size_t bd = prm.key == "range" ? doc.dim - 1 : doc.dim;
            const Vector lo = point(cx, required(cx, n, "lower", prm.key), bd, prm.key + ".lower");
            const Vector hi = point(cx, required(cx, n, "upper", prm.key), bd, prm.key + ".upper");
            if (!(lo.array() < hi.array()).all()) cx.fail(n, ErrorKind::ValidationError, prm.key + " needs lower < upper");
            out = {{"lower", pointJson(lo)}, {"upper", pointJson(hi)}};
            if (n["perAxis"]) out["perAxis"] = integer(cx, n["perAxis"], "perAxis");
            break;
          }
          case P::Pairs: {
            if (!n.IsSequence()) cx.fail(n, ErrorKind::ValidationError, "pairs must be a list");
            out = Json::array();
            for (const auto& pr : n) {
              onlyKeys(cx, pr, {"first", "second"}, "pair");
              Json pj;
              for (const char* side : {"first", "second"}) {
                const auto sn = required(cx, pr, side, "pair");
                onlyKeys(cx, sn, {"chart", "point"}, side);
                const auto c = scalar(cx, required(cx, sn, "chart", side), "chart");
                const auto it = probeKinds.find(c);
                if (it == probeKinds.end() || it->second != "adapted") {
                  cx.fail(sn["chart"], ErrorKind::ValidationError, "'" + c + "' is not an earlier adapted probe");
                }
                pj[side] = {{"chart", c}, {"point", pointJson(point(cx, required(cx, sn, "point", side), doc.dim, "point"))}};
              }
              out.push_back(pj);
            }
            break;
          }
        }
      }
      doc.probes.push_back(std::move(spec));
    }
  }

  return doc;
}

SceneDocument loadScene(const std::string& path, const LoadOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ValidationError, path + ": cannot read scene file");
  std::stringstream ss;
  ss << in.rdbuf();
  return loadSceneText(ss.str(), path, overrides);
}

std::vector<GalleryEntry> galleryList() {
  std::vector<GalleryEntry> out;
  for (const auto& g : gallery::kScenes) out.push_back({std::string(g.name), std::string(g.description)});
  return out;
}

std::string galleryText(std::string_view name) {
  for (const auto& g : gallery::kScenes) {
    if (g.name == name) return std::string(g.text);
  }
  throw Error(ErrorKind::ValidationError, "unknown gallery scene '" + std::string(name) + "'");
}

SceneDocument loadGallery(std::string_view name, const LoadOverrides& overrides) {
  return loadSceneText(galleryText(name), std::string(name) + ".scene", overrides);
}

}  // namespace orbitkit
