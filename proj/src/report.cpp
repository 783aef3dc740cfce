#include "orbitkit/report.hpp"

#include <cmath>
#include <limits>

namespace orbitkit {

std::string_view nameOf(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict verdictFromString(std::string_view s) {
  if (s == "pass") return Verdict::Pass;
  if (s == "fail") return Verdict::Fail;
  return Verdict::Inconclusive;
}

void Report::fail(std::string description, Json data) {
  verdict = Verdict::Fail;
  ++failureCount;
  if (witnesses.size() < kMaxWitnesses) witnesses.push_back({std::move(description), std::move(data)});
}

Json Report::toJson() const {
  Json w = Json::array();
  for (const auto& wit : witnesses) w.push_back({{"description", wit.description}, {"data", wit.data}});
  return {{"check", check},       {"verdict", std::string(nameOf(verdict))},
          {"witnesses", w},       {"payload", payload},
          {"stamps", stamps},     {"notes", notes},
          {"failureCount", failureCount}};
}

Report Report::fromJson(const Json& j) {
  Report r;
  r.check = j.value("check", "");
  r.verdict = verdictFromString(j.value("verdict", "inconclusive"));
  for (const auto& w : j.value("witnesses", Json::array())) {
    r.witnesses.push_back({w.value("description", ""), w.value("data", Json::object())});
  }
  r.payload = j.value("payload", Json::object());
  r.stamps = j.value("stamps", Json::object());
  r.notes = j.value("notes", std::vector<std::string>{});
  r.failureCount = j.value("failureCount", std::size_t{0});
  return r;
}

Json jsonNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

double numberFromJson(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "+inf" || s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Json jsonVector(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(jsonNumber(v[i]));
  return out;
}

Vector vectorFromJson(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = numberFromJson(j[i]);
  return v;
}

}  // namespace orbitkit
