#pragma once

#include "orbitkit/core.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace orbitkit {

using Json = nlohmann::json;

enum class Verdict { Pass, Fail, Inconclusive };

std::string_view nameOf(Verdict v);
Verdict verdictFromString(std::string_view s);

struct Witness {
  std::string description;
  Json data = Json::object();
};

/// Machine-readable outcome of one check.
struct Report {
  std::string check;
  Verdict verdict = Verdict::Pass;
  std::vector<Witness> witnesses;
  Json payload = Json::object();
  Json stamps = Json::object();  // horizon and tolerance values the check ran with
  std::vector<std::string> notes;
  std::size_t failureCount = 0;  // witnesses beyond kMaxWitnesses are counted, not kept

  static constexpr std::size_t kMaxWitnesses = 16;

  void fail(std::string description, Json data = Json::object());
  [[nodiscard]] bool passed() const { return verdict == Verdict::Pass; }
  [[nodiscard]] Json toJson() const;
  static Report fromJson(const Json& j);
};

/// JSON has no infinities; they serialize as the strings "+inf" / "-inf".
Json jsonNumber(double v);
double numberFromJson(const Json& j);
Json jsonVector(const Vector& v);
Vector vectorFromJson(const Json& j);

}  // namespace orbitkit
