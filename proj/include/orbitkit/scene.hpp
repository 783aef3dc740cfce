#pragma once

#include "orbitkit/flow.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace orbitkit {

/// One requested check. `params` holds the probe's YAML mapping minus the
/// `name`/`check`/`expect` keys, converted to JSON after validation.
struct ProbeSpec {
  std::string name;
  std::string check;
  Json params = Json::object();
  std::optional<Verdict> expect;  // documented outcome; never changes the verdict
  std::size_t line = 0;
};

struct SceneDocument {
  std::string name;
  std::string description;
  std::string source;  // file path or gallery name
  std::size_t dim = 0;
  std::shared_ptr<ManifoldModel> manifold;
  std::shared_ptr<VectorFieldModel> field;
  std::vector<std::string> declaredProperties;
  std::map<std::string, DomainPredicate> domains;
  std::vector<ProbeSpec> probes;

  [[nodiscard]] bool declares(std::string_view property) const;
  [[nodiscard]] const DomainPredicate& domain(const std::string& name) const;
};

struct LoadOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
};

/// Parses and fully validates a scene. Errors carry "source:line:column: " in
/// their message and the byte offset in the document.
SceneDocument loadSceneText(std::string_view text, const std::string& source, const LoadOverrides& overrides = {});
SceneDocument loadScene(const std::string& path, const LoadOverrides& overrides = {});

struct GalleryEntry {
  std::string name;
  std::string description;
};

std::vector<GalleryEntry> galleryList();
/// Scene text of a gallery entry. Throws ValidationError for unknown names.
std::string galleryText(std::string_view name);
SceneDocument loadGallery(std::string_view name, const LoadOverrides& overrides = {});

struct RunOptions {
  std::vector<std::string> checks;  // probe names or check kinds; empty runs all
  std::size_t workers = 1;
  bool canonical = false;           // omit the generation timestamp
};

struct ProbeOutcome {
  std::string name;
  std::string check;
  int stage = 0;
  Report report;
  std::optional<Verdict> expect;
  std::map<std::string, std::string> artifacts;  // file name -> CSV text
};

struct CheckReport {
  std::string scene;
  std::string toolVersion;
  std::uint64_t seed = 0;
  Json tolerances = Json::object();
  std::vector<ProbeOutcome> probes;  // ordered by probe name
  std::optional<std::string> generatedAt;

  [[nodiscard]] std::size_t count(Verdict v) const;
  /// 0 when no probe failed, 1 otherwise.
  [[nodiscard]] int exitCode() const;
  [[nodiscard]] Json toJson() const;
  /// Human-readable rendering of a JSON report.
  static std::string render(const Json& report);
};

inline constexpr int kReportSchemaVersion = 1;
std::string toolVersion();

/// Runs the selected probes stage by stage: independent checks, then
/// adaptedness, then orbit-space checks that consume adapted charts. A probe
/// error becomes a fail entry; the run itself never throws.
CheckReport runChecks(const SceneDocument& scene, const RunOptions& options = {});

/// Probe check kinds in the order of their stage.
std::vector<std::string> checkKinds();

}  // namespace orbitkit
