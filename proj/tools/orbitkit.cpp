// Command-line front end: run scenes, list or emit the gallery, re-render reports.

#include "orbitkit/scene.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace orbitkit;

namespace {

constexpr int kUsageError = 2;

std::size_t defaultWorkers() {
  if (const char* env = std::getenv("ORBITKIT_WORKERS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
    std::cerr << "orbitkit: ignoring ORBITKIT_WORKERS='" << env << "'\n";
  }
  return 1;
}

void writeFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

SceneDocument resolveScene(const std::string& arg, const LoadOverrides& overrides) {
  if (fs::exists(arg)) return loadScene(arg, overrides);
  for (const auto& g : galleryList()) {
    if (g.name == arg) return loadGallery(arg, overrides);
  }
  throw Error(ErrorKind::ValidationError, "'" + arg + "' is neither a scene file nor a gallery name");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbitkit: orbit-space checks for congruences of world lines"};
  app.set_version_flag("--version", toolVersion());
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the probes of a scene file or gallery scene");
  std::string sceneArg;
  std::vector<std::string> checks;
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
  std::string outDir;
  std::size_t workers = defaultWorkers();
  bool canonical = false;
  bool jsonOut = false;
  run->add_option("scene", sceneArg, "Scene file or gallery name")->required();
  run->add_option("--checks", checks, "Probe names or check kinds to run (default: all)")->delimiter(',');
  run->add_option("--seed", seed, "Override the scene seed");
  run->add_option("--horizon", horizon, "Override the horizon tolerance S_max")->check(CLI::PositiveNumber);
  run->add_option("--out", outDir, "Directory for report.json and CSV artifacts");
  run->add_option("--workers", workers, "Parallel probes per stage (default: $ORBITKIT_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--canonical", canonical, "Omit the timestamp so reports are byte-identical across runs");
  run->add_flag("--json", jsonOut, "Print the JSON report instead of the summary");

  auto* gallery = app.add_subcommand("gallery", "Built-in scenes");
  gallery->require_subcommand(1);
  auto* list = gallery->add_subcommand("list", "List gallery scenes");
  auto* emit = gallery->add_subcommand("emit", "Write gallery scene files");
  std::vector<std::string> emitNames;
  std::string emitDir;
  emit->add_option("names", emitNames, "Scenes to emit (default: all)");
  emit->add_option("--out", emitDir, "Directory to write into (default: print to stdout)");

  auto* report = app.add_subcommand("report", "Render a JSON report as text");
  std::string reportPath;
  report->add_option("file", reportPath, "report.json")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*run) {
      const LoadOverrides overrides{seed, horizon};
      const SceneDocument scene = resolveScene(sceneArg, overrides);
      for (const auto& c : checks) {
        const bool known = std::any_of(scene.probes.begin(), scene.probes.end(),
                                       [&](const auto& p) { return p.name == c || p.check == c; });
        if (!known) throw Error(ErrorKind::ValidationError, "no probe or check kind named '" + c + "' in the scene");
      }
      const CheckReport result = runChecks(scene, RunOptions{checks, workers, canonical});
      const Json j = result.toJson();
      if (!outDir.empty()) {
        fs::create_directories(outDir);
        writeFile(fs::path(outDir) / "report.json", j.dump(2) + "\n");
        for (const auto& p : result.probes) {
          for (const auto& [name, text] : p.artifacts) writeFile(fs::path(outDir) / name, text);
        }
      }
      std::cout << (jsonOut ? j.dump(2) + "\n" : CheckReport::render(j));
      return result.exitCode();
    }
    if (*list) {
      for (const auto& g : galleryList()) std::cout << g.name << "  " << g.description << "\n";
      return 0;
    }
    if (*emit) {
      if (emitNames.empty()) {
        for (const auto& g : galleryList()) emitNames.push_back(g.name);
      }
      if (!emitDir.empty()) fs::create_directories(emitDir);
      for (const auto& n : emitNames) {
        const std::string text = galleryText(n);
        if (emitDir.empty()) {
          std::cout << "--- # " << n << ".scene\n" << text;
        } else {
          writeFile(fs::path(emitDir) / (n + ".scene"), text);
        }
      }
      return 0;
    }
    if (*report) {
      std::ifstream in(reportPath);
      const Json j = Json::parse(in);
      std::cout << CheckReport::render(j);
      return j.at("summary").at("exitCode").get<int>();
    }
  } catch (const Error& e) {
    std::cerr << "orbitkit: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "orbitkit: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
