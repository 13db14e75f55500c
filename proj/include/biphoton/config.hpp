#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biphoton/error.hpp"
#include "json.hpp"

namespace biphoton {

enum class ScenarioKind {
  Fig1Demo,
  ZernikeGallery,
  ParityExperiment,
  StrongDisorder2D,
  EmccdPipeline,
  SchmidtEstimate,
  SpeckleContrast,
};

std::string_view scenario_name(ScenarioKind kind);
std::optional<ScenarioKind> scenario_from_name(std::string_view name);

struct ScenarioInfo {
  ScenarioKind kind;
  std::string name;
  std::string summary;
  std::vector<std::string> required_keys;
  /// Dotted paths of keys that may be set, with their defaults.
  std::vector<std::pair<std::string, std::string>> defaults;
};

const std::vector<ScenarioInfo>& scenario_catalog();

/// A problem found while resolving a config, addressed by dotted key path.
struct ConfigIssue {
  ErrorCategory category = ErrorCategory::Schema;
  std::string path;
  std::string message;
};

/// Thrown with every issue found in one pass. category() is Schema when any
/// issue is a schema issue, otherwise Domain.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Fig1Demo;
  /// The input with every default filled in; echoed into run reports.
  nlohmann::json resolved;
  /// Directory that relative file references resolve against.
  std::filesystem::path base_dir;

  std::filesystem::path output_dir() const;
  std::filesystem::path resolve_path(const std::string& relative) const;
};

ScenarioConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
/// Reads JSON from `path`; relative references resolve against its directory.
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace biphoton
