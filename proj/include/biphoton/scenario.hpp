#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "biphoton/config.hpp"
#include "biphoton/grid.hpp"

namespace biphoton {

struct Artifact {
  std::string path;  // relative to the output directory
  std::uintmax_t bytes = 0;
  std::string fnv1a64;  // 16 lowercase hex digits
};

struct RunReport {
  ScenarioKind kind = ScenarioKind::Fig1Demo;
  std::map<std::string, double> metrics;
  /// Free-text lines for report.txt (reference values, caveats).
  std::vector<std::string> notes;
  std::vector<Artifact> artifacts;
  nlohmann::json config;

  /// Throws DomainError for an unknown name.
  double metric(const std::string& name) const;
};

/// Runs the scenario, writes its arrays and CSVs plus config.json,
/// metrics.json, report.txt and manifest.json into cfg.output_dir().
/// Outputs depend only on the resolved config.
RunReport run_scenario(const ScenarioConfig& cfg);

/// Bytes the scenario is expected to hold at peak; run_scenario throws
/// ResourceError before allocating when this exceeds max_memory_mb.
std::uintmax_t estimate_peak_bytes(const ScenarioConfig& cfg);

std::string fnv1a64_hex(const std::filesystem::path& path);

/// 8-bit binary PGM of a rank-2 field (x down, y across), scaled to its
/// maximum; `log_scale` maps [1e-4, 1] of the peak logarithmically.
void write_pgm(const std::filesystem::path& path, const RealField& image, bool log_scale = false);

/// Renders a grid file: float64 rank-2 payloads directly, frame stacks as
/// per-pixel photon counts. Throws SchemaError for anything else.
void render_grid_file(const std::filesystem::path& in, const std::filesystem::path& out,
                      bool log_scale = false);

}  // namespace biphoton
