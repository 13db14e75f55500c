#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "biphoton/config.hpp"
#include "biphoton/scenario.hpp"

namespace {

using biphoton::ErrorCategory;

enum Exit : int {
  kOk = 0,
  kOther = 1,
  kSchema = 2,
  kDomain = 3,
  kResource = 4,
  kUsage = 64,
};

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Schema: return kSchema;
    case ErrorCategory::Shape:
    case ErrorCategory::Domain:
    case ErrorCategory::Resolution:
    case ErrorCategory::Geometry:
    case ErrorCategory::Estimation:
    case ErrorCategory::InsufficientData: return kDomain;
    case ErrorCategory::Resource: return kResource;
    case ErrorCategory::Io: return kOther;
  }
  return kOther;
}

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Shape: return "shape";
    case ErrorCategory::Domain: return "domain";
    case ErrorCategory::Resolution: return "resolution";
    case ErrorCategory::Geometry: return "geometry";
    case ErrorCategory::Estimation: return "estimation";
    case ErrorCategory::InsufficientData: return "insufficient-data";
    case ErrorCategory::Schema: return "schema";
    case ErrorCategory::Resource: return "resource";
    case ErrorCategory::Io: return "io";
  }
  return "error";
}

void print_scenarios() {
  for (const auto& s : biphoton::scenario_catalog()) {
    std::cout << s.name << "\n  " << s.summary << "\n  required:";
    for (const auto& k : s.required_keys) std::cout << " " << k;
    std::cout << "\n  optional:\n";
    for (const auto& [k, v] : s.defaults) std::cout << "    " << k << " = " << v << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-photon correlation imaging through parity-split phase disorder"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run a scenario and write its outputs");
  run->add_option("config", config_path, "scenario config (JSON)")->required();
  std::string output_override;
  run->add_option("-o,--output-dir", output_override, "override output_dir");

  auto* validate = app.add_subcommand("validate", "check a config and print it with defaults applied");
  validate->add_option("config", config_path, "scenario config (JSON)")->required();

  app.add_subcommand("scenarios", "list scenarios with their required and optional keys");

  std::string render_in, render_out;
  bool log_scale = false;
  auto* render = app.add_subcommand("render", "write a grid file as an 8-bit PGM image");
  render->add_option("input", render_in, "grid file")->required();
  render->add_option("output", render_out, "PGM path")->required();
  render->add_flag("--log", log_scale, "logarithmic scale over four decades");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (app.got_subcommand("scenarios")) {
      print_scenarios();
      return kOk;
    }
    if (app.got_subcommand("render")) {
      biphoton::render_grid_file(render_in, render_out, log_scale);
      return kOk;
    }
    auto cfg = biphoton::load_config(config_path);
    if (app.got_subcommand("validate")) {
      std::cout << cfg.resolved.dump(2) << "\n";
      return kOk;
    }
    if (!output_override.empty()) cfg.resolved["output_dir"] = output_override;
    const auto report = biphoton::run_scenario(cfg);
    for (const auto& [k, v] : report.metrics) std::printf("%s = %.10g\n", k.c_str(), v);
    std::printf("wrote %zu files to %s\n", report.artifacts.size() + 1, cfg.output_dir().c_str());
    return kOk;
  } catch (const biphoton::Error& e) {
    std::cerr << category_name(e.category()) << " error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
