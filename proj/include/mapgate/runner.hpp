#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mapgate/config.hpp"

namespace mapgate {

inline constexpr const char* kVersion = "mapgate 1.0.0";

struct RunManifest {
  std::string experiment;
  std::string version = kVersion;
  std::string config_snapshot;
  std::filesystem::path directory;
  /// (stage, seconds), in execution order.
  std::vector<std::pair<std::string, double>> timings;
  /// Paths relative to `directory`, sorted; includes manifest.json.
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

/// Validates, runs the configured experiment and writes its outputs and
/// manifest.json into the output directory. Throws ConfigError with every
/// validation problem, or NumericalError with the failing grid point.
RunManifest run(const ExperimentConfig& config);

/// The config as JSON, with every field resolved to its effective value.
std::string resolved_config_json(const ExperimentConfig& config);

}  // namespace mapgate
