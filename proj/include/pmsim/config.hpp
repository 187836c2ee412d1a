#pragma once

// Strict JSON configuration files.
//
//   {"schema_version": 1, "kind": "measurement", ...}
//   {"schema_version": 1, "kind": "cold_atom", ...}
//
// Missing fields take defaults, which are listed in ParsedConfig::defaults.
// Unknown keys are rejected.

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "pmsim/measurement.hpp"
#include "pmsim/scenarios.hpp"

namespace pmsim {

inline constexpr int kSchemaVersion = 1;

using AnyConfig = std::variant<MeasurementConfig, ColdAtomParams>;

struct ParsedConfig {
  AnyConfig config;
  /// "field = value" for every default that was filled in.
  std::vector<std::string> defaults;
};

/// Throws IoError if the file cannot be read, ParseError for malformed or
/// invalid content and SizingError when the packet cannot be resolved.
ParsedConfig parse_config(const std::filesystem::path& path);
ParsedConfig parse_config_text(const std::string& text);

/// Complete JSON document (every field explicit) that re-parses to `config`.
std::string config_to_json(const AnyConfig& config);

}  // namespace pmsim
