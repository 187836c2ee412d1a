#pragma once

// Result emission: plot-ready CSV, JSON mirrors of RunResult and a run
// manifest written next to every result file.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmsim/analysis.hpp"
#include "pmsim/config.hpp"
#include "pmsim/scenarios.hpp"

namespace pmsim {

enum class OutputFormat { csv, json };
std::string to_string(OutputFormat format);
OutputFormat format_from_string(const std::string& name);

std::string code_version();
/// Current UTC time, ISO 8601 with second resolution.
std::string utc_timestamp();

struct RunManifest {
  AnyConfig config;
  std::string code_version;
  std::uint64_t seed = 0;
  std::string started_utc;
  std::string finished_utc;
  std::vector<std::string> outputs;  // file names relative to the output directory

  bool operator==(const RunManifest&) const = default;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

inline constexpr const char* kCsvHeader =
    "T,pointer_centroid,predicted_shift,centroid_error,disturbance,entropy_nats,validity,n_steps";

/// Header plus one row per point; failed points carry nan metrics.
std::string sweep_csv(const SweepResult& sweep);
std::string run_csv(const RunResult& result);

/// Reads a CSV written by sweep_csv back into a SweepResult (no runs).
SweepResult read_sweep_csv(const std::filesystem::path& path);
SweepResult parse_sweep_csv(const std::string& text);

std::string run_result_to_json(const RunResult& result);
RunResult run_result_from_json(const std::string& text);

std::string cold_atom_result_to_json(const ColdAtomResult& result);
std::string scaling_fit_to_json(const ScalingFit& fit);

/// Writes results.csv or results.json plus manifest.json into `dir` (created
/// if needed) and returns the manifest with `outputs` filled in.
RunManifest emit_results(const SweepResult& sweep, OutputFormat format, const std::filesystem::path& dir,
                         RunManifest manifest);
RunManifest emit_results(const RunResult& result, OutputFormat format, const std::filesystem::path& dir,
                         RunManifest manifest);
RunManifest emit_results(const ColdAtomResult& result, const std::filesystem::path& dir, RunManifest manifest);

/// Throws IoError naming the path on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace pmsim
