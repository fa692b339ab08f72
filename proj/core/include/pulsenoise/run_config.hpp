#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pulsenoise/electronics.hpp"
#include "pulsenoise/photon_source.hpp"
#include "pulsenoise/pulse_analysis.hpp"
#include "pulsenoise/spectral.hpp"
#include "pulsenoise/trace_io.hpp"
#include "pulsenoise/windows.hpp"

namespace pulsenoise {

enum class TraceSource { simulate, ingest };

struct WindowSpec {
  WindowKind kind = WindowKind::boxcar;
  double duration = 1.25e-6;
  std::optional<double> offset;  // empty: centre on the noiseless pulse
};

struct AnalysisSpec {
  std::vector<double> photon_numbers;      // scaling grid; empty disables scaling
  std::size_t psd_segment_length = 1024;
  std::optional<SweepRange> duration_sweep;  // both set enables optimize-window
  std::optional<SweepRange> offset_sweep;
  bool write_trace = true;
  bool both_windows = false;               // scaling tables for boxcar and dcs
};

struct IngestSpec {
  std::filesystem::path path;
  TraceFormat format = TraceFormat::csv_two_column;
  std::optional<double> sample_interval;
};

/// Everything one CLI invocation needs. Parsed from JSON; any invalid
/// sub-configuration rejects the whole file.
struct RunConfig {
  TraceSource source = TraceSource::simulate;
  CoherentPulseTrainSpec pulse;
  DetectorChainConfig chain = version_one_preset();
  WindowSpec window;
  AnalysisSpec analysis;
  IngestSpec ingest;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "pulsenoise-out";

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);

/// Resolves the configured window against the pulse spec and chain.
GatingWindow resolve_window(const RunConfig& config);

struct PipelineArtifacts {
  std::vector<std::filesystem::path> files;
  std::filesystem::path manifest;
};

/// Runs every configured stage and writes CSV tables plus manifest.json to
/// config.output_dir. Output is a pure function of the configuration.
PipelineArtifacts run_pipeline(const RunConfig& config);

/// Library version string.
std::string version();

}  // namespace pulsenoise
