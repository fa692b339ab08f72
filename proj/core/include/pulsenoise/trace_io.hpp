#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pulsenoise/electronics.hpp"

namespace pulsenoise {

enum class TraceFormat { csv_two_column, csv_amplitude_only };

TraceFormat parse_trace_format(std::string_view name);

/// Plain-text CSV with a '#' header block:
///
///   # dt: 1e-08
///   # unit: photoelectrons
///   # origin_time: -1e-05
///   # electrons_per_unit: 1
///   # samples: 3
///   # columns: time_s,value
///   -1e-05,0.5
///
/// Two-column data must be uniformly sampled (relative step jitter up to
/// 1e-6); the time column overrides a caller-supplied dt.
///   ...
///
/// Header keys are optional for ingest except that amplitude-only data needs
/// dt from the header or from the caller. Values are written in the shortest
/// form that parses back to the same double, so samples round-trip bit-exactly.
void write_trace(std::ostream& out, const Trace& trace);
void export_trace(const Trace& trace, const std::filesystem::path& path);

Trace read_trace(std::istream& in, TraceFormat format,
                 std::optional<double> sample_interval = std::nullopt);
Trace ingest_trace(const std::filesystem::path& path, TraceFormat format,
                   std::optional<double> sample_interval = std::nullopt);

/// Column-oriented numeric table written as CSV with '#' comment lines and a
/// "# columns:" line naming each column with its unit.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_table(std::ostream& out, const Table& table);
void write_table(const std::filesystem::path& path, const Table& table);
Table read_table(std::istream& in);
Table read_table(const std::filesystem::path& path);

/// Formats with enough digits to round-trip a double.
std::string format_number(double value);

}  // namespace pulsenoise
