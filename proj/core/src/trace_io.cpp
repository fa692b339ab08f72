#include "pulsenoise/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "pulsenoise/errors.hpp"

namespace pulsenoise {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find_first_of(",;\t", pos);
    fields.push_back(trim(line.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return fields;
}

double header_number(const std::map<std::string, std::string>& header, const std::string& key,
                     int line) {
  const auto value = parse_double(header.at(key));
  if (!value) throw IngestError("line " + std::to_string(line) + ": malformed header value for '" + key + "'");
  return *value;
}

}  // namespace

std::string format_number(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

TraceFormat parse_trace_format(std::string_view name) {
  if (name == "csv_two_column" || name == "two-column" || name == "csv")
    return TraceFormat::csv_two_column;
  if (name == "csv_amplitude_only" || name == "amplitude-only" || name == "amplitude")
    return TraceFormat::csv_amplitude_only;
  throw ConfigError("unknown trace format '" + std::string(name) +
                    "' (expected csv_two_column or csv_amplitude_only)");
}

void write_trace(std::ostream& out, const Trace& trace) {
  out << "# dt: " << format_number(trace.sample_interval) << '\n';
  out << "# unit: " << trace.unit << '\n';
  out << "# origin_time: " << format_number(trace.origin_time) << '\n';
  if (trace.electrons_per_unit)
    out << "# electrons_per_unit: " << format_number(*trace.electrons_per_unit) << '\n';
  out << "# samples: " << trace.samples.size() << '\n';
  out << "# columns: time_s," << "value_" << trace.unit << '\n';
  for (std::size_t i = 0; i < trace.samples.size(); ++i)
    out << format_number(trace.time_at(i)) << ',' << format_number(trace.samples[i]) << '\n';
}

void export_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_trace(out, trace);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Trace read_trace(std::istream& in, TraceFormat format, std::optional<double> sample_interval) {
  std::map<std::string, std::string> header;
  std::map<std::string, int> header_line;
  std::vector<double> times;
  std::vector<int> time_lines;
  std::vector<double> values;

  std::string raw;
  int line_number = 0;
  while (std::getline(in, raw)) {
    ++line_number;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      const auto colon = body.find(':');
      if (colon != std::string_view::npos) {
        const std::string key(trim(body.substr(0, colon)));
        header[key] = std::string(trim(body.substr(colon + 1)));
        header_line[key] = line_number;
      }
      continue;
    }
    const auto fields = split_fields(line);
    const std::size_t expected = format == TraceFormat::csv_two_column ? 2 : 1;
    if (fields.size() != expected)
      throw IngestError("line " + std::to_string(line_number) + ": expected " +
                        std::to_string(expected) + " column(s), found " +
                        std::to_string(fields.size()));
    for (std::size_t f = 0; f < expected; ++f)
      if (!parse_double(fields[f]))
        throw IngestError("line " + std::to_string(line_number) + ": malformed number '" +
                          std::string(fields[f]) + "'");
    if (format == TraceFormat::csv_two_column) {
      times.push_back(*parse_double(fields[0]));
      time_lines.push_back(line_number);
      values.push_back(*parse_double(fields[1]));
    } else {
      values.push_back(*parse_double(fields[0]));
    }
  }
  if (values.empty()) throw IngestError("trace contains no samples");

  Trace trace;
  trace.samples = std::move(values);
  trace.unit = header.count("unit") ? header["unit"] : "arbitrary";
  trace.electrons_per_unit.reset();
  if (header.count("electrons_per_unit"))
    trace.electrons_per_unit =
        header_number(header, "electrons_per_unit", header_line["electrons_per_unit"]);
  if (header.count("samples")) {
    const double declared = header_number(header, "samples", header_line["samples"]);
    if (declared != static_cast<double>(trace.samples.size()))
      throw IngestError("header declares " + header["samples"] + " samples but the file holds " +
                        std::to_string(trace.samples.size()));
  }
  std::optional<double> header_dt;
  if (header.count("dt")) header_dt = header_number(header, "dt", header_line["dt"]);

  if (format == TraceFormat::csv_two_column) {
    const std::size_t n = times.size();
    if (n < 2 && !header_dt) throw IngestError("two-column trace needs two rows or a dt header");
    const double dt = header_dt ? *header_dt : times[1] - times[0];
    if (!(dt > 0.0)) throw IngestError("time column is not increasing");
    for (std::size_t i = 1; i < n; ++i) {
      const double step = times[i] - times[i - 1];
      if (std::abs(step - dt) > 1e-6 * dt)
        throw IngestError("line " + std::to_string(time_lines[i]) +
                          ": non-uniform sampling (step " + format_number(step) +
                          " s, expected " + format_number(dt) + " s)");
    }
    trace.sample_interval =
        header_dt || n < 2 ? dt : (times.back() - times.front()) / static_cast<double>(n - 1);
    trace.origin_time = times.front();
  } else {
    const auto dt = sample_interval ? sample_interval : header_dt;
    if (!dt) throw IngestError("amplitude-only trace needs a sample interval (dt flag or header)");
    if (!(*dt > 0.0)) throw IngestError("sample interval must be > 0");
    trace.sample_interval = *dt;
    trace.origin_time =
        header.count("origin_time") ? header_number(header, "origin_time", header_line["origin_time"]) : 0.0;
  }
  return trace;
}

Trace ingest_trace(const std::filesystem::path& path, TraceFormat format,
                   std::optional<double> sample_interval) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");
  return read_trace(in, format, sample_interval);
}

void write_table(std::ostream& out, const Table& table) {
  for (const auto& comment : table.comments) out << "# " << comment << '\n';
  out << "# columns: ";
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw IoError("table row has " + std::to_string(row.size()) + " values for " +
                    std::to_string(table.columns.size()) + " columns");
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
    out << '\n';
  }
}

void write_table(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_table(out, table);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Table read_table(std::istream& in) {
  Table table;
  std::string raw;
  int line_number = 0;
  while (std::getline(in, raw)) {
    ++line_number;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      if (body.rfind("columns:", 0) == 0) {
        for (auto field : split_fields(trim(body.substr(8)))) table.columns.emplace_back(field);
      } else {
        table.comments.emplace_back(body);
      }
      continue;
    }
    std::vector<double> row;
    for (auto field : split_fields(line)) {
      const auto value = parse_double(field);
      if (!value)
        throw IngestError("line " + std::to_string(line_number) + ": malformed number '" +
                          std::string(field) + "'");
      row.push_back(*value);
    }
    if (!table.columns.empty() && row.size() != table.columns.size())
      throw IngestError("line " + std::to_string(line_number) + ": expected " +
                        std::to_string(table.columns.size()) + " values");
    table.rows.push_back(std::move(row));
  }
  return table;
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");
  return read_table(in);
}

}  // namespace pulsenoise
