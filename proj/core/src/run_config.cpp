#include "pulsenoise/run_config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "pulsenoise/errors.hpp"

namespace pulsenoise {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& object, const std::set<std::string>& known, const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : object.items())
    if (!known.count(item.key()))
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

template <typename T>
void read(const json& object, const char* key, T& target, const std::string& where) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <typename T>
void read_optional(const json& object, const char* key, std::optional<T>& target,
                   const std::string& where) {
  if (!object.contains(key) || object.at(key).is_null()) return;
  T value{};
  read(object, key, value, where);
  target = value;
}

SweepRange parse_sweep(const json& object, const std::string& where) {
  reject_unknown(object, {"start", "stop", "step"}, where);
  SweepRange range;
  read(object, "start", range.start, where);
  read(object, "stop", range.stop, where);
  read(object, "step", range.step, where);
  return range;
}

json sweep_to_json(const SweepRange& range) {
  return {{"start", range.start}, {"stop", range.stop}, {"step", range.step}};
}

CoherentPulseTrainSpec parse_pulse(const json& object) {
  const std::string where = "pulse";
  reject_unknown(object,
                 {"mean_photons_per_pulse", "pulse_duration", "repetition_period", "pulse_count",
                  "imbalance_fraction", "quantum_efficiency"},
                 where);
  CoherentPulseTrainSpec spec;
  read(object, "mean_photons_per_pulse", spec.mean_photons_per_pulse, where);
  read(object, "pulse_duration", spec.pulse_duration, where);
  read(object, "repetition_period", spec.repetition_period, where);
  read(object, "pulse_count", spec.pulse_count, where);
  read(object, "imbalance_fraction", spec.imbalance_fraction, where);
  read(object, "quantum_efficiency", spec.quantum_efficiency, where);
  return spec;
}

DetectorChainConfig parse_chain(const json& object) {
  const std::string where = "chain";
  reject_unknown(object,
                 {"preset", "integrator_discharge", "shaping_time", "shaper_order",
                  "pole_zero_residual", "enc_electrons", "sample_interval",
                  "analog_bandwidth_limit", "ac_coupling_time", "reference_pulse_duration",
                  "quantizer_full_scale"},
                 where);
  DetectorChainConfig chain = version_one_preset();
  if (object.contains("preset")) {
    std::string preset;
    read(object, "preset", preset, where);
    if (preset == "version_one" || preset == "version-one" || preset == "I")
      chain = version_one_preset();
    else if (preset == "version_two" || preset == "version-two" || preset == "II")
      chain = version_two_preset();
    else
      throw ConfigError("chain.preset: unknown preset '" + preset + "'");
  }
  read(object, "integrator_discharge", chain.integrator_discharge, where);
  read(object, "shaping_time", chain.shaping_time, where);
  read(object, "shaper_order", chain.shaper_order, where);
  read(object, "pole_zero_residual", chain.pole_zero_residual, where);
  read(object, "enc_electrons", chain.enc_electrons, where);
  read(object, "sample_interval", chain.sample_interval, where);
  read(object, "analog_bandwidth_limit", chain.analog_bandwidth_limit, where);
  read(object, "ac_coupling_time", chain.ac_coupling_time, where);
  read(object, "reference_pulse_duration", chain.reference_pulse_duration, where);
  read_optional(object, "quantizer_full_scale", chain.quantizer_full_scale, where);
  return chain;
}

WindowSpec parse_window(const json& object) {
  const std::string where = "window";
  reject_unknown(object, {"kind", "duration", "offset"}, where);
  WindowSpec window;
  if (object.contains("kind")) {
    std::string kind;
    read(object, "kind", kind, where);
    window.kind = parse_window_kind(kind);
  }
  read(object, "duration", window.duration, where);
  read_optional(object, "offset", window.offset, where);
  return window;
}

AnalysisSpec parse_analysis(const json& object) {
  const std::string where = "analysis";
  reject_unknown(object,
                 {"photon_numbers", "psd_segment_length", "duration_sweep", "offset_sweep",
                  "write_trace", "both_windows"},
                 where);
  AnalysisSpec analysis;
  read(object, "photon_numbers", analysis.photon_numbers, where);
  read(object, "psd_segment_length", analysis.psd_segment_length, where);
  if (object.contains("duration_sweep"))
    analysis.duration_sweep = parse_sweep(object.at("duration_sweep"), "analysis.duration_sweep");
  if (object.contains("offset_sweep"))
    analysis.offset_sweep = parse_sweep(object.at("offset_sweep"), "analysis.offset_sweep");
  read(object, "write_trace", analysis.write_trace, where);
  read(object, "both_windows", analysis.both_windows, where);
  return analysis;
}

IngestSpec parse_ingest(const json& object) {
  const std::string where = "ingest";
  reject_unknown(object, {"path", "format", "sample_interval"}, where);
  IngestSpec ingest;
  std::string path;
  read(object, "path", path, where);
  ingest.path = path;
  if (object.contains("format")) {
    std::string format;
    read(object, "format", format, where);
    ingest.format = parse_trace_format(format);
  }
  read_optional(object, "sample_interval", ingest.sample_interval, where);
  return ingest;
}

std::uint64_t fnv1a(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// Re-raises module errors with the pipeline stage prepended.
template <typename F>
auto staged(const std::string& stage, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  } catch (const IngestError& e) {
    throw IngestError(stage + ": " + e.what());
  } catch (const AnalysisError& e) {
    throw AnalysisError(stage + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(stage + ": " + e.what());
  }
}

std::string units_label(const Trace& trace) {
  return trace.calibrated() ? std::string("photoelectrons") : trace.unit;
}

Table scaling_table(const NoiseScalingResult& fit, const ClassicalNoiseReport& report,
                    WindowKind kind) {
  Table table;
  table.comments = {
      "noise scaling, window " + to_string(kind),
      "electronic_variance: " + format_number(fit.electronic_variance) + " +- " +
          format_number(fit.electronic_variance_error),
      "linear_coeff: " + format_number(fit.linear_coeff) + " +- " + format_number(fit.linear_error),
      "quadratic_coeff: " + format_number(fit.quadratic_coeff) + " +- " +
          format_number(fit.quadratic_error),
      "loglog_slope: " + format_number(fit.loglog_slope) + " over " +
          std::to_string(fit.loglog_points) + " points",
      "n_3db: " + format_number(fit.n_3db),
      "enc_electrons: " + format_number(fit.enc),
      std::string("classical_contamination: ") + (report.contaminated ? "yes" : "no") +
          " (quadratic share " + format_number(report.quadratic_share) + ")",
  };
  table.columns = {"photon_number", "variance_pe2", "model_pe2", "electronic_pe2",
                   "linear_pe2", "quadratic_pe2", "pulse_count"};
  for (std::size_t i = 0; i < fit.photon_numbers.size(); ++i) {
    const double n = fit.photon_numbers[i];
    table.rows.push_back({n, fit.variances[i], fit.model(n), fit.electronic_variance,
                          fit.linear_coeff * n, fit.quadratic_coeff * n * n,
                          static_cast<double>(fit.pulse_counts[i])});
  }
  return table;
}

}  // namespace

void RunConfig::validate() const {
  pulse.validate();
  chain.validate();
  GatingWindow{window.kind, window.duration, window.offset.value_or(0.0)}.validate();
  const std::size_t l = analysis.psd_segment_length;
  if (l < 2 || (l & (l - 1)) != 0)
    throw ConfigError("analysis.psd_segment_length must be a power of two");
  if (!analysis.photon_numbers.empty()) {
    if (analysis.photon_numbers.size() < 3)
      throw ConfigError("analysis.photon_numbers needs at least three values");
    double lo = analysis.photon_numbers.front();
    double hi = lo;
    for (double n : analysis.photon_numbers) {
      if (!(n > 0.0)) throw ConfigError("analysis.photon_numbers must be > 0");
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    if (hi < 100.0 * lo * (1.0 - 1e-9))
      throw ConfigError("analysis.photon_numbers must span at least two decades");
    if (pulse.pulse_count < 500)
      throw ConfigError("noise scaling needs pulse.pulse_count >= 500");
  }
  for (const auto* sweep : {&analysis.duration_sweep, &analysis.offset_sweep})
    if (*sweep && (!((*sweep)->step > 0.0) || (*sweep)->stop < (*sweep)->start))
      throw ConfigError("analysis sweep ranges need step > 0 and stop >= start");
  if (analysis.duration_sweep.has_value() != analysis.offset_sweep.has_value())
    throw ConfigError("analysis.duration_sweep and analysis.offset_sweep must be given together");
  if (analysis.duration_sweep && !(pulse.mean_photons_per_pulse > 0.0))
    throw ConfigError("window optimization needs pulse.mean_photons_per_pulse > 0");
  if (source == TraceSource::ingest) {
    if (ingest.path.empty()) throw ConfigError("ingest.path is required for source 'ingest'");
    if (ingest.sample_interval && !(*ingest.sample_interval > 0.0))
      throw ConfigError("ingest.sample_interval must be > 0");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root,
                 {"source", "pulse", "chain", "window", "analysis", "ingest", "seed", "output_dir"},
                 "config");
  RunConfig config;
  if (root.contains("source")) {
    std::string source;
    read(root, "source", source, "config");
    if (source == "simulate")
      config.source = TraceSource::simulate;
    else if (source == "ingest")
      config.source = TraceSource::ingest;
    else
      throw ConfigError("config.source: expected 'simulate' or 'ingest'");
  }
  if (root.contains("pulse")) config.pulse = parse_pulse(root.at("pulse"));
  if (root.contains("chain")) config.chain = parse_chain(root.at("chain"));
  if (root.contains("window")) config.window = parse_window(root.at("window"));
  if (root.contains("analysis")) config.analysis = parse_analysis(root.at("analysis"));
  if (root.contains("ingest")) config.ingest = parse_ingest(root.at("ingest"));
  read(root, "seed", config.seed, "config");
  std::string output_dir = config.output_dir.string();
  read(root, "output_dir", output_dir, "config");
  config.output_dir = output_dir;
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::string run_config_to_json(const RunConfig& config) {
  const auto& p = config.pulse;
  const auto& c = config.chain;
  const auto& a = config.analysis;
  json root;
  root["source"] = config.source == TraceSource::simulate ? "simulate" : "ingest";
  root["seed"] = config.seed;
  root["output_dir"] = config.output_dir.generic_string();
  root["pulse"] = {{"mean_photons_per_pulse", p.mean_photons_per_pulse},
                   {"pulse_duration", p.pulse_duration},
                   {"repetition_period", p.repetition_period},
                   {"pulse_count", p.pulse_count},
                   {"imbalance_fraction", p.imbalance_fraction},
                   {"quantum_efficiency", p.quantum_efficiency}};
  root["chain"] = {{"integrator_discharge", c.integrator_discharge},
                   {"shaping_time", c.shaping_time},
                   {"shaper_order", c.shaper_order},
                   {"pole_zero_residual", c.pole_zero_residual},
                   {"enc_electrons", c.enc_electrons},
                   {"sample_interval", c.sample_interval},
                   {"analog_bandwidth_limit", c.analog_bandwidth_limit},
                   {"ac_coupling_time", c.ac_coupling_time},
                   {"reference_pulse_duration", c.reference_pulse_duration}};
  if (c.quantizer_full_scale) root["chain"]["quantizer_full_scale"] = *c.quantizer_full_scale;
  root["window"] = {{"kind", to_string(config.window.kind)}, {"duration", config.window.duration}};
  if (config.window.offset) root["window"]["offset"] = *config.window.offset;
  root["analysis"] = {{"photon_numbers", a.photon_numbers},
                      {"psd_segment_length", a.psd_segment_length},
                      {"write_trace", a.write_trace},
                      {"both_windows", a.both_windows}};
  if (a.duration_sweep) root["analysis"]["duration_sweep"] = sweep_to_json(*a.duration_sweep);
  if (a.offset_sweep) root["analysis"]["offset_sweep"] = sweep_to_json(*a.offset_sweep);
  if (config.source == TraceSource::ingest) {
    root["ingest"] = {{"path", config.ingest.path.generic_string()},
                      {"format", config.ingest.format == TraceFormat::csv_two_column
                                     ? "csv_two_column"
                                     : "csv_amplitude_only"}};
    if (config.ingest.sample_interval)
      root["ingest"]["sample_interval"] = *config.ingest.sample_interval;
  }
  return root.dump(2);
}

GatingWindow resolve_window(const RunConfig& config) {
  if (config.window.offset)
    return GatingWindow{config.window.kind, config.window.duration, *config.window.offset};
  return align_window(config.pulse, config.chain, config.window.kind, config.window.duration);
}

PipelineArtifacts run_pipeline(const RunConfig& config) {
  config.validate();
  const auto& dir = config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory '" + dir.string() + "'");

  PipelineArtifacts artifacts;
  auto emit = [&](const std::string& name, const Table& table) {
    const auto path = dir / name;
    write_table(path, table);
    artifacts.files.push_back(path);
  };

  const bool simulate = config.source == TraceSource::simulate;
  const Trace trace = staged(simulate ? "simulate" : "ingest", [&] {
    if (!simulate)
      return ingest_trace(config.ingest.path, config.ingest.format, config.ingest.sample_interval);
    const auto pulses = sample_pulse_train(config.pulse, config.seed);
    return synthesize_trace(pulses, config.pulse, config.chain, config.seed);
  });
  if (simulate && config.analysis.write_trace) {
    staged("export", [&] { export_trace(trace, dir / "trace.csv"); });
    artifacts.files.push_back(dir / "trace.csv");
  }

  const GatingWindow window = staged("window", [&] { return resolve_window(config); });
  const std::string units = units_label(trace);

  staged("analyze", [&] {
    const PulseAreas areas =
        integrate_window(trace, window, config.pulse.repetition_period, config.pulse.pulse_count);
    const auto normalized = areas.normalized();
    Table table;
    table.comments = {"pulse areas, window " + to_string(window.kind) + ", duration " +
                          format_number(areas.window.duration) + " s, centre " +
                          format_number(areas.window.offset) + " s",
                      "variance: " + format_number(pulse_variance(areas)) + " " + units + "^2"};
    table.columns = {"pulse_index", "area_" + units, "normalized_area_" + trace.unit};
    for (std::size_t i = 0; i < areas.areas.size(); ++i)
      table.rows.push_back({static_cast<double>(i), areas.areas[i], normalized[i]});
    emit("pulse_areas.csv", table);
  });

  staged("spectrum", [&] {
    const auto psd = estimate_psd(trace, config.analysis.psd_segment_length);
    Table table;
    table.comments = {"one-sided power spectral density, " + std::to_string(psd.segment_count) +
                      " segments"};
    table.columns = {"frequency_hz", "power_density_" + trace.unit + "2_per_hz"};
    for (std::size_t k = 0; k < psd.frequencies.size(); ++k)
      table.rows.push_back({psd.frequencies[k], psd.power_density[k]});
    emit("spectrum.csv", table);
  });

  if (simulate) {
    staged("predict", [&] {
      const Trace dark = synthesize_trace({}, config.pulse, config.chain, derive_seed(config.seed, 1));
      const auto psd = estimate_psd(dark, config.analysis.psd_segment_length);
      Table table;
      table.comments = {"pulse-area variance of a light-free trace: spectral prediction vs direct"};
      table.columns = {"window_dcs", "duration_s", "predicted_pe2", "measured_pe2"};
      for (WindowKind kind : {WindowKind::boxcar, WindowKind::dcs}) {
        GatingWindow w = window;
        w.kind = kind;
        const double measured = pulse_variance(
            integrate_window(dark, w, config.pulse.repetition_period, config.pulse.pulse_count));
        table.rows.push_back({kind == WindowKind::dcs ? 1.0 : 0.0, w.duration,
                              predict_pulsed_noise(psd, w), measured});
      }
      emit("prediction.csv", table);
    });

    if (!config.analysis.photon_numbers.empty()) {
      staged("scaling", [&] {
        std::vector<CoherentPulseTrainSpec> grid;
        for (double n : config.analysis.photon_numbers) {
          CoherentPulseTrainSpec spec = config.pulse;
          spec.mean_photons_per_pulse = n;
          grid.push_back(spec);
        }
        std::vector<GatingWindow> windows{window};
        if (config.analysis.both_windows) {
          const WindowKind other =
              window.kind == WindowKind::boxcar ? WindowKind::dcs : WindowKind::boxcar;
          windows.push_back(config.window.offset
                                ? GatingWindow{other, window.duration, window.offset}
                                : align_window(config.pulse, config.chain, other, window.duration));
        }
        for (const auto& w : windows) {
          const auto fit = noise_scaling(grid, config.chain, w, config.seed);
          emit("scaling_" + to_string(w.kind) + ".csv",
               scaling_table(fit, classical_noise_check(fit), w.kind));
        }
      });
    }

    if (config.analysis.duration_sweep && config.analysis.offset_sweep) {
      staged("optimize-window", [&] {
        const auto opt =
            optimize_window(config.pulse, config.chain, window.kind,
                            *config.analysis.duration_sweep, *config.analysis.offset_sweep,
                            config.seed);
        Table table;
        table.comments = {"n_3db surface, window " + to_string(window.kind),
                          "best: duration " + format_number(opt.best.duration) + " s, centre " +
                              format_number(opt.best.offset) + " s, n_3db " +
                              format_number(opt.best_n_3db)};
        table.columns = {"duration_s", "offset_s", "n_3db"};
        for (const auto& pt : opt.surface) table.rows.push_back({pt.duration, pt.offset, pt.n_3db});
        emit("window_surface_" + to_string(window.kind) + ".csv", table);
      });
    }
  }

  json manifest;
  manifest["tool"] = "pulsenoise";
  manifest["version"] = version();
  manifest["seed"] = config.seed;
  manifest["config"] = json::parse(run_config_to_json(config));
  manifest["files"] = json::array();
  for (const auto& path : artifacts.files) {
    std::ostringstream hash;
    hash << std::hex << fnv1a(path);
    manifest["files"].push_back({{"name", path.filename().generic_string()},
                                 {"bytes", std::filesystem::file_size(path)},
                                 {"fnv1a64", hash.str()}});
  }
  artifacts.manifest = dir / "manifest.json";
  std::ofstream out(artifacts.manifest, std::ios::binary);
  if (!out) throw IoError("cannot write '" + artifacts.manifest.string() + "'");
  out << manifest.dump(2) << '\n';
  return artifacts;
}

std::string version() { return PULSENOISE_VERSION; }

}  // namespace pulsenoise
