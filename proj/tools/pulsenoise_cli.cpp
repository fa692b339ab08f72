#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pulsenoise/errors.hpp"
#include "pulsenoise/run_config.hpp"

namespace pn = pulsenoise;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kIngest = 3, kAnalysis = 4, kIo = 5 };

bool pulse_count_given = false;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  std::optional<double> photons;
  std::optional<int> pulses;
  std::optional<double> pulse_duration;
  std::optional<double> period;
  std::optional<double> imbalance;
  std::optional<double> eta;

  std::optional<std::string> preset;
  std::optional<double> enc;
  std::optional<double> shaping_time;
  std::optional<int> shaper_order;
  std::optional<double> pz_residual;
  std::optional<double> tau_i;
  std::optional<double> dt;
  std::optional<double> quantizer;

  std::optional<std::string> window;
  std::optional<double> sigma;
  std::optional<double> offset;

  std::optional<std::string> trace;
  std::optional<std::string> format;
  std::optional<double> trace_dt;

  std::optional<std::size_t> segment_length;
  std::vector<double> photon_numbers;
  std::vector<double> duration_sweep;
  std::vector<double> offset_sweep;
  bool both_windows = false;
  bool no_trace = false;
};

void add_shared_options(CLI::App& app, Overrides& o) {
  app.add_option("-c,--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("-o,--out", o.out, "Output directory");

  app.add_option("--photons", o.photons, "Mean photons per pulse")->group("Pulse train");
  app.add_option("--pulses", o.pulses, "Pulse count")->group("Pulse train");
  app.add_option("--pulse-duration", o.pulse_duration, "Pulse duration [s]")->group("Pulse train");
  app.add_option("--period", o.period, "Repetition period [s]")->group("Pulse train");
  app.add_option("--imbalance", o.imbalance, "Imbalance fraction")->group("Pulse train");
  app.add_option("--eta", o.eta, "Quantum efficiency")->group("Pulse train");

  app.add_option("--preset", o.preset, "Chain preset (version_one, version_two)")->group("Chain");
  app.add_option("--enc", o.enc, "Electronic noise [electrons rms]")->group("Chain");
  app.add_option("--shaping-time", o.shaping_time, "Shaping time [s]")->group("Chain");
  app.add_option("--shaper-order", o.shaper_order, "Number of RC stages")->group("Chain");
  app.add_option("--pz-residual", o.pz_residual, "Pole/zero residual")->group("Chain");
  app.add_option("--tau-i", o.tau_i, "Integrator discharge time [s]")->group("Chain");
  app.add_option("--dt", o.dt, "Sample interval [s]")->group("Chain");
  app.add_option("--quantizer", o.quantizer, "8 bit ADC full scale")->group("Chain");

  app.add_option("--window", o.window, "Window kind (boxcar, dcs)")->group("Window");
  app.add_option("--sigma", o.sigma, "Window duration [s]")->group("Window");
  app.add_option("--offset", o.offset, "Window centre after pulse start [s]")->group("Window");

  app.add_option("--trace", o.trace, "Analyse this trace file instead of simulating")
      ->group("Input");
  app.add_option("--format", o.format, "csv_two_column or csv_amplitude_only")->group("Input");
  app.add_option("--trace-dt", o.trace_dt, "Sample interval for amplitude-only files [s]")
      ->group("Input");

  app.add_option("--segment-length", o.segment_length, "PSD segment length (power of two)")
      ->group("Analysis");
  app.add_option("--photon-numbers", o.photon_numbers, "Scaling grid")
      ->delimiter(',')
      ->group("Analysis");
  app.add_option("--duration-sweep", o.duration_sweep, "start,stop,step [s]")
      ->delimiter(',')
      ->expected(3)
      ->group("Analysis");
  app.add_option("--offset-sweep", o.offset_sweep, "start,stop,step [s]")
      ->delimiter(',')
      ->expected(3)
      ->group("Analysis");
  app.add_flag("--both-windows", o.both_windows, "Scaling tables for boxcar and dcs")
      ->group("Analysis");
  app.add_flag("--no-trace", o.no_trace, "Do not export the simulated trace")->group("Analysis");
}

template <typename T>
void apply(const std::optional<T>& value, T& target) {
  if (value) target = *value;
}

pn::SweepRange to_sweep(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

pn::RunConfig build_config(const Overrides& o) {
  pn::RunConfig config;
  if (!o.config_path.empty()) config = pn::load_run_config(o.config_path);
  apply(o.seed, config.seed);
  if (o.out) config.output_dir = *o.out;

  apply(o.photons, config.pulse.mean_photons_per_pulse);
  apply(o.pulses, config.pulse.pulse_count);
  pulse_count_given = o.pulses.has_value() || !o.config_path.empty();
  apply(o.pulse_duration, config.pulse.pulse_duration);
  apply(o.period, config.pulse.repetition_period);
  apply(o.imbalance, config.pulse.imbalance_fraction);
  apply(o.eta, config.pulse.quantum_efficiency);

  if (o.preset) {
    if (*o.preset == "version_one")
      config.chain = pn::version_one_preset();
    else if (*o.preset == "version_two")
      config.chain = pn::version_two_preset();
    else
      throw pn::ConfigError("unknown preset '" + *o.preset + "'");
  }
  apply(o.enc, config.chain.enc_electrons);
  apply(o.shaping_time, config.chain.shaping_time);
  apply(o.shaper_order, config.chain.shaper_order);
  apply(o.pz_residual, config.chain.pole_zero_residual);
  apply(o.tau_i, config.chain.integrator_discharge);
  apply(o.dt, config.chain.sample_interval);
  if (o.quantizer) config.chain.quantizer_full_scale = *o.quantizer;

  if (o.window) config.window.kind = pn::parse_window_kind(*o.window);
  apply(o.sigma, config.window.duration);
  if (o.offset) config.window.offset = *o.offset;

  if (o.trace) {
    config.source = pn::TraceSource::ingest;
    config.ingest.path = *o.trace;
  }
  if (o.format) config.ingest.format = pn::parse_trace_format(*o.format);
  if (o.trace_dt) config.ingest.sample_interval = *o.trace_dt;

  apply(o.segment_length, config.analysis.psd_segment_length);
  if (!o.photon_numbers.empty()) config.analysis.photon_numbers = o.photon_numbers;
  if (!o.duration_sweep.empty()) config.analysis.duration_sweep = to_sweep(o.duration_sweep);
  if (!o.offset_sweep.empty()) config.analysis.offset_sweep = to_sweep(o.offset_sweep);
  if (o.both_windows) config.analysis.both_windows = true;
  if (o.no_trace) config.analysis.write_trace = false;

  config.validate();
  return config;
}

std::filesystem::path prepare_output(const pn::RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec || !std::filesystem::is_directory(config.output_dir))
    throw pn::IoError("cannot create output directory '" + config.output_dir.string() + "'");
  return config.output_dir;
}

pn::Trace load_trace(const pn::RunConfig& config, bool light) {
  if (config.source == pn::TraceSource::ingest)
    return pn::ingest_trace(config.ingest.path, config.ingest.format,
                            config.ingest.sample_interval);
  for (const auto& warning : pn::chain_warnings(config.chain, config.pulse))
    std::cerr << "warning: " << warning << '\n';
  if (!light) return pn::synthesize_trace({}, config.pulse, config.chain, config.seed);
  const auto pulses = pn::sample_pulse_train(config.pulse, config.seed);
  return pn::synthesize_trace(pulses, config.pulse, config.chain, config.seed);
}

// Ingested traces without an explicit count use every pulse that fits.
int pulse_count(const pn::RunConfig& config, const pn::Trace& trace,
                const pn::GatingWindow& window) {
  if (config.source == pn::TraceSource::simulate || pulse_count_given)
    return config.pulse.pulse_count;
  return pn::pulses_in_trace(trace, window, config.pulse.repetition_period);
}

void require_simulation(const pn::RunConfig& config, const char* command) {
  if (config.source != pn::TraceSource::simulate)
    throw pn::ConfigError(std::string(command) + " works on simulated traces only");
}

int cmd_simulate(const pn::RunConfig& config) {
  const auto dir = prepare_output(config);
  const pn::Trace trace = load_trace(config, true);
  pn::export_trace(trace, dir / "trace.csv");
  std::cout << "wrote " << (dir / "trace.csv").string() << " (" << trace.samples.size()
            << " samples)\n";
  return kOk;
}

int cmd_analyze(const pn::RunConfig& config) {
  const auto dir = prepare_output(config);
  const pn::Trace trace = load_trace(config, true);
  const pn::GatingWindow window = pn::resolve_window(config);
  const auto areas = pn::integrate_window(trace, window, config.pulse.repetition_period,
                                          pulse_count(config, trace, window));
  const std::string units = trace.calibrated() ? "photoelectrons" : trace.unit;
  pn::Table table;
  table.comments = {"pulse areas, window " + pn::to_string(window.kind)};
  table.columns = {"pulse_index", "area_" + units, "normalized_area_" + trace.unit};
  const auto normalized = areas.normalized();
  for (std::size_t i = 0; i < areas.areas.size(); ++i)
    table.rows.push_back({static_cast<double>(i), areas.areas[i], normalized[i]});
  pn::write_table(dir / "pulse_areas.csv", table);
  std::cout << "window " << pn::to_string(window.kind) << " duration "
            << pn::format_number(areas.window.duration) << " s centre "
            << pn::format_number(areas.window.offset) << " s\n"
            << "pulse-area variance " << pn::format_number(pn::pulse_variance(areas)) << ' '
            << units << "^2\n";
  return kOk;
}

int cmd_spectrum(const pn::RunConfig& config) {
  const auto dir = prepare_output(config);
  const pn::Trace trace = load_trace(config, true);
  const auto psd = pn::estimate_psd(trace, config.analysis.psd_segment_length);
  pn::Table table;
  table.comments = {"one-sided power spectral density, " + std::to_string(psd.segment_count) +
                    " segments"};
  table.columns = {"frequency_hz", "power_density_" + trace.unit + "2_per_hz"};
  for (std::size_t k = 0; k < psd.frequencies.size(); ++k)
    table.rows.push_back({psd.frequencies[k], psd.power_density[k]});
  pn::write_table(dir / "spectrum.csv", table);
  std::cout << "wrote " << (dir / "spectrum.csv").string() << " (" << psd.frequencies.size()
            << " bins, " << psd.segment_count << " segments)\n";
  return kOk;
}

int cmd_predict(const pn::RunConfig& config) {
  const auto dir = prepare_output(config);
  const pn::Trace trace = load_trace(config, false);
  const auto psd = pn::estimate_psd(trace, config.analysis.psd_segment_length);
  const pn::GatingWindow window = pn::resolve_window(config);
  const double predicted = pn::predict_pulsed_noise(psd, window);
  const double measured = pn::pulse_variance(pn::integrate_window(
      trace, window, config.pulse.repetition_period, pulse_count(config, trace, window)));
  pn::Table table;
  table.comments = {"pulse-area variance: spectral prediction vs direct, window " +
                    pn::to_string(window.kind)};
  table.columns = {"duration_s", "predicted", "measured"};
  table.rows.push_back({window.duration, predicted, measured});
  pn::write_table(dir / "prediction.csv", table);
  std::cout << "predicted " << pn::format_number(predicted) << " measured "
            << pn::format_number(measured) << " ratio " << pn::format_number(predicted / measured)
            << '\n';
  return kOk;
}

int cmd_optimize(const pn::RunConfig& config) {
  require_simulation(config, "optimize-window");
  const auto& a = config.analysis;
  if (!a.duration_sweep || !a.offset_sweep)
    throw pn::ConfigError("optimize-window needs --duration-sweep and --offset-sweep");
  const auto dir = prepare_output(config);
  const auto opt = pn::optimize_window(config.pulse, config.chain, config.window.kind,
                                       *a.duration_sweep, *a.offset_sweep, config.seed);
  pn::Table table;
  table.comments = {"n_3db surface, window " + pn::to_string(config.window.kind)};
  table.columns = {"duration_s", "offset_s", "n_3db"};
  for (const auto& p : opt.surface) table.rows.push_back({p.duration, p.offset, p.n_3db});
  const auto name = "window_surface_" + pn::to_string(config.window.kind) + ".csv";
  pn::write_table(dir / name, table);
  std::cout << "best duration " << pn::format_number(opt.best.duration) << " s centre "
            << pn::format_number(opt.best.offset) << " s n_3db "
            << pn::format_number(opt.best_n_3db) << '\n';
  return kOk;
}

int cmd_scaling(const pn::RunConfig& config) {
  require_simulation(config, "scaling");
  if (config.analysis.photon_numbers.empty())
    throw pn::ConfigError("scaling needs --photon-numbers");
  pn::RunConfig run = config;
  run.analysis.write_trace = false;
  run.analysis.duration_sweep.reset();
  run.analysis.offset_sweep.reset();
  const auto artifacts = pn::run_pipeline(run);
  for (const auto& path : artifacts.files) {
    if (path.filename().string().rfind("scaling_", 0) != 0) continue;
    const auto table = pn::read_table(path);
    std::cout << path.filename().string() << '\n';
    for (const auto& line : table.comments) std::cout << "  " << line << '\n';
  }
  return kOk;
}

int cmd_ingest_check(const pn::RunConfig& config) {
  if (config.source != pn::TraceSource::ingest)
    throw pn::ConfigError("ingest-check needs --trace or an ingest config");
  const pn::Trace trace = load_trace(config, true);
  std::cout << "samples " << trace.samples.size() << "\n"
            << "dt " << pn::format_number(trace.sample_interval) << " s\n"
            << "origin_time " << pn::format_number(trace.origin_time) << " s\n"
            << "unit " << trace.unit << "\n"
            << "calibrated " << (trace.calibrated() ? "yes" : "no") << '\n';
  return kOk;
}

int cmd_run(const pn::RunConfig& config) {
  const auto artifacts = pn::run_pipeline(config);
  for (const auto& path : artifacts.files) std::cout << "wrote " << path.string() << '\n';
  std::cout << "wrote " << artifacts.manifest.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pulsed balanced-detector noise simulator and analyser"};
  app.set_version_flag("--version", pn::version());
  app.require_subcommand(1);

  Overrides overrides;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const pn::RunConfig&);
  };
  const std::vector<Command> commands{
      {"simulate", "Simulate a pulse train through the detector chain", cmd_simulate},
      {"analyze", "Integrate pulses with the gating window", cmd_analyze},
      {"spectrum", "Estimate the noise power spectral density", cmd_spectrum},
      {"predict", "Predict pulse-area variance from a light-free spectrum", cmd_predict},
      {"optimize-window", "Grid search for the window minimising n_3db", cmd_optimize},
      {"scaling", "Variance versus photon number with quadratic fit", cmd_scaling},
      {"ingest-check", "Validate a trace file", cmd_ingest_check},
      {"run", "Run every configured stage and write a manifest", cmd_run},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_shared_options(*sub, overrides);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    const pn::RunConfig config = build_config(overrides);
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return commands[i].run(config);
  } catch (const pn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const pn::IngestError& e) {
    std::cerr << "ingest error: " << e.what() << '\n';
    return kIngest;
  } catch (const pn::AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << '\n';
    return kAnalysis;
  } catch (const pn::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
