#include "pulsenoise/pulse_analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "pulsenoise/errors.hpp"

namespace pulsenoise {

namespace {

struct Placement {
  std::ptrdiff_t start = 0;  // first inner sample of pulse 0
  std::size_t inner = 0;     // M
  std::size_t before = 0;    // dcs flank lengths
  std::size_t after = 0;
  double period_samples = 0.0;
};

std::size_t window_samples(double duration, double dt) {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(duration / dt)));
}

Placement place(const Trace& trace, const GatingWindow& window, double repetition_period,
                int pulse_count) {
  window.validate();
  if (!(trace.sample_interval > 0.0)) throw AnalysisError("trace has no sample interval");
  if (!(repetition_period > 0.0)) throw AnalysisError("repetition period must be > 0");
  if (pulse_count < 1) throw AnalysisError("pulse count must be >= 1");
  const double dt = trace.sample_interval;
  Placement p;
  p.inner = window_samples(window.duration, dt);
  p.before = p.inner / 2;
  p.after = p.inner - p.before;
  p.period_samples = repetition_period / dt;
  p.start = static_cast<std::ptrdiff_t>(
      std::llround((window.offset - trace.origin_time) / dt - static_cast<double>(p.inner) / 2.0));
  return p;
}

std::ptrdiff_t pulse_start(const Placement& p, int i) {
  return p.start + static_cast<std::ptrdiff_t>(std::llround(i * p.period_samples));
}

void check_bounds(std::ptrdiff_t lo, std::ptrdiff_t hi, std::size_t size, int index) {
  if (lo < 0 || hi > static_cast<std::ptrdiff_t>(size))
    throw AnalysisError("window for pulse " + std::to_string(index) +
                        " exceeds the trace bounds");
}

GatingWindow snapped_window(const Trace& trace, const GatingWindow& window, const Placement& p) {
  GatingWindow snapped = window;
  const double dt = trace.sample_interval;
  snapped.duration = static_cast<double>(p.inner) * dt;
  snapped.offset = trace.origin_time + (static_cast<double>(p.start) + p.inner / 2.0) * dt;
  return snapped;
}

PulseAreas make_areas(const Trace& trace, const GatingWindow& window, const Placement& p,
                      int pulse_count) {
  PulseAreas result;
  result.window = snapped_window(trace, window, p);
  result.pulse_count = pulse_count;
  result.sample_interval = trace.sample_interval;
  result.photoelectron_units = trace.calibrated();
  result.areas.reserve(static_cast<std::size_t>(pulse_count));
  return result;
}

std::vector<double> prefix_sums(const std::vector<double>& x) {
  std::vector<double> sums(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) sums[i + 1] = sums[i] + x[i];
  return sums;
}

std::vector<double> snap_range(const SweepRange& range, double dt, const char* name) {
  if (!(range.step > 0.0) || !(range.stop >= range.start) || !std::isfinite(range.stop))
    throw ConfigError(std::string("empty ") + name + " range");
  std::vector<double> values;
  const auto count = static_cast<long long>(std::floor((range.stop - range.start) / range.step + 1e-9));
  for (long long j = 0; j <= count; ++j) {
    const double v = std::round((range.start + j * range.step) / dt) * dt;
    if (values.empty() || std::abs(v - values.back()) > dt / 2.0) values.push_back(v);
  }
  return values;
}

struct WeightedFit {
  Eigen::VectorXd coeffs;
  Eigen::MatrixXd covariance;
};

WeightedFit weighted_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& weights) {
  const Eigen::VectorXd root = weights.array().sqrt();
  const Eigen::MatrixXd a = root.asDiagonal() * design;
  const Eigen::VectorXd b = root.asDiagonal() * y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < design.cols()) throw AnalysisError("noise scaling fit: singular normal equations");
  WeightedFit fit;
  fit.coeffs = qr.solve(b);
  fit.covariance = (a.transpose() * a).inverse();
  return fit;
}

}  // namespace

std::vector<double> PulseAreas::normalized() const {
  const double m = std::max(1.0, std::round(window.duration / sample_interval));
  std::vector<double> out(areas.size());
  std::transform(areas.begin(), areas.end(), out.begin(), [m](double a) { return a / m; });
  return out;
}

PulseAreas integrate_boxcar(const Trace& trace, const GatingWindow& window,
                            double repetition_period, int pulse_count) {
  const Placement p = place(trace, window, repetition_period, pulse_count);
  PulseAreas result = make_areas(trace, window, p, pulse_count);
  const auto m = static_cast<std::ptrdiff_t>(p.inner);
  for (int i = 0; i < pulse_count; ++i) {
    const std::ptrdiff_t s = pulse_start(p, i);
    check_bounds(s, s + m, trace.samples.size(), i);
    double sum = 0.0;
    for (std::ptrdiff_t j = s; j < s + m; ++j) sum += trace.samples[static_cast<std::size_t>(j)];
    result.areas.push_back(sum);
  }
  return result;
}

PulseAreas integrate_dcs(const Trace& trace, const GatingWindow& window,
                         double repetition_period, int pulse_count) {
  const Placement p = place(trace, window, repetition_period, pulse_count);
  if (1.5 * static_cast<double>(p.inner) > p.period_samples * (1.0 + 1e-9))
    throw AnalysisError("dcs baseline flanks of 1.5 window durations collide with the adjacent "
                        "pulse period");
  PulseAreas result = make_areas(trace, window, p, pulse_count);
  const auto m = static_cast<std::ptrdiff_t>(p.inner);
  const auto mb = static_cast<std::ptrdiff_t>(p.before);
  const auto ma = static_cast<std::ptrdiff_t>(p.after);
  const auto& x = trace.samples;
  for (int i = 0; i < pulse_count; ++i) {
    const std::ptrdiff_t s = pulse_start(p, i);
    check_bounds(s - mb, s + m + ma, x.size(), i);
    double sum = 0.0;
    for (std::ptrdiff_t j = 0; j < mb; ++j)
      sum += x[static_cast<std::size_t>(s + j)] - x[static_cast<std::size_t>(s - mb + j)];
    for (std::ptrdiff_t j = 0; j < ma; ++j)
      sum += x[static_cast<std::size_t>(s + mb + j)] - x[static_cast<std::size_t>(s + m + j)];
    result.areas.push_back(sum);
  }
  return result;
}

PulseAreas integrate_window(const Trace& trace, const GatingWindow& window,
                            double repetition_period, int pulse_count) {
  return window.kind == WindowKind::dcs
             ? integrate_dcs(trace, window, repetition_period, pulse_count)
             : integrate_boxcar(trace, window, repetition_period, pulse_count);
}

int pulses_in_trace(const Trace& trace, const GatingWindow& window, double repetition_period) {
  const Placement p = place(trace, window, repetition_period, 1);
  const bool dcs = window.kind == WindowKind::dcs;
  const auto lead = static_cast<std::ptrdiff_t>(dcs ? p.before : 0);
  const auto span = static_cast<std::ptrdiff_t>(p.inner + (dcs ? p.after : 0));
  const auto size = static_cast<std::ptrdiff_t>(trace.samples.size());
  int count = 0;
  while (true) {
    const std::ptrdiff_t s = pulse_start(p, count);
    if (s - lead < 0 || s + span > size) break;
    ++count;
  }
  return count;
}

double pulse_variance(std::span<const double> areas) {
  if (areas.size() < 2) throw AnalysisError("pulse variance needs at least two pulses");
  const double n = static_cast<double>(areas.size());
  const double mean = std::accumulate(areas.begin(), areas.end(), 0.0) / n;
  double sq = 0.0;
  double lin = 0.0;
  for (double a : areas) {
    const double d = a - mean;
    sq += d * d;
    lin += d;
  }
  return std::max(0.0, sq / n - (lin / n) * (lin / n));
}

double pulse_variance(const PulseAreas& areas) { return pulse_variance(areas.areas); }

NoiseScalingResult fit_noise_scaling(std::span<const ScalingPoint> points,
                                     double quantum_efficiency) {
  if (points.size() < 3) throw AnalysisError("noise scaling fit needs at least three points");
  NoiseScalingResult result;
  result.quantum_efficiency = quantum_efficiency;
  double n_max = 0.0;
  double v_max = 0.0;
  for (const auto& pt : points) {
    if (!(pt.variance >= 0.0) || !(pt.photon_number >= 0.0))
      throw AnalysisError("noise scaling fit: negative photon number or variance");
    result.photon_numbers.push_back(pt.photon_number);
    result.variances.push_back(pt.variance);
    result.pulse_counts.push_back(pt.pulse_count);
    n_max = std::max(n_max, pt.photon_number);
    v_max = std::max(v_max, pt.variance);
  }
  if (!(n_max > 0.0) || !(v_max > 0.0))
    throw AnalysisError("noise scaling fit: degenerate photon numbers or variances");

  const auto rows = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(rows, 3);
  Eigen::VectorXd y(rows);
  Eigen::VectorXd dof(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double u = points[static_cast<std::size_t>(i)].photon_number / n_max;
    design(i, 0) = 1.0;
    design(i, 1) = u;
    design(i, 2) = u * u;
    y(i) = points[static_cast<std::size_t>(i)].variance;
    dof(i) = std::max(1.0, points[static_cast<std::size_t>(i)].pulse_count - 1.0) / 2.0;
  }

  Eigen::VectorXd model = y;
  WeightedFit fit;
  bool constrained = false;
  for (int iteration = 0; iteration < 4; ++iteration) {
    Eigen::VectorXd weights(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double m = std::max(model(i), 1e-12 * v_max);
      weights(i) = dof(i) / (m * m);
    }
    fit = weighted_least_squares(design, y, weights);
    constrained = fit.coeffs(0) < 0.0;
    if (constrained) {
      const WeightedFit reduced = weighted_least_squares(design.rightCols(2), y, weights);
      fit.coeffs = Eigen::Vector3d(0.0, reduced.coeffs(0), reduced.coeffs(1));
      fit.covariance = Eigen::Matrix3d::Zero();
      fit.covariance.bottomRightCorner(2, 2) = reduced.covariance;
    }
    model = design * fit.coeffs;
  }

  result.electronic_variance = fit.coeffs(0);
  result.linear_coeff = fit.coeffs(1) / n_max;
  result.quadratic_coeff = fit.coeffs(2) / (n_max * n_max);
  result.electronic_variance_error = constrained ? 0.0 : std::sqrt(fit.covariance(0, 0));
  result.linear_error = std::sqrt(fit.covariance(1, 1)) / n_max;
  result.quadratic_error = std::sqrt(fit.covariance(2, 2)) / (n_max * n_max);

  const double e = result.electronic_variance;
  const double a = result.linear_coeff;
  auto loglog = [&](bool shot_dominated_only) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int used = 0;
    for (const auto& pt : points) {
      if (shot_dominated_only && !(a * pt.photon_number > 10.0 * e)) continue;
      if (!(pt.photon_number > 0.0) || !(pt.variance - e > 0.0)) continue;
      const double lx = std::log(pt.photon_number);
      const double ly = std::log(pt.variance - e);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++used;
    }
    const double denom = used * sxx - sx * sx;
    result.loglog_points = used;
    result.loglog_slope = used >= 2 && denom > 0.0 ? (used * sxy - sx * sy) / denom
                                                   : std::numeric_limits<double>::quiet_NaN();
    return used >= 2;
  };
  if (!loglog(true)) loglog(false);

  if (e == 0.0)
    result.n_3db = 0.0;
  else
    result.n_3db = a > 0.0 ? e / a : std::numeric_limits<double>::infinity();
  result.enc = a > 0.0 ? std::sqrt(e * quantum_efficiency / a) : std::sqrt(e);
  return result;
}

NoiseScalingResult noise_scaling(std::span<const CoherentPulseTrainSpec> grid,
                                 const DetectorChainConfig& config, const GatingWindow& window,
                                 std::uint64_t seed) {
  if (grid.size() < 3) throw ConfigError("noise scaling: grid needs at least three points");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& spec : grid) {
    spec.validate();
    if (spec.pulse_count < 500) throw ConfigError("noise scaling: each point needs >= 500 pulses");
    if (spec.mean_photons_per_pulse > 0.0) lo = std::min(lo, spec.mean_photons_per_pulse);
    hi = std::max(hi, spec.mean_photons_per_pulse);
  }
  if (!(hi >= 100.0 * lo * (1.0 - 1e-9)))
    throw ConfigError("noise scaling: photon-number grid must span at least two decades");
  const double eta = grid.front().quantum_efficiency;
  for (const auto& spec : grid)
    if (spec.quantum_efficiency != eta)
      throw ConfigError("noise scaling: grid points must share the quantum efficiency");

  std::vector<ScalingPoint> points;
  points.reserve(grid.size());
  for (const auto& spec : grid) {
    const auto pulses = sample_pulse_train(spec, seed);
    const Trace trace = synthesize_trace(pulses, spec, config, seed);
    const PulseAreas areas =
        integrate_window(trace, window, spec.repetition_period, spec.pulse_count);
    points.push_back({spec.mean_photons_per_pulse, pulse_variance(areas), spec.pulse_count});
  }
  return fit_noise_scaling(points, eta);
}

std::vector<CoherentPulseTrainSpec> photon_number_grid(const CoherentPulseTrainSpec& base,
                                                       double low, double high, int points) {
  if (points < 2 || !(low > 0.0) || !(high > low))
    throw ConfigError("photon-number grid needs 0 < low < high and at least two points");
  std::vector<CoherentPulseTrainSpec> grid;
  const double step = std::log(high / low) / (points - 1);
  for (int i = 0; i < points; ++i) {
    CoherentPulseTrainSpec spec = base;
    spec.mean_photons_per_pulse = i == points - 1 ? high : low * std::exp(step * i);
    spec.validate();
    grid.push_back(spec);
  }
  return grid;
}

GatingWindow align_window(const CoherentPulseTrainSpec& spec, const DetectorChainConfig& config,
                          WindowKind kind, double duration) {
  spec.validate();
  config.validate();
  const double dt = config.sample_interval;
  const std::size_t m = window_samples(duration, dt);
  const std::size_t mb = m / 2;
  const std::size_t ma = m - mb;
  const std::size_t pulse = window_samples(spec.pulse_duration, dt);
  const std::size_t lead = m;
  const std::size_t length = lead + window_samples(spec.repetition_period, dt) + m;

  std::vector<double> charges(length, 0.0);
  for (std::size_t j = 0; j < pulse && lead + j < length; ++j) charges[lead + j] = 1.0 / pulse;
  const auto response = ShapingChain(config).filter(charges);
  const auto sums = prefix_sums(response);
  auto range = [&](std::size_t a, std::size_t b) { return sums[b] - sums[a]; };

  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_start = lead;
  for (std::size_t s = mb; s + m + ma <= length; ++s) {
    double area = range(s, s + m);
    if (kind == WindowKind::dcs) area -= range(s - mb, s) + range(s + m, s + m + ma);
    if (area > best) {
      best = area;
      best_start = s;
    }
  }
  GatingWindow window;
  window.kind = kind;
  window.duration = static_cast<double>(m) * dt;
  window.offset = (static_cast<double>(best_start) - static_cast<double>(lead) + m / 2.0) * dt;
  return window;
}

double window_gain(const CoherentPulseTrainSpec& spec, const DetectorChainConfig& config,
                   const GatingWindow& window) {
  CoherentPulseTrainSpec single = spec;
  single.pulse_count = 1;
  DetectorChainConfig quiet = config;
  quiet.enc_electrons = 0.0;
  quiet.quantizer_full_scale.reset();
  const PulseChargeSample pulse{0, 1.0, 1.0};
  const Trace trace = synthesize_trace(std::span(&pulse, 1), single, quiet, 0);
  return integrate_window(trace, window, single.repetition_period, 1).areas.front();
}

WindowOptimization optimize_window(const CoherentPulseTrainSpec& spec,
                                   const DetectorChainConfig& config, WindowKind kind,
                                   const SweepRange& durations, const SweepRange& offsets,
                                   std::uint64_t seed) {
  spec.validate();
  config.validate();
  if (!(spec.mean_photons_per_pulse > 0.0))
    throw ConfigError("optimize window: mean_photons_per_pulse must be > 0");
  const double dt = config.sample_interval;
  const auto sigma_values = snap_range(durations, dt, "duration");
  const auto offset_values = snap_range(offsets, dt, "offset");
  if (sigma_values.front() <= 0.0) throw ConfigError("optimize window: durations must be > 0");

  DetectorChainConfig light_config = config;
  light_config.enc_electrons = 0.0;
  const auto pulses = sample_pulse_train(spec, seed);
  const Trace light = synthesize_trace(pulses, spec, light_config, seed);
  const Trace dark = synthesize_trace({}, spec, config, seed);
  const auto light_sums = prefix_sums(light.samples);
  const auto dark_sums = prefix_sums(dark.samples);
  const auto size = static_cast<std::ptrdiff_t>(light.samples.size());
  const double period = spec.repetition_period / dt;

  auto variance_of = [&](const std::vector<double>& sums, std::ptrdiff_t s0, std::ptrdiff_t m,
                         std::ptrdiff_t mb, std::ptrdiff_t ma, bool dcs) {
    std::vector<double> areas(static_cast<std::size_t>(spec.pulse_count));
    for (int i = 0; i < spec.pulse_count; ++i) {
      const std::ptrdiff_t s = s0 + static_cast<std::ptrdiff_t>(std::llround(i * period));
      double a = sums[static_cast<std::size_t>(s + m)] - sums[static_cast<std::size_t>(s)];
      if (dcs)
        a -= (sums[static_cast<std::size_t>(s)] - sums[static_cast<std::size_t>(s - mb)]) +
             (sums[static_cast<std::size_t>(s + m + ma)] - sums[static_cast<std::size_t>(s + m)]);
      areas[static_cast<std::size_t>(i)] = a;
    }
    return pulse_variance(areas);
  };

  WindowOptimization result;
  result.best_n_3db = std::numeric_limits<double>::infinity();
  const bool dcs = kind == WindowKind::dcs;
  for (double sigma : sigma_values) {
    const auto m = static_cast<std::ptrdiff_t>(window_samples(sigma, dt));
    const std::ptrdiff_t mb = dcs ? m / 2 : 0;
    const std::ptrdiff_t ma = dcs ? m - m / 2 : 0;
    if (dcs && 1.5 * static_cast<double>(m) > period) continue;
    WindowSurfacePoint best_here{sigma, 0.0, std::numeric_limits<double>::infinity()};
    for (double offset : offset_values) {
      const auto s0 = static_cast<std::ptrdiff_t>(
          std::llround((offset - light.origin_time) / dt - static_cast<double>(m) / 2.0));
      const std::ptrdiff_t last = s0 + static_cast<std::ptrdiff_t>(
                                           std::llround((spec.pulse_count - 1) * period));
      if (s0 - mb < 0 || last + m + ma > size) continue;
      const double v_light = variance_of(light_sums, s0, m, mb, ma, dcs);
      const double v_dark = variance_of(dark_sums, s0, m, mb, ma, dcs);
      if (!(v_light > 0.0)) continue;
      const double n3db = v_dark * spec.mean_photons_per_pulse / v_light;
      result.surface.push_back({sigma, offset, n3db});
      if (n3db < best_here.n_3db) best_here = {sigma, offset, n3db};
      if (n3db < result.best_n_3db) {
        result.best_n_3db = n3db;
        result.best = GatingWindow{kind, sigma, offset};
      }
    }
    if (std::isfinite(best_here.n_3db)) result.duration_profile.push_back(best_here);
  }
  if (result.surface.empty())
    throw ConfigError("optimize window: no grid point fits inside the pulse period");
  return result;
}

ClassicalNoiseReport classical_noise_check(const NoiseScalingResult& result) {
  ClassicalNoiseReport report;
  report.linear_coeff = result.linear_coeff;
  report.linear_error = result.linear_error;
  double n_max = 0.0;
  for (double n : result.photon_numbers) n_max = std::max(n_max, n);
  const double linear = result.linear_coeff * n_max;
  const double quadratic = result.quadratic_coeff * n_max * n_max;
  report.quadratic_share = linear != 0.0 ? quadratic / linear : 0.0;
  report.quadratic_significance =
      result.quadratic_error > 0.0 ? result.quadratic_coeff / result.quadratic_error : 0.0;
  report.contaminated = quadratic > 0.1 * linear;
  return report;
}

TwoSampleDiagnostic two_sample_diagnostic(const Trace& trace, const GatingWindow& window,
                                          double repetition_period, int pulse_count) {
  GatingWindow dcs_window = window;
  dcs_window.kind = WindowKind::dcs;
  const PulseAreas areas = integrate_dcs(trace, dcs_window, repetition_period, pulse_count);
  const Placement p = place(trace, dcs_window, repetition_period, pulse_count);
  const auto m = static_cast<std::ptrdiff_t>(p.inner);
  const auto& x = trace.samples;

  double allan = 0.0;
  for (int i = 0; i < pulse_count; ++i) {
    const std::ptrdiff_t s = pulse_start(p, i);
    check_bounds(s - m, s + m, x.size(), i);
    double first = 0.0;
    double second = 0.0;
    for (std::ptrdiff_t j = 0; j < m; ++j) {
      first += x[static_cast<std::size_t>(s - m + j)];
      second += x[static_cast<std::size_t>(s + j)];
    }
    const double diff = (second - first) / static_cast<double>(m);
    allan += 0.5 * diff * diff;
  }
  TwoSampleDiagnostic diagnostic;
  diagnostic.dcs_variance = pulse_variance(areas.normalized());
  diagnostic.two_sample_variance = allan / pulse_count;
  return diagnostic;
}

}  // namespace pulsenoise
