#include "pulsenoise/electronics.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "pulsenoise/errors.hpp"

namespace pulsenoise {

namespace {

std::size_t samples_for(double duration, double sample_interval) {
  return static_cast<std::size_t>(std::llround(duration / sample_interval));
}

}  // namespace

void DetectorChainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("detector chain: " + what); };
  if (!(integrator_discharge > 0.0)) fail("integrator_discharge must be > 0");
  if (!(shaping_time > 0.0)) fail("shaping_time must be > 0");
  if (shaper_order < 1) fail("shaper_order must be >= 1");
  if (!(std::abs(pole_zero_residual) < 1.0)) fail("pole_zero_residual must lie in (-1, 1)");
  if (!(enc_electrons >= 0.0) || !std::isfinite(enc_electrons))
    fail("enc_electrons must be >= 0");
  if (!(sample_interval > 0.0)) fail("sample_interval must be > 0");
  if (sample_interval > shaping_time / 10.0 * (1.0 + 1e-9))
    fail("sample_interval must be <= shaping_time / 10");
  if (!(analog_bandwidth_limit > 0.0)) fail("analog_bandwidth_limit must be > 0");
  if (analog_bandwidth_limit > 0.5 / sample_interval * (1.0 + 1e-9))
    fail("analog_bandwidth_limit must not exceed the Nyquist frequency");
  if (!(ac_coupling_time > 0.0)) fail("ac_coupling_time must be > 0");
  if (!(reference_pulse_duration > 0.0)) fail("reference_pulse_duration must be > 0");
  if (quantizer_full_scale && !(*quantizer_full_scale > 0.0))
    fail("quantizer_full_scale must be > 0");
}

double DetectorChainConfig::stage_time_constant() const {
  return shaping_time / std::sqrt(static_cast<double>(shaper_order));
}

double DetectorChainConfig::reference_window() const {
  return reference_pulse_duration + 2.0 * shaping_time;
}

DetectorChainConfig version_one_preset() { return DetectorChainConfig{}; }

DetectorChainConfig version_two_preset() {
  DetectorChainConfig config;
  config.shaping_time = 250e-9;
  config.shaper_order = 1;
  config.enc_electrons = 340.0;
  return config;
}

std::vector<std::string> chain_warnings(const DetectorChainConfig& config,
                                        const CoherentPulseTrainSpec& spec) {
  std::vector<std::string> warnings;
  if (config.integrator_discharge < 10.0 * spec.pulse_duration)
    warnings.emplace_back("integrator_discharge is below 10x the pulse duration; the "
                          "integrator will discharge during the pulse");
  return warnings;
}

std::complex<double> chain_transfer_function(const DetectorChainConfig& config,
                                             double frequency) {
  using cd = std::complex<double>;
  const cd s(0.0, 2.0 * std::numbers::pi * frequency);
  const double eps = config.pole_zero_residual;
  const double theta = config.stage_time_constant();

  const cd ac = (s * config.ac_coupling_time) / (1.0 + s * config.ac_coupling_time);
  const cd pole_zero = (1.0 - eps) + eps / (1.0 + s * config.integrator_discharge);
  const cd stage = 1.0 / (1.0 + s * theta);
  const cd shaper = std::pow(stage, config.shaper_order + 1);
  return calibration_gain(config) * ac * pole_zero * shaper;
}

double chain_transfer_power(const DetectorChainConfig& config, double frequency) {
  const double dt = config.sample_interval;
  return 2.0 * dt * dt * std::norm(chain_transfer_function(config, frequency));
}

ChainResponse chain_response(const DetectorChainConfig& config,
                             std::span<const double> frequencies) {
  ChainResponse response;
  response.frequencies.assign(frequencies.begin(), frequencies.end());
  response.gain_power.reserve(frequencies.size());
  for (double f : frequencies) response.gain_power.push_back(chain_transfer_power(config, f));
  return response;
}

// State vector: [pole/zero tail, n+1 shaper stages, AC-coupling integrator].
// The continuous system is lower triangular, so the transition matrix is too.
ShapingChain::ShapingChain(const DetectorChainConfig& config) : ShapingChain(config, 0) {
  gain_ = 1.0 / reference_capture(config_);
}

ShapingChain::ShapingChain(const DetectorChainConfig& config, int) : config_(config) {
  config_.validate();
  const int n = config_.shaper_order;
  order_ = n + 3;
  const double eps = config_.pole_zero_residual;
  const double theta = config_.stage_time_constant();
  const double tau_i = config_.integrator_discharge;
  const double tau_ac = config_.ac_coupling_time;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(order_, order_);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(order_);
  a(0, 0) = -1.0 / tau_i;
  b(0) = 1.0 / tau_i;
  a(1, 0) = eps / theta;
  a(1, 1) = -1.0 / theta;
  b(1) = (1.0 - eps) / theta;
  for (int j = 2; j <= n + 1; ++j) {
    a(j, j - 1) = 1.0 / theta;
    a(j, j) = -1.0 / theta;
  }
  a(n + 2, n + 1) = 1.0 / tau_ac;
  a(n + 2, n + 2) = -1.0 / tau_ac;

  const Eigen::MatrixXd phi = (a * config_.sample_interval).exp();
  transition_.resize(static_cast<std::size_t>(order_ * order_));
  for (int i = 0; i < order_; ++i)
    for (int j = 0; j < order_; ++j)
      transition_[static_cast<std::size_t>(i * order_ + j)] = j <= i ? phi(i, j) : 0.0;
  input_.assign(b.data(), b.data() + order_);
  output_.assign(static_cast<std::size_t>(order_), 0.0);
  output_[static_cast<std::size_t>(n + 1)] = config_.sample_interval;
  output_[static_cast<std::size_t>(n + 2)] = -config_.sample_interval;
}

std::vector<double> ShapingChain::filter_uncalibrated(std::span<const double> charges) const {
  const auto d = static_cast<std::size_t>(order_);
  std::vector<double> state(d, 0.0);
  std::vector<double> next(d, 0.0);
  std::vector<double> out(charges.size());
  for (std::size_t k = 0; k < charges.size(); ++k) {
    const double q = charges[k];
    if (q != 0.0)
      for (std::size_t i = 0; i < d; ++i) state[i] += input_[i] * q;
    double y = 0.0;
    for (std::size_t i = 0; i < d; ++i) y += output_[i] * state[i];
    out[k] = y;
    for (std::size_t i = 0; i < d; ++i) {
      const double* row = &transition_[i * d];
      double acc = 0.0;
      for (std::size_t j = 0; j <= i; ++j) acc += row[j] * state[j];
      next[i] = acc;
    }
    state.swap(next);
  }
  return out;
}

std::vector<double> ShapingChain::filter(std::span<const double> charges) const {
  auto out = filter_uncalibrated(charges);
  for (auto& v : out) v *= gain_;
  return out;
}

double reference_capture(const DetectorChainConfig& config) {
  config.validate();
  const double dt = config.sample_interval;
  const std::size_t pulse_samples =
      std::max<std::size_t>(1, samples_for(config.reference_pulse_duration, dt));
  const std::size_t window_samples =
      std::max<std::size_t>(1, samples_for(config.reference_window(), dt));
  const double shaper_extent = 30.0 * (config.shaper_order + 1) * config.stage_time_constant();
  const std::size_t length = pulse_samples + window_samples + samples_for(shaper_extent, dt);

  std::vector<double> charges(length, 0.0);
  for (std::size_t i = 0; i < pulse_samples; ++i) charges[i] = 1.0 / pulse_samples;

  const ShapingChain chain(config, 0);
  const auto response = chain.filter_uncalibrated(charges);

  double running = 0.0;
  for (std::size_t i = 0; i < window_samples && i < length; ++i) running += response[i];
  double best = running;
  for (std::size_t start = 1; start + window_samples <= length; ++start) {
    running += response[start + window_samples - 1] - response[start - 1];
    best = std::max(best, running);
  }
  if (!(best > 0.0)) throw ConfigError("detector chain: reference window captures no signal");
  return best;
}

double calibration_gain(const DetectorChainConfig& config) {
  return 1.0 / reference_capture(config);
}

double noise_sample_sigma(const DetectorChainConfig& config) {
  const auto window_samples =
      std::max<std::size_t>(1, samples_for(config.reference_window(), config.sample_interval));
  return config.enc_electrons / std::sqrt(static_cast<double>(window_samples));
}

Trace synthesize_from_charges(std::span<const double> charges, const DetectorChainConfig& config,
                              std::uint64_t seed, double origin_time) {
  if (charges.empty()) throw ConfigError("synthesis: trace needs at least one sample");
  const ShapingChain chain(config);
  Trace trace;
  trace.samples = chain.filter(charges);
  trace.sample_interval = config.sample_interval;
  trace.origin_time = origin_time;

  const double sigma = noise_sample_sigma(config);
  if (sigma > 0.0) {
    std::mt19937_64 engine(derive_seed(seed, 0x5be0cd19137e2179ULL));
    std::normal_distribution<double> normal(0.0, sigma);
    for (auto& v : trace.samples) v += normal(engine);
  }
  if (config.quantizer_full_scale) {
    const double step = 2.0 * *config.quantizer_full_scale / 256.0;
    for (auto& v : trace.samples) v = std::clamp(std::round(v / step), -128.0, 127.0) * step;
  }
  return trace;
}

Trace synthesize_trace(std::span<const PulseChargeSample> pulses,
                       const CoherentPulseTrainSpec& spec, const DetectorChainConfig& config,
                       std::uint64_t seed, const TraceLayout& layout) {
  spec.validate();
  config.validate();
  const double dt = config.sample_interval;
  const double r = spec.repetition_period;
  const double lead_in = layout.lead_in.value_or(r);
  const double trailing = layout.trailing.value_or(0.0);
  if (lead_in < 0.0 || trailing < 0.0) throw ConfigError("synthesis: negative lead-in or trailing");

  const std::size_t lead_samples = samples_for(lead_in, dt);
  const double duration = layout.duration.value_or(lead_in + spec.pulse_count * r + trailing);
  const std::size_t total = samples_for(duration, dt);
  const std::size_t pulse_samples = std::max<std::size_t>(1, samples_for(spec.pulse_duration, dt));

  std::vector<double> charges(total, 0.0);
  for (const auto& pulse : pulses) {
    if (pulse.pulse_index < 0 || pulse.pulse_index >= spec.pulse_count)
      throw ConfigError("synthesis: pulse index " + std::to_string(pulse.pulse_index) +
                        " outside the pulse train");
    const std::size_t start = lead_samples + samples_for(pulse.pulse_index * r, dt);
    if (start + pulse_samples > total)
      throw ConfigError("synthesis: trace length insufficient for pulse " +
                        std::to_string(pulse.pulse_index));
    const double per_sample = pulse.differential_electrons / static_cast<double>(pulse_samples);
    for (std::size_t j = 0; j < pulse_samples; ++j) charges[start + j] += per_sample;
  }
  return synthesize_from_charges(charges, config, seed,
                                 -static_cast<double>(lead_samples) * dt);
}

Trace impulse_response(const DetectorChainConfig& config, double duration) {
  config.validate();
  if (duration < 5.0 * config.shaping_time)
    throw ConfigError("impulse response: duration must be at least 5 shaping times");
  std::vector<double> charges(samples_for(duration, config.sample_interval), 0.0);
  charges.front() = 1.0;
  const ShapingChain chain(config);
  Trace trace;
  trace.samples = chain.filter(charges);
  trace.sample_interval = config.sample_interval;
  return trace;
}

double full_width_half_max(const Trace& trace) {
  const auto& s = trace.samples;
  if (s.size() < 3) return 0.0;
  const auto peak_it =
      std::max_element(s.begin(), s.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  const auto peak = static_cast<std::size_t>(peak_it - s.begin());
  const double sign = *peak_it < 0.0 ? -1.0 : 1.0;
  const double half = std::abs(*peak_it) / 2.0;
  auto level = [&](std::size_t i) { return sign * s[i]; };

  double left = 0.0;
  std::size_t i = peak;
  while (i > 0 && level(i - 1) >= half) --i;
  if (i > 0) left = (i - 1) + (half - level(i - 1)) / (level(i) - level(i - 1));

  double right = static_cast<double>(s.size() - 1);
  std::size_t j = peak;
  while (j + 1 < s.size() && level(j + 1) >= half) ++j;
  if (j + 1 < s.size()) right = j + (level(j) - half) / (level(j) - level(j + 1));

  return (right - left) * trace.sample_interval;
}

}  // namespace pulsenoise
