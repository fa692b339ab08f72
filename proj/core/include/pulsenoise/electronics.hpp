#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pulsenoise/photon_source.hpp"

namespace pulsenoise {

/// Integrator, pole/zero network, CR-(RC)^n shaper and output noise of a
/// charge-integrating balanced detector.
///
/// Every CR and RC stage uses the time constant shaping_time / sqrt(n). With
/// that choice the delta response of the shaper has a full width at half
/// maximum close to 2.4 shaping times for any order.
struct DetectorChainConfig {
  double integrator_discharge = 50e-6;    // tau_i, s
  double shaping_time = 330e-9;           // tau_s, s
  int shaper_order = 3;                   // number of RC low-pass stages
  double pole_zero_residual = 0.0;        // eps; 0 is perfect cancellation
  double enc_electrons = 280.0;           // rms noise at the reference window
  double sample_interval = 10e-9;         // s
  double analog_bandwidth_limit = 20e6;   // Hz
  double ac_coupling_time = 1.0;          // s, DC block at the diode node
  double reference_pulse_duration = 1e-6; // s, calibration/ENC pulse length
  std::optional<double> quantizer_full_scale;  // opt-in 8 bit ADC, +-full scale

  void validate() const;

  double stage_time_constant() const;
  /// Reference boxcar window for calibration and ENC: tau_ref + 2 tau_s.
  double reference_window() const;
};

/// 2x A275, 3 pole, 330 ns.
DetectorChainConfig version_one_preset();
/// CR-200-250 ns hybrid shaper; single pole, ENC 340 e.
DetectorChainConfig version_two_preset();

/// Uniformly sampled differential output. Samples of simulated traces are in
/// photoelectrons per sample: summed over the best-placed reference window,
/// an isolated pulse of Q electrons gives Q.
struct Trace {
  std::vector<double> samples;
  double sample_interval = 10e-9;
  double origin_time = 0.0;
  std::string unit = "photoelectrons";
  /// Electrons per sample unit; empty for uncalibrated captures.
  std::optional<double> electrons_per_unit = 1.0;

  double time_at(std::size_t index) const {
    return origin_time + static_cast<double>(index) * sample_interval;
  }
  double duration() const { return static_cast<double>(samples.size()) * sample_interval; }
  bool calibrated() const { return electrons_per_unit.has_value(); }
};

struct ChainResponse {
  std::vector<double> frequencies;  // Hz
  std::vector<double> gain_power;   // |g|^2, trace units^2 per (electron^2/s)
};

/// Per-sample complex transfer function of the chain: the continuous-time
/// response including the calibration gain, so that the DFT of
/// impulse_response() approximates it.
std::complex<double> chain_transfer_function(const DetectorChainConfig& config,
                                             double frequency);

/// |g(f)|^2 = 2 dt^2 |H(f)|^2. With s0 = eta * photon flux, a white
/// photocurrent produces the one-sided output density s0 |g(f)|^2.
double chain_transfer_power(const DetectorChainConfig& config, double frequency);

ChainResponse chain_response(const DetectorChainConfig& config,
                             std::span<const double> frequencies);

/// Output per injected electron, summed over the best-placed reference
/// window, before calibration. The calibration gain is its inverse.
double reference_capture(const DetectorChainConfig& config);
double calibration_gain(const DetectorChainConfig& config);

/// Exactly discretized linear chain (impulse invariant state-space form).
/// Input is charge per sample, output is the calibrated noiseless trace.
class ShapingChain {
 public:
  explicit ShapingChain(const DetectorChainConfig& config);

  std::vector<double> filter(std::span<const double> charges) const;

  const DetectorChainConfig& config() const { return config_; }
  double gain() const { return gain_; }

 private:
  ShapingChain(const DetectorChainConfig& config, int uncalibrated);
  std::vector<double> filter_uncalibrated(std::span<const double> charges) const;

  DetectorChainConfig config_;
  int order_ = 0;
  std::vector<double> transition_;  // row-major order_ x order_
  std::vector<double> input_;
  std::vector<double> output_;
  double gain_ = 1.0;

  friend double reference_capture(const DetectorChainConfig& config);
};

/// Non-fatal remarks about a chain/pulse combination.
std::vector<std::string> chain_warnings(const DetectorChainConfig& config,
                                        const CoherentPulseTrainSpec& spec);

/// Where pulses sit on the synthesized trace. Pulse i starts at i * r; the
/// trace starts lead_in before pulse 0 and ends trailing after pulse k-1 ends
/// its period. A set duration overrides the automatic length.
struct TraceLayout {
  std::optional<double> lead_in;   // default: one repetition period
  std::optional<double> trailing;  // default: none
  std::optional<double> duration;
};

Trace synthesize_trace(std::span<const PulseChargeSample> pulses,
                       const CoherentPulseTrainSpec& spec, const DetectorChainConfig& config,
                       std::uint64_t seed, const TraceLayout& layout = {});

/// Chain response plus electronic noise for an arbitrary per-sample charge
/// sequence (e.g. continuous illumination).
Trace synthesize_from_charges(std::span<const double> charges,
                              const DetectorChainConfig& config, std::uint64_t seed,
                              double origin_time = 0.0);

/// Noiseless response to one electron injected at t = 0.
Trace impulse_response(const DetectorChainConfig& config, double duration);

/// Per-sample standard deviation of the white output noise.
double noise_sample_sigma(const DetectorChainConfig& config);

/// Full width at half maximum of the largest lobe, interpolated between samples.
double full_width_half_max(const Trace& trace);

}  // namespace pulsenoise
