#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pulsenoise/electronics.hpp"
#include "pulsenoise/photon_source.hpp"
#include "pulsenoise/windows.hpp"

namespace pulsenoise {

/// One number per pulse. For calibrated traces the areas are photoelectrons:
/// the window sum of the trace (boxcar), or the inner sum minus both flank
/// sums (dcs).
struct PulseAreas {
  std::vector<double> areas;
  GatingWindow window;  // duration and offset snapped to the sample grid
  int pulse_count = 0;
  double sample_interval = 0.0;
  bool photoelectron_units = true;

  /// Areas divided by the window duration in samples: the per-duration
  /// pulse area (a constant trace c gives c).
  std::vector<double> normalized() const;
};

PulseAreas integrate_boxcar(const Trace& trace, const GatingWindow& window,
                            double repetition_period, int pulse_count);
PulseAreas integrate_dcs(const Trace& trace, const GatingWindow& window,
                         double repetition_period, int pulse_count);
PulseAreas integrate_window(const Trace& trace, const GatingWindow& window,
                            double repetition_period, int pulse_count);

/// Number of consecutive pulses, starting at pulse 0, whose window lies
/// inside the trace.
int pulses_in_trace(const Trace& trace, const GatingWindow& window, double repetition_period);

/// (1/k) sum p^2 - ((1/k) sum p)^2, evaluated around the mean. k >= 2.
double pulse_variance(std::span<const double> areas);
double pulse_variance(const PulseAreas& areas);

struct ScalingPoint {
  double photon_number = 0.0;
  double variance = 0.0;
  int pulse_count = 0;
};

/// Fit of variance(N) = electronic + linear N + quadratic N^2.
struct NoiseScalingResult {
  std::vector<double> photon_numbers;
  std::vector<double> variances;
  std::vector<int> pulse_counts;
  double quantum_efficiency = 1.0;

  double electronic_variance = 0.0;
  double linear_coeff = 0.0;
  double quadratic_coeff = 0.0;
  double electronic_variance_error = 0.0;
  double linear_error = 0.0;
  double quadratic_error = 0.0;

  double loglog_slope = 0.0;  // NaN when fewer than two usable points
  int loglog_points = 0;
  double n_3db = 0.0;
  double enc = 0.0;

  double model(double photon_number) const {
    return electronic_variance + photon_number * (linear_coeff + photon_number * quadratic_coeff);
  }
};

NoiseScalingResult fit_noise_scaling(std::span<const ScalingPoint> points,
                                     double quantum_efficiency);

/// Simulates each grid point through the chain, integrates with `window` and
/// fits the scaling curve. All grid points share the same per-pulse photon
/// and noise substreams.
NoiseScalingResult noise_scaling(std::span<const CoherentPulseTrainSpec> grid,
                                 const DetectorChainConfig& config, const GatingWindow& window,
                                 std::uint64_t seed);

/// Balanced grid of `points` log-spaced photon numbers over [low, high].
std::vector<CoherentPulseTrainSpec> photon_number_grid(const CoherentPulseTrainSpec& base,
                                                       double low, double high, int points);

/// Window of the given kind and duration, centred where a noiseless pulse of
/// `spec` gives the largest area.
GatingWindow align_window(const CoherentPulseTrainSpec& spec, const DetectorChainConfig& config,
                          WindowKind kind, double duration);

/// Noiseless area per detected electron for a window.
double window_gain(const CoherentPulseTrainSpec& spec, const DetectorChainConfig& config,
                   const GatingWindow& window);

struct SweepRange {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
};

struct WindowSurfacePoint {
  double duration = 0.0;
  double offset = 0.0;
  double n_3db = 0.0;
};

struct WindowOptimization {
  GatingWindow best;
  double best_n_3db = 0.0;
  std::vector<WindowSurfacePoint> surface;
  /// Best n_3db over offsets, per duration (ascending durations).
  std::vector<WindowSurfacePoint> duration_profile;
};

/// Grid search over window duration and centre. Each point uses the same
/// light and dark traces; n_3db is the electronic variance divided by the
/// light-induced variance per photon at spec.mean_photons_per_pulse.
WindowOptimization optimize_window(const CoherentPulseTrainSpec& spec,
                                   const DetectorChainConfig& config, WindowKind kind,
                                   const SweepRange& durations, const SweepRange& offsets,
                                   std::uint64_t seed);

struct ClassicalNoiseReport {
  bool contaminated = false;
  double quadratic_share = 0.0;         // quadratic / linear term at N_max
  double quadratic_significance = 0.0;  // quadratic_coeff / its standard error
  double linear_coeff = 0.0;
  double linear_error = 0.0;
};

/// Flags classical contamination when the quadratic term exceeds 10% of the
/// linear term at the largest photon number.
ClassicalNoiseReport classical_noise_check(const NoiseScalingResult& result);

/// Compares the dcs variance with the two-sample (Allan) variance of adjacent
/// baseline means of length sigma taken around each window. For white noise
/// the normalized dcs variance equals twice the two-sample variance.
struct TwoSampleDiagnostic {
  double dcs_variance = 0.0;         // normalized areas, trace units^2
  double two_sample_variance = 0.0;  // trace units^2
};

TwoSampleDiagnostic two_sample_diagnostic(const Trace& trace, const GatingWindow& window,
                                          double repetition_period, int pulse_count);

}  // namespace pulsenoise
