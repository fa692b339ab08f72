#pragma once

#include <cstddef>
#include <vector>

#include "pulsenoise/electronics.hpp"
#include "pulsenoise/windows.hpp"

namespace pulsenoise {

enum class Taper { none, hann };

/// One-sided power spectral density on the grid 0 .. Nyquist.
/// Units: trace units^2 per Hz. Summing power_density * bin_width() gives the
/// mean-square of the analysed (mean-removed) samples.
struct SpectrumEstimate {
  std::vector<double> frequencies;
  std::vector<double> power_density;
  int segment_count = 0;
  double resolution_bandwidth = 0.0;  // Hz; equals the bin width without taper

  double bin_width() const;
  double nyquist() const { return frequencies.empty() ? 0.0 : frequencies.back(); }
  double sample_interval() const { return 0.5 / nyquist(); }
};

/// Averaged periodogram over non-overlapping segments. The trace mean is
/// removed first. segment_length must be a power of two and the trace must
/// hold at least two segments.
SpectrumEstimate estimate_psd(const Trace& trace, std::size_t segment_length,
                              Taper taper = Taper::none);

/// (lit - dark) / s0 with s0 = eta * photon_flux, clamped at zero.
ChainResponse extract_transimpedance(const SpectrumEstimate& lit, const SpectrumEstimate& dark,
                                     double photon_flux, double quantum_efficiency = 1.0);

/// Pulse-area variance predicted from a noise spectrum: the integral of
/// density times the window power spectrum, in the same photoelectron-area
/// units that integrate_boxcar / integrate_dcs report. Throws AnalysisError
/// when the window spectrum is not negligible at Nyquist.
double predict_pulsed_noise(const SpectrumEstimate& spectrum, const GatingWindow& window);

struct SignalToElectronicRatio {
  std::vector<double> frequencies;
  std::vector<double> ratio_db;   // NaN where flagged
  std::vector<bool> flagged;      // dark density ~ 0
};

SignalToElectronicRatio signal_to_electronic_ratio(const SpectrumEstimate& lit,
                                                   const SpectrumEstimate& dark);

/// First frequency above the reference band where gain falls to half the
/// mean gain inside (0, reference_band]. Linear interpolation between bins.
double half_power_frequency(const std::vector<double>& frequencies,
                            const std::vector<double>& gain, double reference_band);

}  // namespace pulsenoise
