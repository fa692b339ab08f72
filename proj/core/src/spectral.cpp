#include "pulsenoise/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "pulsenoise/errors.hpp"
#include "pulsenoise/fft.hpp"

namespace pulsenoise {

namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

void require_same_grid(const SpectrumEstimate& a, const SpectrumEstimate& b) {
  if (a.frequencies.size() != b.frequencies.size() || a.frequencies.empty())
    throw AnalysisError("spectra have different lengths");
  const double tol = 1e-9 * a.nyquist();
  for (std::size_t k = 0; k < a.frequencies.size(); ++k)
    if (std::abs(a.frequencies[k] - b.frequencies[k]) > tol)
      throw AnalysisError("spectra are on different frequency grids");
}

// Simpson's rule for |p(2 pi f)|^2 over [lo, hi].
double window_band_integral(const GatingWindow& window, double lo, double hi) {
  constexpr int kIntervals = 8;
  const double h = (hi - lo) / kIntervals;
  auto f = [&](double freq) { return window_power_spectrum(window, 2.0 * std::numbers::pi * freq); };
  double sum = f(lo) + f(hi);
  for (int i = 1; i < kIntervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return sum * h / 3.0;
}

}  // namespace

double SpectrumEstimate::bin_width() const {
  return frequencies.size() < 2 ? 0.0 : frequencies[1] - frequencies[0];
}

SpectrumEstimate estimate_psd(const Trace& trace, std::size_t segment_length, Taper taper) {
  if (!is_power_of_two(segment_length))
    throw AnalysisError("psd: segment length must be a power of two, got " +
                        std::to_string(segment_length));
  if (!(trace.sample_interval > 0.0)) throw AnalysisError("psd: trace has no sample interval");
  const std::size_t segments = trace.samples.size() / segment_length;
  if (segments < 2)
    throw AnalysisError("psd: trace of " + std::to_string(trace.samples.size()) +
                        " samples holds fewer than two segments of " +
                        std::to_string(segment_length));

  const std::size_t used = segments * segment_length;
  const double mean =
      std::accumulate(trace.samples.begin(), trace.samples.begin() + static_cast<long>(used), 0.0) /
      static_cast<double>(used);

  std::vector<double> weights(segment_length, 1.0);
  if (taper == Taper::hann)
    for (std::size_t i = 0; i < segment_length; ++i)
      weights[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / segment_length);
  const double sum_w = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double sum_w2 = std::inner_product(weights.begin(), weights.end(), weights.begin(), 0.0);

  const double fs = 1.0 / trace.sample_interval;
  const std::size_t bins = segment_length / 2 + 1;
  std::vector<double> accum(bins, 0.0);
  std::vector<double> buffer(segment_length);
  RealFft fft(segment_length);
  for (std::size_t s = 0; s < segments; ++s) {
    const double* x = trace.samples.data() + s * segment_length;
    for (std::size_t i = 0; i < segment_length; ++i) buffer[i] = (x[i] - mean) * weights[i];
    const auto spectrum = fft.forward(buffer);
    for (std::size_t k = 0; k < bins; ++k) accum[k] += std::norm(spectrum[k]);
  }

  SpectrumEstimate estimate;
  estimate.segment_count = static_cast<int>(segments);
  estimate.resolution_bandwidth = fs * sum_w2 / (sum_w * sum_w);
  estimate.frequencies.resize(bins);
  estimate.power_density.resize(bins);
  const double scale = 1.0 / (fs * sum_w2 * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    estimate.frequencies[k] = fs * static_cast<double>(k) / static_cast<double>(segment_length);
    const bool interior = k > 0 && k + 1 < bins;
    estimate.power_density[k] = accum[k] * scale * (interior ? 2.0 : 1.0);
  }
  return estimate;
}

ChainResponse extract_transimpedance(const SpectrumEstimate& lit, const SpectrumEstimate& dark,
                                     double photon_flux, double quantum_efficiency) {
  require_same_grid(lit, dark);
  if (!(photon_flux > 0.0)) throw AnalysisError("transimpedance: photon flux must be > 0");
  if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0))
    throw AnalysisError("transimpedance: quantum efficiency must lie in (0, 1]");
  const double s0 = quantum_efficiency * photon_flux;
  ChainResponse response;
  response.frequencies = lit.frequencies;
  response.gain_power.resize(lit.frequencies.size());
  for (std::size_t k = 0; k < lit.frequencies.size(); ++k)
    response.gain_power[k] = std::max(0.0, lit.power_density[k] - dark.power_density[k]) / s0;
  return response;
}

double predict_pulsed_noise(const SpectrumEstimate& spectrum, const GatingWindow& window) {
  window.validate();
  if (spectrum.frequencies.size() < 2) throw AnalysisError("prediction: empty spectrum");
  const double nyquist = spectrum.nyquist();
  const double dt = spectrum.sample_interval();
  const double samples = std::max(1.0, std::round(window.duration / dt));
  GatingWindow snapped = window;
  snapped.duration = samples * dt;

  const double peak = window_spectrum_peak(snapped.kind, snapped.duration);
  const double tail =
      window_spectrum_envelope(snapped.kind, snapped.duration, 2.0 * std::numbers::pi * nyquist);
  if (tail >= 1e-3 * peak)
    throw AnalysisError("prediction: window spectrum is not negligible at Nyquist (" +
                        std::to_string(tail / peak) + " of peak); use a longer window or a "
                        "finer sample interval");

  const double df = spectrum.bin_width();
  const std::size_t last = spectrum.frequencies.size() - 1;
  double integral = 0.0;
  for (std::size_t k = 0; k <= last; ++k) {
    const double f = spectrum.frequencies[k];
    const double lo = k == 0 ? 0.0 : f - df / 2.0;
    const double hi = k == last ? nyquist : f + df / 2.0;
    const double density = spectrum.power_density[k] * ((k == 0 || k == last) ? 2.0 : 1.0);
    integral += density * window_band_integral(snapped, lo, hi);
  }
  return samples * samples * integral;
}

SignalToElectronicRatio signal_to_electronic_ratio(const SpectrumEstimate& lit,
                                                   const SpectrumEstimate& dark) {
  require_same_grid(lit, dark);
  const double dark_max = *std::max_element(dark.power_density.begin(), dark.power_density.end());
  SignalToElectronicRatio ratio;
  ratio.frequencies = lit.frequencies;
  ratio.ratio_db.resize(lit.frequencies.size());
  ratio.flagged.resize(lit.frequencies.size());
  for (std::size_t k = 0; k < lit.frequencies.size(); ++k) {
    const double d = dark.power_density[k];
    const double l = lit.power_density[k];
    const bool flag = !(d > 1e-12 * dark_max) || !(l > 0.0);
    ratio.flagged[k] = flag;
    ratio.ratio_db[k] = flag ? std::numeric_limits<double>::quiet_NaN() : 10.0 * std::log10(l / d);
  }
  return ratio;
}

double half_power_frequency(const std::vector<double>& frequencies,
                            const std::vector<double>& gain, double reference_band) {
  if (frequencies.size() != gain.size() || frequencies.size() < 2)
    throw AnalysisError("half power: frequency and gain arrays differ in length");
  double sum = 0.0;
  int count = 0;
  std::size_t k = 0;
  for (; k < frequencies.size() && frequencies[k] <= reference_band; ++k) {
    if (frequencies[k] > 0.0) {
      sum += gain[k];
      ++count;
    }
  }
  if (count == 0) throw AnalysisError("half power: no bins inside the reference band");
  const double half = sum / count / 2.0;
  for (; k < frequencies.size(); ++k) {
    if (gain[k] <= half) {
      if (k == 0) return frequencies[0];
      const double f0 = frequencies[k - 1];
      const double g0 = gain[k - 1];
      if (g0 <= half) return frequencies[k];
      return f0 + (g0 - half) / (g0 - gain[k]) * (frequencies[k] - f0);
    }
  }
  throw AnalysisError("half power: gain never falls to half of the reference level");
}

}  // namespace pulsenoise
