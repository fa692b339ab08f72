#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pulsenoise {

enum class WindowKind { boxcar, dcs };

std::string to_string(WindowKind kind);
/// Accepts "boxcar"/"bc" and "dcs". Throws ConfigError otherwise.
WindowKind parse_window_kind(std::string_view name);

/// Gating function used to turn a trace into one number per pulse.
///
/// boxcar: 1/sigma on (t0 - sigma/2, t0 + sigma/2].
/// dcs:    2/sigma on the same interval minus 1/sigma on (t0 - sigma, t0 + sigma],
///         i.e. +1/sigma inside and -1/sigma on each sigma/2 flank.
///
/// For pulse analysis, offset is the window center measured from the start of
/// pulse 0.
struct GatingWindow {
  WindowKind kind = WindowKind::boxcar;
  double duration = 1.25e-6;  // sigma, s
  double offset = 0.0;        // t0, s

  void validate() const;
};

/// Time-domain value in 1/s. Edges follow Theta(x) = 0 for x <= 0.
double window_value(const GatingWindow& window, double t);

/// (sin(w sigma/2) / (w sigma/2))^2.
double boxcar_power_spectrum(double duration, double omega);

/// 4 (sin(w sigma/2)/(w sigma/2) - sin(w sigma)/(w sigma))^2. Zero at w = 0.
double dcs_power_spectrum(double duration, double omega);

double window_power_spectrum(const GatingWindow& window, double omega);

/// Integral of the raw power spectrum over w in [0, inf): pi/sigma for the
/// boxcar and 2 pi/sigma for dcs.
double window_spectrum_integral(WindowKind kind, double duration);

/// Power spectrum scaled to unit integral on [0, inf), as plotted for
/// comparing window shapes.
double normalized_window_power_spectrum(const GatingWindow& window, double omega);

/// Upper bound on the raw power spectrum for all frequencies >= omega.
double window_spectrum_envelope(WindowKind kind, double duration, double omega);

/// Largest value the raw power spectrum attains (1 for boxcar).
double window_spectrum_peak(WindowKind kind, double duration);

/// Window sampled on a uniform grid at t = origin + i * dt.
std::vector<double> sample_window(const GatingWindow& window, double origin, double dt,
                                  std::size_t count);

}  // namespace pulsenoise
