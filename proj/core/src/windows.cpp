#include "pulsenoise/windows.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pulsenoise/errors.hpp"

namespace pulsenoise {

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

bool inside(double t, double lo, double hi) { return t > lo && t <= hi; }

double dcs_shape(double x) {
  const double d = sinc(x) - sinc(2.0 * x);
  return 4.0 * d * d;
}

double dcs_shape_peak() {
  double best_x = 0.0;
  double best = 0.0;
  for (int i = 1; i <= 4000; ++i) {
    const double x = i * 0.005;
    const double v = dcs_shape(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  double lo = best_x - 0.005;
  double hi = best_x + 0.005;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 80; ++i) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    if (dcs_shape(a) > dcs_shape(b))
      hi = b;
    else
      lo = a;
  }
  return dcs_shape((lo + hi) / 2.0);
}

}  // namespace

std::string to_string(WindowKind kind) { return kind == WindowKind::dcs ? "dcs" : "boxcar"; }

WindowKind parse_window_kind(std::string_view name) {
  if (name == "boxcar" || name == "bc") return WindowKind::boxcar;
  if (name == "dcs") return WindowKind::dcs;
  throw ConfigError("unknown window kind '" + std::string(name) + "' (expected boxcar or dcs)");
}

void GatingWindow::validate() const {
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw ConfigError("window: duration must be > 0");
  if (!std::isfinite(offset)) throw ConfigError("window: offset must be finite");
}

double window_value(const GatingWindow& window, double t) {
  const double s = window.duration;
  const double t0 = window.offset;
  const double inner = inside(t, t0 - s / 2.0, t0 + s / 2.0) ? 1.0 / s : 0.0;
  if (window.kind == WindowKind::boxcar) return inner;
  const double outer = inside(t, t0 - s, t0 + s) ? 1.0 / s : 0.0;
  return 2.0 * inner - outer;
}

double boxcar_power_spectrum(double duration, double omega) {
  const double s = sinc(omega * duration / 2.0);
  return s * s;
}

double dcs_power_spectrum(double duration, double omega) {
  return dcs_shape(omega * duration / 2.0);
}

double window_power_spectrum(const GatingWindow& window, double omega) {
  return window.kind == WindowKind::dcs ? dcs_power_spectrum(window.duration, omega)
                                        : boxcar_power_spectrum(window.duration, omega);
}

double window_spectrum_integral(WindowKind kind, double duration) {
  const double base = std::numbers::pi / duration;
  return kind == WindowKind::dcs ? 2.0 * base : base;
}

double normalized_window_power_spectrum(const GatingWindow& window, double omega) {
  return window_power_spectrum(window, omega) /
         window_spectrum_integral(window.kind, window.duration);
}

double window_spectrum_envelope(WindowKind kind, double duration, double omega) {
  const double peak = window_spectrum_peak(kind, duration);
  const double x = std::abs(omega) * duration;
  if (x == 0.0) return peak;
  const double bound = kind == WindowKind::dcs ? 36.0 / (x * x) : 4.0 / (x * x);
  return std::min(peak, bound);
}

double window_spectrum_peak(WindowKind kind, double /*duration*/) {
  if (kind == WindowKind::boxcar) return 1.0;
  static const double peak = dcs_shape_peak();
  return peak;
}

std::vector<double> sample_window(const GatingWindow& window, double origin, double dt,
                                  std::size_t count) {
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i)
    values[i] = window_value(window, origin + static_cast<double>(i) * dt);
  return values;
}

}  // namespace pulsenoise
