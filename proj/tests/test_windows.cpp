#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pulsenoise/errors.hpp"
#include "pulsenoise/fft.hpp"
#include "pulsenoise/windows.hpp"

using namespace pulsenoise;

namespace {

constexpr double kPi = std::numbers::pi;

double omega_at(double f) { return 2.0 * kPi * f; }

}  // namespace

TEST(Windows, TimeDomainValues) {
  const GatingWindow box{WindowKind::boxcar, 1e-6, 0.0};
  const GatingWindow dcs{WindowKind::dcs, 1e-6, 0.0};
  EXPECT_DOUBLE_EQ(window_value(box, 0.0), 1e6);
  EXPECT_DOUBLE_EQ(window_value(box, 0.6e-6), 0.0);
  EXPECT_DOUBLE_EQ(window_value(dcs, 0.0), 1e6);
  EXPECT_DOUBLE_EQ(window_value(dcs, 0.75e-6), -1e6);
  EXPECT_DOUBLE_EQ(window_value(dcs, -0.75e-6), -1e6);
  EXPECT_DOUBLE_EQ(window_value(dcs, 1.2e-6), 0.0);
}

TEST(Windows, EdgesFollowHeavisideConvention) {
  const GatingWindow box{WindowKind::boxcar, 2.0, 0.0};
  EXPECT_EQ(window_value(box, -1.0), 0.0);
  EXPECT_EQ(window_value(box, 1.0), 0.5);
  const GatingWindow shifted{WindowKind::boxcar, 2.0, 5.0};
  EXPECT_EQ(window_value(shifted, 5.0), 0.5);
  EXPECT_EQ(window_value(shifted, 4.0), 0.0);
}

TEST(Windows, BoxcarSpectrumValues) {
  EXPECT_DOUBLE_EQ(boxcar_power_spectrum(1e-6, 0.0), 1.0);
  EXPECT_NEAR(boxcar_power_spectrum(1e-6, omega_at(1e6)), 0.0, 1e-20);
  EXPECT_NEAR(boxcar_power_spectrum(1e-6, omega_at(0.5e6)), 4.0 / (kPi * kPi), 1e-12);
  EXPECT_NEAR(boxcar_power_spectrum(1e-6, omega_at(0.5e6)), 0.405285, 1e-6);
}

TEST(Windows, DcsSpectrumValues) {
  EXPECT_EQ(dcs_power_spectrum(1e-6, 0.0), 0.0);
  EXPECT_NEAR(dcs_power_spectrum(1e-6, omega_at(1e6)), 0.0, 1e-20);
  EXPECT_NEAR(dcs_power_spectrum(1e-6, omega_at(0.5e6)), 16.0 / (kPi * kPi), 1e-12);
  EXPECT_NEAR(dcs_power_spectrum(1e-6, omega_at(0.5e6)), 1.62114, 1e-5);
}

TEST(Windows, DcsSuppressesLowFrequenciesAsFourthPower) {
  const double sigma = 1.3e-6;
  const double hi = dcs_power_spectrum(sigma, 1e-3 / sigma);
  const double lo = dcs_power_spectrum(sigma, 1e-4 / sigma);
  EXPECT_GT(lo, 0.0);
  EXPECT_NEAR(hi / lo, 1e4, 1e4 * 1e-3);
}

TEST(Windows, AnalyticSpectraMatchSampledFft) {
  const std::size_t m = 1000;
  const std::size_t n = 1 << 20;
  for (WindowKind kind : {WindowKind::boxcar, WindowKind::dcs}) {
    const double sigma = 2e-6;
    const double dt = sigma / m;
    const GatingWindow w{kind, sigma, 0.0};
    const auto samples = sample_window(w, -(m + 0.5) * dt, dt, 2 * m + 2);
    std::vector<double> padded(n, 0.0);
    std::copy(samples.begin(), samples.end(), padded.begin());
    const auto spectrum = real_fft(padded);
    const double df = 1.0 / (n * dt);
    const double peak = window_spectrum_peak(kind, sigma);
    for (std::size_t k = 0; k * df <= 10.0 / sigma; ++k) {
      const double sampled = std::norm(spectrum[k]) * dt * dt;
      const double analytic = window_power_spectrum(w, omega_at(k * df));
      ASSERT_NEAR(sampled, analytic, 1e-3 * analytic + 1e-12 * peak)
          << to_string(kind) << " f=" << k * df;
    }
  }
}

TEST(Windows, SampledWindowsIntegrateToOneAndZero) {
  for (double sigma : {1e-6, 1.25e-6, 3.33e-6}) {
    const double dt = 1e-8;
    const GatingWindow box{WindowKind::boxcar, sigma, 0.0};
    const GatingWindow dcs{WindowKind::dcs, sigma, 0.0};
    double ib = 0.0;
    double id = 0.0;
    for (double v : sample_window(box, -4e-6, dt, 800)) ib += v * dt;
    for (double v : sample_window(dcs, -4e-6, dt, 800)) id += v * dt;
    EXPECT_NEAR(ib, 1.0, 1.5 * dt / sigma);
    EXPECT_NEAR(id, 0.0, 1.5 * dt / sigma);
  }
}

TEST(Windows, SpectrumIntegralsMatchClosedForm) {
  const double sigma = 1e-6;
  for (WindowKind kind : {WindowKind::boxcar, WindowKind::dcs}) {
    const GatingWindow w{kind, sigma, 0.0};
    const double top = 4000.0 / sigma;
    const int steps = 4000000;
    const double h = top / steps;
    double sum = 0.0;
    for (int i = 0; i <= steps; ++i) {
      const double weight = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      sum += weight * window_power_spectrum(w, i * h);
    }
    sum *= h / 3.0;
    const double tail_coeff = kind == WindowKind::boxcar ? 2.0 : 10.0;
    sum += tail_coeff / (sigma * sigma * top);
    EXPECT_NEAR(sum, window_spectrum_integral(kind, sigma), 1e-4 * window_spectrum_integral(kind, sigma));
  }
}

TEST(Windows, NormalizedSpectrumHasUnitIntegral) {
  const GatingWindow w{WindowKind::dcs, 1e-6, 0.0};
  EXPECT_NEAR(normalized_window_power_spectrum(w, omega_at(0.5e6)),
              16.0 / (kPi * kPi) / (2.0 * kPi / 1e-6), 1e-18);
}

TEST(Windows, EnvelopeBoundsSpectrum) {
  const double sigma = 1.25e-6;
  for (WindowKind kind : {WindowKind::boxcar, WindowKind::dcs}) {
    const GatingWindow w{kind, sigma, 0.0};
    const double peak = window_spectrum_peak(kind, sigma);
    for (double x = 0.0; x < 400.0; x += 0.01) {
      const double omega = x / sigma;
      ASSERT_LE(window_power_spectrum(w, omega), window_spectrum_envelope(kind, sigma, omega) * (1 + 1e-12));
      ASSERT_LE(window_power_spectrum(w, omega), peak * (1 + 1e-12));
    }
  }
}

TEST(Windows, ParseKinds) {
  EXPECT_EQ(parse_window_kind("boxcar"), WindowKind::boxcar);
  EXPECT_EQ(parse_window_kind("bc"), WindowKind::boxcar);
  EXPECT_EQ(parse_window_kind("dcs"), WindowKind::dcs);
  EXPECT_THROW(parse_window_kind("hann"), ConfigError);
  EXPECT_THROW((GatingWindow{WindowKind::boxcar, 0.0, 0.0}.validate()), ConfigError);
}
