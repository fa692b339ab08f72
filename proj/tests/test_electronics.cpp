#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "pulsenoise/electronics.hpp"
#include "pulsenoise/errors.hpp"
#include "pulsenoise/fft.hpp"
#include "pulsenoise/pulse_analysis.hpp"
#include "pulsenoise/spectral.hpp"

using namespace pulsenoise;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// t^n exp(-t/theta) / (n! theta^(n+1)): unit-area response of n+1 equal poles.
double pole_cascade(double t, int n, double theta) {
  if (t <= 0.0) return 0.0;
  return std::pow(t, n) * std::exp(-t / theta) / (factorial(n) * std::pow(theta, n + 1));
}

double cascade_fwhm(int n, double theta) {
  const double peak_t = n * theta;
  const double half = pole_cascade(peak_t, n, theta) / 2.0;
  auto solve = [&](double lo, double hi) {
    const bool rising = pole_cascade(lo, n, theta) < pole_cascade(hi, n, theta);
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if ((pole_cascade(mid, n, theta) < half) == rising)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  };
  return solve(peak_t * 20.0, peak_t) - solve(1e-15, peak_t);
}

DetectorChainConfig quiet(DetectorChainConfig c = version_one_preset()) {
  c.enc_electrons = 0.0;
  return c;
}

}  // namespace

TEST(Electronics, PresetsMatchDetectorVersions) {
  const auto one = version_one_preset();
  EXPECT_DOUBLE_EQ(one.shaping_time, 330e-9);
  EXPECT_EQ(one.shaper_order, 3);
  EXPECT_DOUBLE_EQ(one.enc_electrons, 280.0);
  const auto two = version_two_preset();
  EXPECT_DOUBLE_EQ(two.shaping_time, 250e-9);
  EXPECT_EQ(two.shaper_order, 1);
  EXPECT_DOUBLE_EQ(two.enc_electrons, 340.0);
  EXPECT_NO_THROW(one.validate());
  EXPECT_NO_THROW(two.validate());
}

TEST(Electronics, ValidationRejectsBadConfigs) {
  auto c = version_one_preset();
  c.sample_interval = 50e-9;
  EXPECT_THROW(c.validate(), ConfigError);
  c = version_one_preset();
  c.analog_bandwidth_limit = 80e6;
  EXPECT_THROW(c.validate(), ConfigError);
  c = version_one_preset();
  c.shaper_order = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = version_one_preset();
  c.enc_electrons = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = version_one_preset();
  c.pole_zero_residual = 1.0;
  EXPECT_THROW(ShapingChain{c}, ConfigError);
}

TEST(Electronics, ImpulseResponseMatchesPoleCascade) {
  for (int n : {1, 2, 3, 4}) {
    auto c = quiet();
    c.shaper_order = n;
    c.ac_coupling_time = 1e3;
    const Trace h = impulse_response(c, 10e-6);
    const double kappa = calibration_gain(c);
    const double theta = c.stage_time_constant();
    const double peak = *std::max_element(h.samples.begin(), h.samples.end());
    for (std::size_t k = 0; k < h.samples.size(); ++k) {
      const double expected = kappa * c.sample_interval * pole_cascade(k * c.sample_interval, n, theta);
      ASSERT_NEAR(h.samples[k], expected, 1e-6 * peak) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Electronics, DeltaResponseWidthNearTwoPointFourShapingTimes) {
  for (int n : {1, 2, 3, 4}) {
    auto c = quiet();
    c.shaper_order = n;
    const double fwhm = full_width_half_max(impulse_response(c, 10e-6));
    EXPECT_NEAR(fwhm, cascade_fwhm(n, c.stage_time_constant()), 0.005 * fwhm) << "n=" << n;
    EXPECT_NEAR(fwhm / c.shaping_time, 2.4, 0.24) << "n=" << n;
  }
}

TEST(Electronics, HundredNanosecondPulseGivesAbout800ns) {
  const auto c = quiet();
  std::vector<double> charges(4000, 0.0);
  for (int j = 0; j < 10; ++j) charges[500 + j] = 0.1;
  Trace t;
  t.samples = ShapingChain(c).filter(charges);
  t.sample_interval = c.sample_interval;
  EXPECT_NEAR(full_width_half_max(t), 800e-9, 0.15 * 800e-9);
}

TEST(Electronics, TransferFunctionLimits) {
  for (double eps : {0.0, 0.05}) {
    auto c = version_one_preset();
    c.pole_zero_residual = eps;
    EXPECT_EQ(chain_transfer_power(c, 0.0), 0.0);
    EXPECT_LT(chain_transfer_power(c, 1e9), 1e-12 * chain_transfer_power(c, 1e5));
  }
  const auto c = version_one_preset();
  // faster than 1/w^2 at high frequency
  const double r = chain_transfer_power(c, 2e8) / chain_transfer_power(c, 1e8);
  EXPECT_LT(r, 0.25);
}

TEST(Electronics, VersionOneHalfPowerBelow600kHz) {
  const auto c = version_one_preset();
  std::vector<double> f;
  std::vector<double> g;
  for (double x = 1e3; x <= 5e6; x += 1e3) {
    f.push_back(x);
    g.push_back(chain_transfer_power(c, x));
  }
  const double f3db = half_power_frequency(f, g, 20e3);
  EXPECT_LT(f3db, 600e3);
  EXPECT_GT(f3db, 100e3);
}

TEST(Electronics, ImpulseDftMatchesClosedForm) {
  struct Case {
    int order;
    double f_max;
  };
  for (const auto& [order, f_max] : {Case{3, 10e6}, Case{2, 5e6}, Case{1, 2e6}}) {
    auto c = quiet();
    c.shaper_order = order;
    const std::size_t n = 1 << 15;
    const Trace h = impulse_response(c, n * c.sample_interval);
    const auto spectrum = real_fft(h.samples);
    const double df = 1.0 / (n * c.sample_interval);
    for (std::size_t k = 1; k * df <= f_max; ++k) {
      const double measured = 2.0 * c.sample_interval * c.sample_interval * std::norm(spectrum[k]);
      const double expected = chain_transfer_power(c, k * df);
      ASSERT_NEAR(measured / expected, 1.0, 0.01) << "order " << order << " f=" << k * df;
    }
  }
}

TEST(Electronics, AcCoupledResponseHasZeroNetArea) {
  auto c = quiet();
  c.ac_coupling_time = 20e-6;
  const Trace h = impulse_response(c, 4e-3);
  double net = 0.0;
  double positive = 0.0;
  for (double v : h.samples) {
    net += v;
    positive += std::max(v, 0.0);
  }
  EXPECT_LT(std::abs(net), 1e-6 * positive);
}

TEST(Electronics, CalibrationInvariantAtReferencePulse) {
  CoherentPulseTrainSpec spec;
  spec.pulse_count = 1;
  const auto c = quiet();
  const double q = 12345.0;
  const PulseChargeSample pulse{0, q, q};
  const Trace t = synthesize_trace(std::span(&pulse, 1), spec, c, 1);
  const auto window = align_window(spec, c, WindowKind::boxcar, c.reference_window());
  const auto areas = integrate_boxcar(t, window, spec.repetition_period, 1);
  EXPECT_NEAR(areas.areas[0], q, 0.01 * q);
  EXPECT_NEAR(areas.areas[0], q, 1e-6 * q);
}

TEST(Electronics, SynthesisIsLinear) {
  CoherentPulseTrainSpec spec;
  spec.pulse_count = 20;
  auto c = quiet();
  c.pole_zero_residual = 0.03;
  std::vector<PulseChargeSample> a;
  std::vector<PulseChargeSample> b;
  std::vector<PulseChargeSample> sum;
  for (int i = 0; i < spec.pulse_count; ++i) {
    const double qa = 1000.0 * (i % 7) - 2500.0;
    const double qb = 333.0 * i;
    a.push_back({i, qa, std::abs(qa)});
    b.push_back({i, qb, qb});
    sum.push_back({i, 2.0 * qa + qb, 0.0});
  }
  const Trace ta = synthesize_trace(a, spec, c, 1);
  const Trace tb = synthesize_trace(b, spec, c, 1);
  const Trace ts = synthesize_trace(sum, spec, c, 1);
  double scale = 0.0;
  for (double v : ts.samples) scale = std::max(scale, std::abs(v));
  for (std::size_t k = 0; k < ts.samples.size(); ++k)
    ASSERT_NEAR(ts.samples[k], 2.0 * ta.samples[k] + tb.samples[k], 1e-10 * scale);
}

TEST(Electronics, ZeroChargeNoNoiseIsZero) {
  CoherentPulseTrainSpec spec;
  spec.pulse_count = 5;
  const Trace t = synthesize_trace({}, spec, quiet(), 3);
  EXPECT_TRUE(std::all_of(t.samples.begin(), t.samples.end(), [](double v) { return v == 0.0; }));
}

TEST(Electronics, NoiseMatchesEncAtReferenceWindow) {
  const auto c = version_one_preset();
  CoherentPulseTrainSpec spec;
  spec.pulse_count = 4000;
  const Trace t = synthesize_trace({}, spec, c, 21);
  GatingWindow w{WindowKind::boxcar, c.reference_window(), 1e-6};
  const double sd = std::sqrt(pulse_variance(integrate_boxcar(t, w, spec.repetition_period, 4000)));
  EXPECT_NEAR(sd, c.enc_electrons, 0.05 * c.enc_electrons);
}

TEST(Electronics, BalancedTrainReturnsToBaseline) {
  CoherentPulseTrainSpec spec;
  spec.pulse_count = 200;
  spec.mean_photons_per_pulse = 1e6;
  const auto c = version_one_preset();
  const auto pulses = sample_pulse_train(spec, 9);
  const Trace t = synthesize_trace(pulses, spec, c, 9);
  const auto window = GatingWindow{WindowKind::boxcar, c.reference_window(), 6e-6};
  const auto gaps = integrate_boxcar(t, window, spec.repetition_period, spec.pulse_count);
  double mean = 0.0;
  for (double g : gaps.areas) mean += g / spec.pulse_count;
  EXPECT_LT(std::abs(mean), 4.0 * c.enc_electrons / std::sqrt(spec.pulse_count));
}

TEST(Electronics, PoleZeroResidualPullsBaselineWithPhotonNumber) {
  auto c = quiet();
  c.pole_zero_residual = 0.05;
  CoherentPulseTrainSpec spec;
  spec.pulse_count = 50;
  spec.imbalance_fraction = 0.2;
  std::vector<double> shift;
  for (double n : {1e5, 2e5, 4e5}) {
    spec.mean_photons_per_pulse = n;
    std::vector<PulseChargeSample> pulses;
    for (int i = 0; i < spec.pulse_count; ++i)
      pulses.push_back({i, spec.detected_mean_first() - spec.detected_mean_second(), 0.0});
    const Trace t = synthesize_trace(pulses, spec, c, 0);
    const std::size_t after = t.samples.size() - 50;
    shift.push_back(t.samples[after]);
  }
  EXPECT_GT(std::abs(shift[0]), 0.0);
  EXPECT_NEAR(shift[1] / shift[0], 2.0, 1e-9);
  EXPECT_NEAR(shift[2] / shift[0], 4.0, 1e-9);
}

TEST(Electronics, DoublingChargesDoublesTrace) {
  CoherentPulseTrainSpec spec;
  spec.pulse_count = 8;
  std::vector<PulseChargeSample> a;
  std::vector<PulseChargeSample> b;
  for (int i = 0; i < spec.pulse_count; ++i) {
    a.push_back({i, 100.0 + i, 0.0});
    b.push_back({i, 2.0 * (100.0 + i), 0.0});
  }
  const Trace ta = synthesize_trace(a, spec, quiet(), 0);
  const Trace tb = synthesize_trace(b, spec, quiet(), 0);
  for (std::size_t k = 0; k < ta.samples.size(); ++k)
    ASSERT_NEAR(tb.samples[k], 2.0 * ta.samples[k], 1e-12 * std::abs(tb.samples[k]) + 1e-15);
}

TEST(Electronics, TraceTooShortIsConfigError) {
  CoherentPulseTrainSpec spec;
  spec.pulse_count = 10;
  const PulseChargeSample pulse{9, 1.0, 1.0};
  TraceLayout layout;
  layout.duration = 50e-6;
  EXPECT_THROW(synthesize_trace(std::span(&pulse, 1), spec, quiet(), 0, layout), ConfigError);
}

TEST(Electronics, QuantizerSnapsToEightBitLevels) {
  auto c = version_one_preset();
  c.quantizer_full_scale = 5.0;
  CoherentPulseTrainSpec spec;
  spec.pulse_count = 3;
  const Trace t = synthesize_trace({}, spec, c, 2);
  const double step = 10.0 / 256.0;
  for (double v : t.samples) {
    EXPECT_NEAR(v / step, std::round(v / step), 1e-9);
    EXPECT_LE(std::abs(v), 128 * step);
  }
}

TEST(Electronics, WarnsWhenIntegratorDischargesDuringPulse) {
  auto c = version_one_preset();
  CoherentPulseTrainSpec spec;
  EXPECT_TRUE(chain_warnings(c, spec).empty());
  c.integrator_discharge = 5e-6;
  EXPECT_EQ(chain_warnings(c, spec).size(), 1u);
}
