#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pulsenoise/electronics.hpp"
#include "pulsenoise/errors.hpp"
#include "pulsenoise/pulse_analysis.hpp"

using namespace pulsenoise;

namespace {

Trace constant_trace(double value, std::size_t n, double dt = 1e-8, double origin = -10e-6) {
  Trace t;
  t.samples.assign(n, value);
  t.sample_interval = dt;
  t.origin_time = origin;
  return t;
}

Trace white_trace(std::size_t n, double sigma, std::uint64_t seed) {
  Trace t = constant_trace(0.0, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& v : t.samples) v = normal(rng);
  return t;
}

std::vector<double> pulse_areas_normalized(const Trace& t, const GatingWindow& w, int k) {
  return integrate_window(t, w, 10e-6, k).normalized();
}

}  // namespace

TEST(PulseAnalysis, ConstantTraceBoxcarAreaIsTheConstant) {
  const Trace t = constant_trace(3.5, 12000);
  const GatingWindow w{WindowKind::boxcar, 1.25e-6, 1.2e-6};
  const auto areas = integrate_boxcar(t, w, 10e-6, 10);
  ASSERT_EQ(areas.areas.size(), 10u);
  EXPECT_EQ(areas.pulse_count, 10);
  for (double a : areas.normalized()) EXPECT_NEAR(a, 3.5, 1e-12);
  for (double a : areas.areas) EXPECT_NEAR(a, 3.5 * 125, 1e-9);
}

TEST(PulseAnalysis, ConstantTraceDcsCancelsExactly) {
  for (double c : {0.0, 1.0, -7.25, 1e9 + 0.1}) {
    const Trace t = constant_trace(c, 12000);
    for (double sigma : {1.0e-6, 1.25e-6, 1.33e-6}) {
      const auto areas = integrate_dcs(t, GatingWindow{WindowKind::dcs, sigma, 1.2e-6}, 10e-6, 10);
      for (double a : areas.areas) EXPECT_EQ(a, 0.0);
    }
  }
}

TEST(PulseAnalysis, LinearDriftCancelsInDcs) {
  Trace t = constant_trace(0.0, 12000);
  for (std::size_t i = 0; i < t.samples.size(); ++i) t.samples[i] = 0.37 * (static_cast<double>(i) - 4000.0);
  const auto areas = integrate_dcs(t, GatingWindow{WindowKind::dcs, 1.2e-6, 1.3e-6}, 10e-6, 10);
  for (double a : areas.areas) EXPECT_NEAR(a, 0.0, 1e-8);
}

TEST(PulseAnalysis, SlowSinusoidSuppression) {
  const double sigma = 1.0e-6;
  const double dt = 1e-9;
  for (double periods : {30.0, 40.0}) {
    const double period = periods * sigma;
    double box = 0.0;
    double dcs = 0.0;
    for (int phase = 0; phase < 16; ++phase) {
      Trace t = constant_trace(0.0, 20000, dt, -10e-6);
      for (std::size_t i = 0; i < t.samples.size(); ++i)
        t.samples[i] = std::sin(2.0 * std::numbers::pi * t.time_at(i) / period + phase * 0.39);
      const GatingWindow wb{WindowKind::boxcar, sigma, 0.0};
      const GatingWindow wd{WindowKind::dcs, sigma, 0.0};
      box += std::pow(integrate_boxcar(t, wb, 10e-6, 1).normalized()[0], 2);
      dcs += std::pow(integrate_dcs(t, wd, 10e-6, 1).normalized()[0], 2);
    }
    const double amplitude_ratio = std::sqrt(box / dcs);
    const double x = std::numbers::pi * sigma / period;
    const double analytic =
        std::abs(std::sin(x) / x) / std::abs(2.0 * (std::sin(x) / x - std::sin(2 * x) / (2 * x)));
    EXPECT_NEAR(amplitude_ratio, analytic, 0.01 * analytic);
    EXPECT_GE(box / dcs, 100.0);
    if (periods >= 40.0) EXPECT_GE(amplitude_ratio, 100.0);
  }
}

TEST(PulseAnalysis, ConstantOffsetShiftsBoxcarOnly) {
  const Trace base = white_trace(60000, 1.0, 3);
  Trace shifted = base;
  for (auto& v : shifted.samples) v += 11.0;
  const GatingWindow wb{WindowKind::boxcar, 1.25e-6, 1.2e-6};
  const GatingWindow wd{WindowKind::dcs, 1.25e-6, 1.2e-6};
  const auto b0 = pulse_areas_normalized(base, wb, 50);
  const auto b1 = pulse_areas_normalized(shifted, wb, 50);
  const auto d0 = integrate_dcs(base, wd, 10e-6, 50).areas;
  const auto d1 = integrate_dcs(shifted, wd, 10e-6, 50).areas;
  for (std::size_t i = 0; i < b0.size(); ++i) {
    EXPECT_NEAR(b1[i] - b0[i], 11.0, 1e-9);
    EXPECT_NEAR(d1[i], d0[i], 1e-9);
  }
}

TEST(PulseAnalysis, WhiteNoiseDcsVarianceIsTwiceBoxcar) {
  const Trace t = white_trace(4000 * 1000 + 2000, 1.0, 4);
  const GatingWindow wb{WindowKind::boxcar, 1.25e-6, 1.2e-6};
  const GatingWindow wd{WindowKind::dcs, 1.25e-6, 1.2e-6};
  const double vb = pulse_variance(integrate_boxcar(t, wb, 10e-6, 4000));
  const double vd = pulse_variance(integrate_dcs(t, wd, 10e-6, 4000));
  EXPECT_NEAR(vd / vb, 2.0, 0.3);
  EXPECT_NEAR(vb, 125.0, 125.0 * 4.0 * std::sqrt(2.0 / 4000));
}

TEST(PulseAnalysis, PopulationVariance) {
  EXPECT_DOUBLE_EQ(pulse_variance(std::vector<double>{1.0, 3.0}), 1.0);
  EXPECT_DOUBLE_EQ(pulse_variance(std::vector<double>{2.5, 2.5, 2.5}), 0.0);
  EXPECT_THROW(pulse_variance(std::vector<double>{1.0}), AnalysisError);
  EXPECT_NEAR(pulse_variance(std::vector<double>{1e9 + 1, 1e9 + 3}), 1.0, 1e-6);
}

TEST(PulseAnalysis, ShotNoiseVarianceAtReferenceWindow) {
  CoherentPulseTrainSpec spec;
  spec.mean_photons_per_pulse = 1e6;
  spec.pulse_count = 3000;
  auto c = version_one_preset();
  c.enc_electrons = 0.0;
  const auto pulses = sample_pulse_train(spec, 12);
  const Trace t = synthesize_trace(pulses, spec, c, 12);
  const auto w = align_window(spec, c, WindowKind::boxcar, c.reference_window());
  const double v = pulse_variance(integrate_boxcar(t, w, spec.repetition_period, spec.pulse_count));
  const double expected = expected_shot_variance(spec);
  EXPECT_NEAR(v, expected, 3.0 * expected * std::sqrt(2.0 / spec.pulse_count));
  EXPECT_NEAR(window_gain(spec, c, w), 1.0, 1e-6);
}

TEST(PulseAnalysis, WindowOutsideTraceNamesPulse) {
  const Trace t = constant_trace(1.0, 5000);
  try {
    integrate_boxcar(t, GatingWindow{WindowKind::boxcar, 1e-6, 1e-6}, 10e-6, 8);
    FAIL() << "expected AnalysisError";
  } catch (const AnalysisError& e) {
    EXPECT_NE(std::string(e.what()).find("pulse 4"), std::string::npos) << e.what();
  }
}

TEST(PulseAnalysis, DcsFlanksMustFitInPeriod) {
  const Trace t = constant_trace(0.0, 20000);
  EXPECT_THROW(integrate_dcs(t, GatingWindow{WindowKind::dcs, 7e-6, 4e-6}, 10e-6, 2), AnalysisError);
  EXPECT_NO_THROW(integrate_dcs(t, GatingWindow{WindowKind::dcs, 6e-6, 4e-6}, 10e-6, 2));
}

TEST(PulseAnalysis, SnappedWindowIsReported) {
  const Trace t = constant_trace(0.0, 12000);
  const auto areas = integrate_boxcar(t, GatingWindow{WindowKind::boxcar, 1.2549e-6, 1.2e-6}, 10e-6, 2);
  EXPECT_NEAR(areas.window.duration, 1.25e-6, 1e-15);
  EXPECT_NEAR(areas.window.offset, 1.2e-6, 5e-9 + 1e-15);
}

TEST(PulseAnalysis, FitRecoversExactLinearData) {
  const double c = 6.4e4;
  std::vector<ScalingPoint> points;
  for (double n : {1e4, 3e4, 1e5, 3e5, 1e6, 3e6})
    points.push_back({n, c + n, 500});
  const auto fit = fit_noise_scaling(points, 1.0);
  EXPECT_NEAR(fit.electronic_variance, c, 1e-6 * c);
  EXPECT_NEAR(fit.linear_coeff, 1.0, 1e-9);
  EXPECT_NEAR(fit.quadratic_coeff, 0.0, 1e-15);
  EXPECT_NEAR(fit.n_3db, c, 1e-6 * c);
  EXPECT_NEAR(fit.loglog_slope, 1.0, 1e-9);
  EXPECT_NEAR(fit.enc, std::sqrt(c), 1e-6 * std::sqrt(c));
  EXPECT_NEAR(fit.model(2e5), c + 2e5, 1e-6);
}

TEST(PulseAnalysis, FitRecoversExactQuadraticData) {
  std::vector<ScalingPoint> points;
  for (double n : {1e5, 2e5, 5e5, 1e6, 2e6, 5e6, 1e7})
    points.push_back({n, 2.5e4 + 0.8 * n + 3e-8 * n * n, 1000});
  const auto fit = fit_noise_scaling(points, 0.9);
  EXPECT_NEAR(fit.electronic_variance, 2.5e4, 1e-6 * 2.5e4);
  EXPECT_NEAR(fit.linear_coeff, 0.8, 1e-9);
  EXPECT_NEAR(fit.quadratic_coeff, 3e-8, 1e-17);
  EXPECT_NEAR(fit.enc, std::sqrt(2.5e4 * 0.9 / 0.8), 1e-6);
  EXPECT_GT(fit.quadratic_error, 0.0);
}

TEST(PulseAnalysis, FitErrors) {
  std::vector<ScalingPoint> two{{1.0, 2.0, 500}, {2.0, 3.0, 500}};
  EXPECT_THROW(fit_noise_scaling(two, 1.0), AnalysisError);
  std::vector<ScalingPoint> same{{1e5, 2.0, 500}, {1e5, 3.0, 500}, {1e5, 4.0, 500}};
  EXPECT_THROW(fit_noise_scaling(same, 1.0), AnalysisError);
}

TEST(PulseAnalysis, ElectronicVarianceIsNonNegative) {
  std::vector<ScalingPoint> points;
  for (double n : {1e3, 1e4, 1e5, 1e6}) points.push_back({n, n - 50.0 + 1e-3 * n, 500});
  const auto fit = fit_noise_scaling(points, 1.0);
  EXPECT_EQ(fit.electronic_variance, 0.0);
  EXPECT_EQ(fit.n_3db, 0.0);
}

TEST(PulseAnalysis, PhotonGridIsLogSpaced) {
  CoherentPulseTrainSpec base;
  const auto grid = photon_number_grid(base, 1e5, 1e7, 6);
  ASSERT_EQ(grid.size(), 6u);
  EXPECT_DOUBLE_EQ(grid.front().mean_photons_per_pulse, 1e5);
  EXPECT_DOUBLE_EQ(grid.back().mean_photons_per_pulse, 1e7);
  for (std::size_t i = 1; i < grid.size(); ++i)
    EXPECT_NEAR(grid[i].mean_photons_per_pulse / grid[i - 1].mean_photons_per_pulse,
                std::pow(100.0, 0.2), 1e-9);
  EXPECT_THROW(photon_number_grid(base, 1e5, 1e4, 3), ConfigError);
}

TEST(PulseAnalysis, NoiselessScalingIsPureShotNoise) {
  CoherentPulseTrainSpec base;
  base.pulse_count = 500;
  auto c = version_one_preset();
  c.enc_electrons = 0.0;
  const auto grid = photon_number_grid(base, 1e5, 1e7, 5);
  const auto w = align_window(base, c, WindowKind::boxcar, 1.25e-6);
  const auto fit = noise_scaling(grid, c, w, 3);
  EXPECT_LT(fit.electronic_variance, 3.0 * fit.electronic_variance_error + 1e-9);
  EXPECT_LT(fit.n_3db, 0.05 * 1e5);
  EXPECT_LT(std::abs(fit.quadratic_coeff), 3.0 * fit.quadratic_error + 1e-12);
  EXPECT_NEAR(fit.loglog_slope, 1.0, 0.05);
}

TEST(PulseAnalysis, ScalingPreconditions) {
  CoherentPulseTrainSpec base;
  base.pulse_count = 100;
  const auto c = version_one_preset();
  const GatingWindow w{WindowKind::boxcar, 1.25e-6, 1.2e-6};
  EXPECT_THROW(noise_scaling(photon_number_grid(base, 1e5, 1e7, 3), c, w, 1), ConfigError);
  base.pulse_count = 500;
  EXPECT_THROW(noise_scaling(photon_number_grid(base, 1e5, 1e6, 3), c, w, 1), ConfigError);
}

TEST(PulseAnalysis, AlignedBoxcarSitsOnThePulse) {
  CoherentPulseTrainSpec spec;
  const auto w = align_window(spec, version_one_preset(), WindowKind::boxcar, 1.25e-6);
  EXPECT_EQ(w.kind, WindowKind::boxcar);
  EXPECT_NEAR(w.duration, 1.25e-6, 1e-15);
  EXPECT_GT(w.offset, 0.8e-6);
  EXPECT_LT(w.offset, 1.6e-6);
}

TEST(PulseAnalysis, WindowSurfaceIsUShaped) {
  CoherentPulseTrainSpec spec;
  spec.mean_photons_per_pulse = 1e6;
  spec.pulse_count = 2000;
  const auto opt = optimize_window(spec, version_one_preset(), WindowKind::boxcar,
                                   {0.5e-6, 5e-6, 0.25e-6}, {1.0e-6, 2.6e-6, 0.1e-6}, 5);
  ASSERT_FALSE(opt.duration_profile.empty());
  const double first = opt.duration_profile.front().n_3db;
  const double last = opt.duration_profile.back().n_3db;
  EXPECT_GT(first, opt.best_n_3db);
  EXPECT_GT(last, opt.best_n_3db);
  EXPECT_GT(opt.best.duration, 0.9e-6);
  EXPECT_LT(opt.best.duration, 2.0e-6);
  EXPECT_THROW(optimize_window(spec, version_one_preset(), WindowKind::boxcar,
                               {1e-6, 0.5e-6, 0.1e-6}, {1e-6, 2e-6, 0.1e-6}, 5),
               ConfigError);
}

TEST(PulseAnalysis, ClassicalCheckThreshold) {
  NoiseScalingResult r;
  r.photon_numbers = {1e5, 1e6};
  r.linear_coeff = 1.0;
  r.quadratic_coeff = 0.09e-6;
  r.quadratic_error = 0.01e-6;
  EXPECT_FALSE(classical_noise_check(r).contaminated);
  r.quadratic_coeff = 0.11e-6;
  const auto report = classical_noise_check(r);
  EXPECT_TRUE(report.contaminated);
  EXPECT_NEAR(report.quadratic_share, 0.11, 1e-12);
  EXPECT_NEAR(report.quadratic_significance, 11.0, 1e-9);
}

TEST(PulseAnalysis, TwoSampleDiagnosticOnWhiteNoise) {
  const Trace t = white_trace(5000 * 1000 + 2000, 1.0, 6);
  const auto d = two_sample_diagnostic(t, GatingWindow{WindowKind::dcs, 1.2e-6, 1.5e-6}, 10e-6, 5000);
  EXPECT_NEAR(d.dcs_variance / d.two_sample_variance, 2.0, 0.15);
  EXPECT_NEAR(d.two_sample_variance, 1.0 / 120.0, 0.1 / 120.0);
}
