#include "pulsenoise/photon_source.hpp"

#include <cmath>
#include <random>
#include <string>

#include "pulsenoise/errors.hpp"

namespace pulsenoise {

namespace {

std::int64_t draw_poisson(double mean, std::mt19937_64& engine) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::int64_t> poisson(mean);
  return poisson(engine);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

void CoherentPulseTrainSpec::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("pulse train: " + what); };
  if (!std::isfinite(mean_photons_per_pulse) || mean_photons_per_pulse < 0.0)
    fail("mean_photons_per_pulse must be >= 0");
  if (!(pulse_duration > 0.0)) fail("pulse_duration must be > 0");
  if (!(repetition_period > pulse_duration))
    fail("repetition_period must exceed pulse_duration");
  if (pulse_count < 1) fail("pulse_count must be >= 1");
  if (!(imbalance_fraction >= -1.0 && imbalance_fraction <= 1.0))
    fail("imbalance_fraction must lie in [-1, 1]");
  if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0))
    fail("quantum_efficiency must lie in (0, 1]");
}

double CoherentPulseTrainSpec::detected_mean_first() const {
  return quantum_efficiency * mean_photons_per_pulse * (1.0 + imbalance_fraction) / 2.0;
}

double CoherentPulseTrainSpec::detected_mean_second() const {
  return quantum_efficiency * mean_photons_per_pulse * (1.0 - imbalance_fraction) / 2.0;
}

std::vector<PulseChargeSample> sample_pulse_train(const CoherentPulseTrainSpec& spec,
                                                  std::uint64_t seed) {
  spec.validate();
  const double mean_first = spec.detected_mean_first();
  const double mean_second = spec.detected_mean_second();

  std::vector<PulseChargeSample> pulses;
  pulses.reserve(static_cast<std::size_t>(spec.pulse_count));
  for (int i = 0; i < spec.pulse_count; ++i) {
    std::mt19937_64 engine(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const auto n1 = draw_poisson(mean_first, engine);
    const auto n2 = draw_poisson(mean_second, engine);
    pulses.push_back({i, static_cast<double>(n1 - n2), static_cast<double>(n1 + n2)});
  }
  return pulses;
}

double expected_shot_variance(const CoherentPulseTrainSpec& spec) {
  return spec.quantum_efficiency * spec.mean_photons_per_pulse;
}

std::vector<double> sample_cw_charges(double photon_flux, double quantum_efficiency,
                                      double imbalance_fraction, double sample_interval,
                                      std::size_t sample_count, std::uint64_t seed) {
  if (!(photon_flux >= 0.0) || !std::isfinite(photon_flux))
    throw ConfigError("cw source: photon_flux must be >= 0");
  if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0))
    throw ConfigError("cw source: quantum_efficiency must lie in (0, 1]");
  if (!(imbalance_fraction >= -1.0 && imbalance_fraction <= 1.0))
    throw ConfigError("cw source: imbalance_fraction must lie in [-1, 1]");
  if (!(sample_interval > 0.0)) throw ConfigError("cw source: sample_interval must be > 0");

  const double per_sample = quantum_efficiency * photon_flux * sample_interval;
  const double mean_first = per_sample * (1.0 + imbalance_fraction) / 2.0;
  const double mean_second = per_sample * (1.0 - imbalance_fraction) / 2.0;

  std::mt19937_64 engine(derive_seed(seed, 0xc3a5c85c97cb3127ULL));
  std::vector<double> charges(sample_count);
  for (auto& q : charges) {
    const auto n1 = draw_poisson(mean_first, engine);
    const auto n2 = draw_poisson(mean_second, engine);
    q = static_cast<double>(n1 - n2);
  }
  return charges;
}

}  // namespace pulsenoise
