#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pulsenoise {

/// Statistical description of a train of coherent light pulses that is split
/// onto the two photodiodes of a balanced detector.
struct CoherentPulseTrainSpec {
  double mean_photons_per_pulse = 0.0;  // N, both diodes together
  double pulse_duration = 1e-6;         // s, rectangular envelope
  double repetition_period = 10e-6;     // s
  int pulse_count = 500;
  double imbalance_fraction = 0.0;      // (N1 - N2) / N, in [-1, 1]
  double quantum_efficiency = 0.9;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  /// Mean detected photoelectrons on diode 1 and diode 2.
  double detected_mean_first() const;
  double detected_mean_second() const;
};

struct PulseChargeSample {
  int pulse_index = 0;
  double differential_electrons = 0.0;  // N1 - N2 after detection
  double total_electrons = 0.0;         // N1 + N2 after detection
};

/// Draws per-pulse photoelectron counts. Each pulse has its own generator
/// seeded from (seed, pulse index), so a pulse's draw does not depend on the
/// other pulses or on the order of evaluation.
std::vector<PulseChargeSample> sample_pulse_train(const CoherentPulseTrainSpec& spec,
                                                  std::uint64_t seed);

/// Variance of the differential photoelectron count: eta * N, independent of
/// the imbalance.
double expected_shot_variance(const CoherentPulseTrainSpec& spec);

/// Differential photoelectrons per sample for continuous illumination with
/// `photon_flux` photons per second on the pair of diodes.
std::vector<double> sample_cw_charges(double photon_flux, double quantum_efficiency,
                                      double imbalance_fraction, double sample_interval,
                                      std::size_t sample_count, std::uint64_t seed);

/// SplitMix64 finalizer. Used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t value);

/// Seed for substream `index` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace pulsenoise
