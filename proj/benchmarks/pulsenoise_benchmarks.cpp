#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pulsenoise/electronics.hpp"
#include "pulsenoise/pulse_analysis.hpp"
#include "pulsenoise/spectral.hpp"

namespace pn = pulsenoise;

namespace {

pn::CoherentPulseTrainSpec train(int pulses) {
  pn::CoherentPulseTrainSpec spec;
  spec.mean_photons_per_pulse = 1e6;
  spec.pulse_count = pulses;
  return spec;
}

pn::Trace noise_trace(std::size_t n) {
  pn::Trace t;
  t.origin_time = -5e-6;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  t.samples.resize(n);
  for (auto& v : t.samples) v = normal(rng);
  return t;
}

void BM_SamplePulseTrain(benchmark::State& state) {
  const auto spec = train(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pn::sample_pulse_train(spec, 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SamplePulseTrain)->Arg(1000)->Arg(10000);

void BM_SynthesizeTrace(benchmark::State& state) {
  const auto spec = train(static_cast<int>(state.range(0)));
  const auto chain = pn::version_one_preset();
  const auto pulses = pn::sample_pulse_train(spec, 3);
  for (auto _ : state) benchmark::DoNotOptimize(pn::synthesize_trace(pulses, spec, chain, 3));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 1000);
}
BENCHMARK(BM_SynthesizeTrace)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_EstimatePsd(benchmark::State& state) {
  const auto trace = noise_trace(std::size_t{1} << 20);
  const auto segment = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pn::estimate_psd(trace, segment));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(trace.samples.size() * sizeof(double)));
}
BENCHMARK(BM_EstimatePsd)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_IntegrateWindow(benchmark::State& state) {
  const auto trace = noise_trace(10000 * 1000 + 2000);
  const auto kind = state.range(0) ? pn::WindowKind::dcs : pn::WindowKind::boxcar;
  const pn::GatingWindow w{kind, 1.25e-6, 1.2e-6};
  for (auto _ : state) benchmark::DoNotOptimize(pn::integrate_window(trace, w, 10e-6, 10000));
  state.SetItemsProcessed(state.iterations() * 10000);
  state.SetLabel(pn::to_string(kind));
}
BENCHMARK(BM_IntegrateWindow)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
