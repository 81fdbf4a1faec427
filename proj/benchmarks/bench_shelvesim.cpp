// Microbenchmarks for the hot paths: rate-model assembly, both integrators,
// photon statistics, and the end-to-end shot and trial loops.

#include <benchmark/benchmark.h>

#include <vector>

#include "shelvesim/analysis.hpp"
#include "shelvesim/atomic_model.hpp"
#include "shelvesim/dynamics.hpp"
#include "shelvesim/photon_stats.hpp"
#include "shelvesim/protocol.hpp"
#include "shelvesim/rng.hpp"

namespace {

using namespace shelvesim;

LaserConfig shelve_lasers(const AtomicConstants& c) {
  LaserConfig l = default_lasers(c);
  l.on_411 = true;
  l.on_935 = true;
  return l;
}

void BM_BuildRateModel(benchmark::State& state) {
  AtomicConstants c;
  LaserConfig l = shelve_lasers(c);
  for (auto _ : state) {
    RateModel m = build_rate_model(c, l);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_BuildRateModel);

void BM_EvolveOde200ms(benchmark::State& state) {
  AtomicConstants c;
  RateModel m = build_rate_model(c, shelve_lasers(c));
  PopulationVector p0 = PopulationVector::pure(Manifold::S_F1);
  for (auto _ : state) {
    PopulationVector p = evolve_ode(p0, m, 0.2);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_EvolveOde200ms);

void BM_TrajectoryShelve200ms(benchmark::State& state) {
  AtomicConstants c;
  RateModel m = build_rate_model(c, shelve_lasers(c));
  std::uint64_t i = 0;
  for (auto _ : state) {
    Prng rng = shot_rng(17, i++);
    Manifold end = evolve_stochastic(Manifold::S_F1, m, 0.2, rng);
    benchmark::DoNotOptimize(end);
  }
}
BENCHMARK(BM_TrajectoryShelve200ms);

void BM_PoissonBrightDraw(benchmark::State& state) {
  Prng rng(3);
  for (auto _ : state) {
    int k = poisson_draw(rng, 60.1);
    benchmark::DoNotOptimize(k);
  }
}
BENCHMARK(BM_PoissonBrightDraw);

void BM_ChooseThresholds(benchmark::State& state) {
  for (auto _ : state) {
    int detect = choose_detection_threshold(0.1, 1e-7);
    int doppler = choose_doppler_threshold(60.1, 1e-6);
    benchmark::DoNotOptimize(detect);
    benchmark::DoNotOptimize(doppler);
  }
}
BENCHMARK(BM_ChooseThresholds);

void BM_WilsonInterval(benchmark::State& state) {
  for (auto _ : state) {
    BinomialEstimate e = wilson_interval(13, 100000, 1.0);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(BM_WilsonInterval);

void BM_SpamShot(benchmark::State& state) {
  ProtocolParams params;
  CountModel counts;
  AtomicConstants constants;
  LaserConfig lasers = default_lasers(constants);
  Thresholds th;
  th.detect_cutoff = 5;
  th.doppler_cutoff = 27;
  std::uint64_t offset = 0;
  for (auto _ : state) {
    auto records = run_spam_campaign(params, counts, th, constants, lasers, 1,
                                     99, 1, offset);
    offset += 2;
    benchmark::DoNotOptimize(records);
  }
}
BENCHMARK(BM_SpamShot);

void BM_TwoIonTrialBlock(benchmark::State& state) {
  CountModel counts;
  TwoIonParams params;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    TwoIonResult res = run_two_ion_discrimination(60, counts, params, seed++);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_TwoIonTrialBlock);

void BM_M1Fit(benchmark::State& state) {
  AtomicConstants c;
  std::vector<ScanPoint> scan;
  for (double t : {0.15, 0.2, 0.25, 0.3}) {
    ScanPoint p;
    p.t = t;
    p.trials = 100000;
    p.errors = static_cast<std::uint64_t>(100000.0 * shelving_error_analytic(t, c));
    scan.push_back(p);
  }
  for (auto _ : state) {
    M1Fit fit = fit_a_m1(scan, c);
    benchmark::DoNotOptimize(fit);
  }
}
BENCHMARK(BM_M1Fit);

}  // namespace

BENCHMARK_MAIN();
