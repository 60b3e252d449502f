// Serial reference vs OpenMP for the three parallel kernels: posterior chains,
// latent-mixture chains and roster trajectories. Outputs are identical across
// the two paths; only wall time differs.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "ergo/recovery.hpp"

namespace {

using namespace ergo;

Execution exec_of(const benchmark::State& state) {
  return state.range(0) ? Execution::Parallel : Execution::Serial;
}

const std::vector<SubjectDataset>& cohort() {
  static const auto data = isoelastic_cohort(0.0, 1.0, 6, {.seed = 3});
  return data;
}

const LabelledCohort& mixed_cohort() {
  static const auto c = single_model_cohort(ModelFamily::TimeOptimal, 4, {.seed = 5});
  return c;
}

SamplerConfig small_config(const benchmark::State& state) {
  SamplerConfig cfg;
  cfg.chains = 4;
  cfg.samples_per_chain = 1000;
  cfg.burn_in = 200;
  cfg.seed = 11;
  cfg.exec = exec_of(state);
  return cfg;
}

void BM_SamplePosterior(benchmark::State& state) {
  const auto cfg = small_config(state);
  for (auto _ : state) {
    auto post = sample_posterior(cohort(), {}, cfg);
    benchmark::DoNotOptimize(post.draws.data());
  }
  state.counters["threads"] = cfg.exec == Execution::Parallel ? omp_get_max_threads() : 1;
}

void BM_LatentMixture(benchmark::State& state) {
  const auto cfg = small_config(state);
  for (auto _ : state) {
    auto res = run_latent_mixture(mixed_cohort().data, {}, cfg);
    benchmark::DoNotOptimize(res);
  }
}

void BM_SimulateRoster(benchmark::State& state) {
  const auto roster = synthetic_agent_roster();
  const auto d = state.range(1) ? Dynamic::Multiplicative : Dynamic::Additive;
  for (auto _ : state) {
    auto paths = simulate_roster(roster, d, 20000, 7, exec_of(state));
    benchmark::DoNotOptimize(paths.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(roster.size()) * 20000);
}

}  // namespace

BENCHMARK(BM_SamplePosterior)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_LatentMixture)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SimulateRoster)
    ->ArgNames({"parallel", "multiplicative"})
    ->ArgsProduct({{0, 1}, {0, 1}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
