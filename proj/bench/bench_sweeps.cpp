// Serial reference vs OpenMP instance sweeps.

#include "ncmart/harness.hpp"

#include <benchmark/benchmark.h>

namespace h = ncmart::harness;

namespace {

h::ExperimentConfig sweep_config(std::size_t instances) {
  h::ExperimentConfig c = h::preset("acceptance");
  c.instances = instances;
  return c;
}

template <h::VerificationReport (*Cmd)(const h::ExperimentConfig&, ncmart::Execution)>
void run(benchmark::State& state, ncmart::Execution exec) {
  const h::ExperimentConfig c = sweep_config(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    h::VerificationReport r = Cmd(c, exec);
    benchmark::DoNotOptimize(r.checks.data());
  }
  state.counters["threads"] = exec == ncmart::Execution::parallel ? ncmart::max_threads() : 1;
}

void BM_verify_serial(benchmark::State& s) { run<h::cmd_verify>(s, ncmart::Execution::serial); }
void BM_verify_parallel(benchmark::State& s) { run<h::cmd_verify>(s, ncmart::Execution::parallel); }
void BM_ratios_serial(benchmark::State& s) { run<h::cmd_ratios>(s, ncmart::Execution::serial); }
void BM_ratios_parallel(benchmark::State& s) { run<h::cmd_ratios>(s, ncmart::Execution::parallel); }
void BM_kolmogorov_serial(benchmark::State& s) { run<h::cmd_kolmogorov>(s, ncmart::Execution::serial); }
void BM_kolmogorov_parallel(benchmark::State& s) { run<h::cmd_kolmogorov>(s, ncmart::Execution::parallel); }

}  // namespace

BENCHMARK(BM_verify_serial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_verify_parallel)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ratios_serial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ratios_parallel)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kolmogorov_serial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kolmogorov_parallel)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
