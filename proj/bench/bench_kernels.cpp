// Serial versus OpenMP paths of the two heavy kernels: Monte Carlo
// simulation over redraws of the assignment, and exact enumeration of all
// assignments. The two paths produce identical output (checked in the test
// suite); this target measures the speed difference.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "factex/design.hpp"
#include "factex/enumerate.hpp"
#include "factex/population.hpp"
#include "factex/power.hpp"
#include "factex/rng.hpp"
#include "factex/simulate.hpp"

namespace {

factex::PotentialOutcomesTable random_table(int k, long long n, std::uint64_t seed) {
  const factex::FactorialDesign d(k);
  factex::CounterRng rng(seed, factex::kRngDomainGeneric, 0);
  std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(n));
  for (auto& row : rows) {
    row.resize(static_cast<std::size_t>(d.num_treatments()));
    for (auto& cell : row) cell = static_cast<std::uint8_t>(rng.below(2));
  }
  return factex::PotentialOutcomesTable(d, std::move(rows));
}

void bench_simulate(benchmark::State& state, bool parallel) {
  const auto table = random_table(3, 720, 11);
  const auto contrasts = factex::ContrastMatrix::build(table.design());
  const auto plan = factex::allocate_balanced(table.design(), 720);
  factex::SimulateOptions options;
  options.draws = state.range(0);
  options.seed = 7;
  options.parallel = parallel;
  for (auto _ : state) {
    const auto report = parallel ? factex::simulate(table, contrasts, plan, options)
                                 : factex::simulate_serial(table, contrasts, plan, options);
    benchmark::DoNotOptimize(report.joint_reject_ier);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void simulate_serial(benchmark::State& state) { bench_simulate(state, false); }
void simulate_parallel(benchmark::State& state) { bench_simulate(state, true); }

BENCHMARK(simulate_serial)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(simulate_parallel)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void bench_enumerate(benchmark::State& state, bool parallel) {
  // 12 units in four arms of three: 369600 assignments
  const auto table = random_table(2, 12, 23);
  const auto contrasts = factex::ContrastMatrix::build(table.design());
  const auto plan = factex::allocate_balanced(table.design(), 12);
  for (auto _ : state) {
    const auto result =
        parallel ? factex::enumerate_randomizations(table, contrasts, plan)
                 : factex::enumerate_randomizations_serial(table, contrasts, plan);
    benchmark::DoNotOptimize(result.variances_defined);
  }
}

void enumerate_serial(benchmark::State& state) { bench_enumerate(state, false); }
void enumerate_parallel(benchmark::State& state) { bench_enumerate(state, true); }

BENCHMARK(enumerate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(enumerate_parallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
