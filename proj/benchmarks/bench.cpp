#include "qgrp/dcf_model.hpp"
#include "qgrp/metrics.hpp"
#include "qgrp/simulator.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_SolveFixedPoint(benchmark::State& state) {
  qgrp::dcf::DcfParams p;
  const auto counts = qgrp::dcf::region_counts(100e-6, 150.0, p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(qgrp::dcf::solve_fixed_point(counts, p));
  }
}
BENCHMARK(BM_SolveFixedPoint);

void BM_BuildReferenceGrid(benchmark::State& state) {
  qgrp::dcf::DcfParams p;
  for (auto _ : state) {
    benchmark::DoNotOptimize(qgrp::dcf::build_table(qgrp::dcf::default_density_axis(),
                                                    qgrp::dcf::default_distance_axis(), p));
  }
}
BENCHMARK(BM_BuildReferenceGrid)->Unit(benchmark::kMillisecond);

void BM_Lookup(benchmark::State& state) {
  const auto table = qgrp::dcf::reference_table();
  double r = 100.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(table.lookup(104.0, r));
    r = r > 250.0 ? 100.0 : r + 1.0;
  }
}
BENCHMARK(BM_Lookup);

void BM_Run(benchmark::State& state) {
  qgrp::ScenarioConfig c;
  c.protocol = state.range(1) == 0 ? qgrp::Protocol::Qgrp : qgrp::Protocol::Aodv;
  c.topology.nodes = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const auto r = qgrp::sim::run(c);
    benchmark::DoNotOptimize(qgrp::metrics::compute_metrics(r.log, c.warm_up, c.sim_duration));
  }
}
BENCHMARK(BM_Run)->Args({100, 0})->Args({100, 1})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
