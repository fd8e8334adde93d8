// Copyright 2026 The ucs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference vs OpenMP kernels. Arg 0 selects the execution mode
// (0 serial, 1 parallel); both produce bit-identical results.

#include <benchmark/benchmark.h>

#include <vector>

#include "ucs/harness.hpp"
#include "ucs/theory.hpp"

namespace ucs {
namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

void BM_UnionWidth(benchmark::State& state) {
  const std::vector<SupportWindow> windows = sliding_windows(256, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(width_support_union(windows, 256, 20000, 1, mode(state)));
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_UnionWidth)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PairWidths(benchmark::State& state) {
  const std::vector<SupportWindow> windows = sliding_windows(64, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(width_difference_cones(windows, 64, 20000, 2, mode(state)));
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_PairWidths)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TangentWidth(benchmark::State& state) {
  Vector x = Vector::Zero(256);
  x.head(16).setOnes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(width_tangent_cone(x, 20000, 3, mode(state)));
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_TangentWidth)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PhaseTransition(benchmark::State& state) {
  ExperimentSpec spec;
  spec.n = 32;
  spec.k = 4;
  spec.m_grid = {8, 16};
  spec.trials = 8;
  spec.seed = 4;
  spec.solver.lambda1 = 100.0;
  spec.solver.penalty_factor = 0.1;
  spec.solver.eta_p_scale = 100.0;
  spec.solver.horizon = 2000;
  spec.solver.average_tail = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(phase_transition(spec, mode(state)));
  state.SetItemsProcessed(state.iterations() * 2 * 2 * 8);
}
BENCHMARK(BM_PhaseTransition)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace ucs

BENCHMARK_MAIN();
