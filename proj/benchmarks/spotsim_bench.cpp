/* Copyright 2026 The spotsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "spotsim/controller.hpp"
#include "spotsim/km_match.hpp"
#include "spotsim/migration_planner.hpp"
#include "support/transitions.hpp"
#include "test_util.hpp"

namespace spotsim {
namespace {

void BM_KmMatch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1e9);
  WeightMatrix w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w.at(i, j) = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(km_match(w));
  state.SetComplexityN(n);
}
BENCHMARK(BM_KmMatch)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_OptimizeConfig(benchmark::State& state) {
  const PerfProfile profile = testing::toy_profile(48, 4, 8, 4);
  std::vector<ParallelConfig> candidates;
  for (int D = 1; static_cast<int>(candidates.size()) < state.range(0); ++D)
    for (const auto& [key, entry] : profile.exec)
      candidates.push_back(ParallelConfig{D, key.P, key.M, key.B});
  candidates.resize(state.range(0));
  OptimizerOptions o;
  o.gpus_per_instance = 4;
  o.instance_cap = 1 << 20;
  for (auto _ : state)
    benchmark::DoNotOptimize(optimize_config(1 << 20, 3.0, profile, candidates, o));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OptimizeConfig)->Arg(1000)->Arg(10000);

void BM_PlanMigration(benchmark::State& state) {
  std::mt19937 rng(static_cast<unsigned>(state.range(0)));
  std::vector<testing::Transition> transitions;
  std::vector<double> caps;
  const bool memopt = state.range(1) != 0;
  for (int i = 0; i < 16; ++i) {
    transitions.push_back(testing::random_transition(rng, 24));
    // A cap below the naive peak so the memory-aware order has work to do.
    const MigrationPlan naive = testing::plan_for(transitions.back(), 0.0, false);
    caps.push_back(memopt ? 0.6 * testing::max_of(naive.peak_usage) : 0.0);
  }
  std::size_t k = 0;
  for (auto _ : state) {
    const std::size_t i = k++ % transitions.size();
    benchmark::DoNotOptimize(testing::plan_for(transitions[i], caps[i], memopt));
  }
}
BENCHMARK(BM_PlanMigration)->Args({7, 0})->Args({7, 1});

}  // namespace
}  // namespace spotsim

BENCHMARK_MAIN();
