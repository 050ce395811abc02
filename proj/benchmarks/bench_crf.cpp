// Copyright 2026 The mtltag Authors
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


#include <benchmark/benchmark.h>

#include <random>

#include "mtltag/crf.hpp"

using namespace mtltag;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = normal(gen);
  return t;
}

struct Instance {
  Tensor emissions, transitions, begin, end;

  Instance(std::size_t steps, std::size_t labels) {
    std::mt19937_64 gen(steps * 131 + labels);
    emissions = random_tensor(steps, labels, gen);
    transitions = random_tensor(labels, labels, gen);
    begin = random_tensor(1, labels, gen);
    end = random_tensor(1, labels, gen);
  }
};

// Args: sentence length, label count.
void BM_CrfLogPartition(benchmark::State& state) {
  const Instance x(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(crf::log_partition(x.emissions, x.transitions, x.begin, x.end));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CrfViterbi(benchmark::State& state) {
  const Instance x(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(crf::viterbi(x.emissions, x.transitions, x.begin, x.end));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CrfMarginals(benchmark::State& state) {
  const Instance x(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(crf::marginals(x.emissions, x.transitions, x.begin, x.end));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_CrfLogPartition)->ArgsProduct({{10, 50}, {9, 17, 50}});
BENCHMARK(BM_CrfViterbi)->ArgsProduct({{10, 50}, {9, 17, 50}});
BENCHMARK(BM_CrfMarginals)->ArgsProduct({{10, 50}, {9, 17, 50}});
BENCHMARK_MAIN();
