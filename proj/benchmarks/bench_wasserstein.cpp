// Copyright 2026 The pfpl-se Authors
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

#include <vector>

#include "pfpl/random.hpp"
#include "pfpl/wasserstein.hpp"

namespace {

std::vector<double> normal(pfpl::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

void BM_W1Sorted(benchmark::State& state) {
  pfpl::Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normal(rng, n), b = normal(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(pfpl::w1_1d(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_W1Sorted)->Arg(8)->Arg(98)->Arg(4096);

void BM_W1Backward(benchmark::State& state) {
  pfpl::Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normal(rng, n), b = normal(rng, n);
  std::vector<double> ga(n), gb(n);
  for (auto _ : state) benchmark::DoNotOptimize(pfpl::w1_1d_backward(a, b, ga, gb));
}
BENCHMARK(BM_W1Backward)->Arg(98)->Arg(4096);

void BM_W1LpOracle(benchmark::State& state) {
  pfpl::Rng rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normal(rng, n), b = normal(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(pfpl::w1_oracle(a, b, 1));
}
BENCHMARK(BM_W1LpOracle)->Arg(4)->Arg(8);

}  // namespace
