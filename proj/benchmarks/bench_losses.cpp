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

#include <memory>

#include "pfpl/losses.hpp"
#include "pfpl/random.hpp"

namespace {

pfpl::Waveform noise(std::uint64_t seed, std::size_t n) {
  pfpl::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = 0.1 * rng.normal();
  return {std::move(v), pfpl::kDefaultSampleRate};
}

void run_loss(benchmark::State& state, pfpl::LossName name, bool grad) {
  pfpl::LossSpec spec;
  spec.name = name;
  if (spec.needs_encoder()) spec.encoder = std::make_shared<pfpl::PhoneticEncoder>(pfpl::random_encoder(0));
  const auto x = noise(1, 16384), y = noise(2, 16384), yh = noise(3, 16384);
  std::vector<double> g;
  pfpl::LossOptions opts;
  if (grad) opts.grad_y_hat = &g;
  for (auto _ : state) benchmark::DoNotOptimize(pfpl::compute_loss(spec, x, y, yh, opts).total);
}

void BM_LossMae(benchmark::State& s) { run_loss(s, pfpl::LossName::mae, true); }
void BM_LossWsdr(benchmark::State& s) { run_loss(s, pfpl::LossName::wsdr, true); }
void BM_LossPfpl(benchmark::State& s) { run_loss(s, pfpl::LossName::pfpl, false); }
void BM_LossPfplGrad(benchmark::State& s) { run_loss(s, pfpl::LossName::pfpl, true); }
BENCHMARK(BM_LossMae);
BENCHMARK(BM_LossWsdr);
BENCHMARK(BM_LossPfpl)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossPfplGrad)->Unit(benchmark::kMillisecond);

}  // namespace
