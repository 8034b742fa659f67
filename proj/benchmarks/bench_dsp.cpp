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

#include "pfpl/dsp.hpp"
#include "pfpl/random.hpp"

namespace {

pfpl::Waveform noise(std::size_t n) {
  pfpl::Rng rng(1);
  std::vector<double> v(n);
  for (auto& x : v) x = 0.1 * rng.normal();
  return {std::move(v), pfpl::kDefaultSampleRate};
}

void BM_Stft(benchmark::State& state) {
  const auto w = noise(static_cast<std::size_t>(state.range(0)));
  const pfpl::StftConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(pfpl::stft(w, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Stft)->Arg(16384)->Arg(48000);

void BM_StftRoundTrip(benchmark::State& state) {
  const auto w = noise(static_cast<std::size_t>(state.range(0)));
  const pfpl::StftConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(pfpl::istft(pfpl::stft(w, cfg)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StftRoundTrip)->Arg(16384)->Arg(48000);

void BM_Resample48To16(benchmark::State& state) {
  const pfpl::Waveform w(noise(48000).samples(), 48000);
  for (auto _ : state) benchmark::DoNotOptimize(pfpl::resample(w, 16000));
}
BENCHMARK(BM_Resample48To16);

}  // namespace
