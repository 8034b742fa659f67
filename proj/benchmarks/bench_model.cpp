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

#include "pfpl/complex_unet.hpp"
#include "pfpl/phonetic_encoder.hpp"
#include "pfpl/random.hpp"

namespace {

pfpl::Waveform noise(std::size_t n) {
  pfpl::Rng rng(5);
  std::vector<double> v(n);
  for (auto& x : v) x = 0.1 * rng.normal();
  return {std::move(v), pfpl::kDefaultSampleRate};
}

void BM_UnetForward(benchmark::State& state) {
  const auto model = pfpl::build_model(pfpl::ModelConfig::small10(), 0);
  const auto spec = pfpl::stft(noise(16384), pfpl::StftConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(spec));
}
BENCHMARK(BM_UnetForward)->Unit(benchmark::kMillisecond);

void BM_UnetForwardBackward(benchmark::State& state) {
  const auto model = pfpl::build_model(pfpl::ModelConfig::small10(), 0);
  const auto spec = pfpl::stft(noise(16384), pfpl::StftConfig{});
  const auto pass = model.forward(spec);
  pfpl::ComplexRatioMask grad(pass.mask.frames(), pass.mask.bins(), {1e-3, -1e-3});
  for (auto _ : state) {
    auto p = model.forward(spec);
    pfpl::Gradients g = pfpl::Gradients::zeros_like(model.parameters());
    model.backward(p, grad, g);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_UnetForwardBackward)->Unit(benchmark::kMillisecond);

void BM_EncoderStandIn(benchmark::State& state) {
  const auto enc = pfpl::random_encoder(0, pfpl::EncoderSpec::stand_in(static_cast<std::size_t>(state.range(0))));
  const auto w = noise(16000);
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(w));
}
BENCHMARK(BM_EncoderStandIn)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
