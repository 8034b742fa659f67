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

#include <cmath>
#include <complex>
#include <cstring>

#include "doctest.h"
#include "fixtures.hpp"
#include "pfpl/complex_unet.hpp"
#include "pfpl/error.hpp"
#include "pfpl/trainer.hpp"

using namespace pfpl;

namespace {

// Per layer: real and imaginary kernels plus biases, and per-part norm
// affine terms on every layer except the output layer.
std::size_t count_by_hand(const ModelConfig& cfg) {
  const std::size_t n = cfg.encoder.size();
  std::size_t total = 0;
  auto layer = [&](const UnetLayer& l, std::size_t c_in, bool norm) {
    total += (l.kernel_f * l.kernel_t * c_in * l.channels + l.channels) * 2;
    if (norm) total += 4 * l.channels;
  };
  std::size_t c_in = 1;
  for (const auto& l : cfg.encoder) {
    layer(l, c_in, true);
    c_in = l.channels;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t in = j == 0 ? cfg.encoder[n - 1].channels
                                  : cfg.decoder[j - 1].channels + cfg.encoder[n - 1 - j].channels;
    layer(cfg.decoder[j], in, j + 1 < n);
  }
  return total;
}

ComplexSpectrogram random_spec(Rng& rng, std::size_t frames, std::size_t bins, double scale = 1.0) {
  StftConfig cfg;
  cfg.window_length = 2 * (bins - 1);
  cfg.hop_length = cfg.window_length / 4;
  const std::size_t n = (frames - 1) * cfg.hop_length;
  ComplexSpectrogram s(frames, bins, cfg, n);
  for (auto& v : s.values()) v = {scale * rng.normal(), scale * rng.normal()};
  return s;
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.name = "tiny";
  c.bins = 33;
  c.encoder = {{3, 3, 2, 1, 4}, {3, 3, 2, 2, 6}};
  c.decoder = {{3, 3, 2, 2, 4}, {3, 3, 2, 1, 1}};
  return c;
}

bool params_bitwise_equal(const ParameterSet& a, const ParameterSet& b) {
  if (a.count() != b.count()) return false;
  for (std::size_t i = 0; i < a.count(); ++i) {
    if (a[i].name != b[i].name || a[i].shape != b[i].shape) return false;
    if (std::memcmp(a[i].values.data(), b[i].values.data(), a[i].size() * sizeof(float)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("complex_unet") {

TEST_CASE("presets validate and small10 stays desk-scale") {
  const auto s = ModelConfig::small10();
  CHECK_NOTHROW(s.validate());
  CHECK(s.depth() == 10);
  CHECK_NOTHROW(ModelConfig::large20().validate());
  CHECK(ModelConfig::large20().depth() == 20);
  const auto m = build_model(s, 0);
  CHECK(m.parameter_count() <= 1000000);
}

TEST_CASE("parameter count equals the closed-form sum") {
  for (const auto& cfg : {ModelConfig::small10(), ModelConfig::large20(), tiny_config()}) {
    CHECK(build_model(cfg, 1).parameter_count() == count_by_hand(cfg));
    CHECK(expected_parameter_count(cfg) == count_by_hand(cfg));
  }
}

TEST_CASE("same seed gives bitwise-identical parameters") {
  const auto a = build_model(ModelConfig::small10(), 42);
  const auto b = build_model(ModelConfig::small10(), 42);
  const auto c = build_model(ModelConfig::small10(), 43);
  CHECK(params_bitwise_equal(a.parameters(), b.parameters()));
  CHECK_FALSE(params_bitwise_equal(a.parameters(), c.parameters()));
}

TEST_CASE("malformed configs are rejected") {
  auto c = tiny_config();
  c.decoder.pop_back();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(build_model(c, 0), ConfigError);
  auto d = tiny_config();
  d.decoder[0].stride_f = 1;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  auto e = tiny_config();
  e.decoder.back().channels = 2;
  CHECK_THROWS_AS(e.validate(), ConfigError);
  CHECK_THROWS_AS(ModelConfig::preset("huge"), ConfigError);
}

TEST_CASE("serialize and parse round trip") {
  for (const auto& cfg : {ModelConfig::small10(), ModelConfig::large20(), tiny_config()}) {
    CHECK(ModelConfig::parse(cfg.serialize()) == cfg);
  }
  CHECK(ModelConfig::parse("small10") == ModelConfig::small10());
  CHECK_THROWS_AS(ModelConfig::parse("name=x;bins=abc"), ConfigError);
}

TEST_CASE("parameter layout mismatch is an integrity error") {
  auto params = MaskEstimator::allocate_parameters(tiny_config());
  params[0].values.pop_back();
  CHECK_THROWS_AS(MaskEstimator(tiny_config(), params), IntegrityError);
  CHECK_THROWS_AS(MaskEstimator(ModelConfig::small10(), MaskEstimator::allocate_parameters(tiny_config())),
                  IntegrityError);
}

TEST_CASE("mask shape and bound on a 63 x 513 input") {
  Rng rng(1);
  const auto m = build_model(ModelConfig::small10(), 3);
  const auto x = random_spec(rng, 63, 513);
  const auto mask = estimate_mask(m, x);
  CHECK(mask.frames() == 63);
  CHECK(mask.bins() == 513);
  CHECK(mask.max_magnitude() < 1.0);
}

TEST_CASE("large20 forward-passes a 63 x 513 spectrogram") {
  Rng rng(2);
  const auto m = build_model(ModelConfig::large20(), 0);
  const auto mask = estimate_mask(m, random_spec(rng, 63, 513));
  CHECK(mask.frames() == 63);
  CHECK(mask.bins() == 513);
  CHECK(mask.max_magnitude() < 1.0);
}

TEST_CASE("mask stays strictly inside the unit disc for extreme inputs") {
  Rng rng(3);
  auto m = build_model(ModelConfig::small10(), 4);
  for (auto& p : m.parameters()) {
    for (auto& v : p.values) v *= 4.0f;
  }
  for (double amp : {100.0, -100.0}) {
    auto x = random_spec(rng, 20, 513, 1.0);
    for (auto& v : x.values()) v = {amp * std::copysign(1.0, v.real()), amp};
    const auto mask = estimate_mask(m, x);
    for (const auto& v : mask.values()) {
      CHECK(std::isfinite(v.real()));
      REQUIRE(std::abs(v) < 1.0);
    }
  }
}

TEST_CASE("zero output layer yields an all-zero mask") {
  Rng rng(4);
  auto m = build_model(ModelConfig::small10(), 5);
  const std::string last = "dec" + std::to_string(m.config().decoder.size() - 1);
  for (auto& p : m.parameters()) {
    if (p.name.rfind(last + ".", 0) == 0) std::fill(p.values.begin(), p.values.end(), 0.0f);
  }
  const auto mask = estimate_mask(m, random_spec(rng, 16, 513));
  for (const auto& v : mask.values()) CHECK(v == std::complex<double>(0.0, 0.0));
}

TEST_CASE("bins mismatch is a shape error") {
  Rng rng(5);
  const auto m = build_model(ModelConfig::small10(), 0);
  CHECK_THROWS_AS(estimate_mask(m, random_spec(rng, 10, 257)), ShapeError);
}

TEST_CASE("bound_mask follows tanh(|o|) o / |o|") {
  const std::complex<double> o(3.0, -4.0);
  const auto m = bound_mask(o);
  CHECK(std::abs(m) == doctest::Approx(std::tanh(5.0)));
  CHECK(std::arg(m) == doctest::Approx(std::arg(o)));
  CHECK(bound_mask({0.0, 0.0}) == std::complex<double>(0.0, 0.0));
  CHECK(std::abs(bound_mask({1e6, 1e6})) < 1.0);
}

TEST_CASE("bound_mask backward matches finite differences") {
  Rng rng(6);
  for (double scale : {1e-6, 1e-3, 0.1, 1.0, 3.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      const std::complex<double> o(scale * rng.normal(), scale * rng.normal());
      const std::complex<double> g(rng.normal(), rng.normal());
      auto f = [&](std::span<const double> v) {
        const auto m = bound_mask({v[0], v[1]});
        return g.real() * m.real() + g.imag() * m.imag();
      };
      const auto a = bound_mask_backward(o, g);
      const std::vector<double> grad = {a.real(), a.imag()};
      const std::vector<std::size_t> idx = {0, 1};
      const double h = std::min(1e-6, scale * 1e-3);
      CHECK(testing::check_gradient(f, {o.real(), o.imag()}, grad, idx, h).max_rel_error < 1e-6);
    }
  }
}

TEST_CASE("masking is pointwise") {
  Rng rng(7);
  const auto x = random_spec(rng, 12, 33);
  ComplexRatioMask mask(12, 33);
  for (auto& v : mask.values()) v = {0.5 * rng.normal(), 0.5 * rng.normal()};
  const auto y = apply_mask(mask, x);
  for (std::size_t i = 0; i < y.values().size(); ++i) CHECK(y.values()[i] == mask.values()[i] * x.values()[i]);

  auto x2 = x;
  std::swap(x2.at(5, 7), x2.at(2, 3));
  const auto y2 = apply_mask(mask, x2);
  for (std::size_t t = 0; t < 12; ++t) {
    for (std::size_t f = 0; f < 33; ++f) {
      const bool touched = (t == 5 && f == 7) || (t == 2 && f == 3);
      CHECK((y2.at(t, f) != y.at(t, f)) == touched);
    }
  }
}

TEST_CASE("identity injection reconstructs the input") {
  Rng rng(8);
  auto m = build_model(ModelConfig::small10(), 0);
  m.inject_mask(MaskInjection::identity);
  const auto x = testing::random_waveform(rng, 16000);
  const StftConfig cfg;
  const auto y = enhance(m, x, cfg);
  const auto ref = istft(stft(x, cfg));
  CHECK(relative_l2_error(y.view(), ref.view()) < 1e-6);
  CHECK(relative_l2_error(y.view(), x.view()) < 1e-6);

  m.inject_mask(MaskInjection::zero);
  for (double v : enhance(m, x, cfg).samples()) CHECK(v == 0.0);
}

TEST_CASE("enhance contract: zero in, zero out; length kept; finite") {
  Rng rng(9);
  const auto m = build_model(ModelConfig::small10(), 1);
  const auto z = enhance(m, Waveform::zeros(16000), StftConfig{});
  CHECK(z.size() == 16000);
  for (double v : z.samples()) CHECK(v == 0.0);
  const auto y = enhance(m, testing::random_waveform(rng, 16000), StftConfig{});
  CHECK(y.size() == 16000);
  for (double v : y.samples()) REQUIRE(std::isfinite(v));
}

TEST_CASE("forward is deterministic") {
  Rng rng(10);
  const auto m = build_model(ModelConfig::small10(), 2);
  const auto x = random_spec(rng, 20, 513);
  const auto a = estimate_mask(m, x), b = estimate_mask(m, x);
  CHECK(a.values() == b.values());
}

TEST_CASE("parameter gradients match finite differences") {
  Rng rng(11);
  auto model = build_model(tiny_config(), 12);
  StftConfig stft_cfg;
  stft_cfg.window_length = 64;
  stft_cfg.hop_length = 16;
  const auto noisy = testing::random_waveform(rng, 600, 0.3);
  const auto clean = testing::random_waveform(rng, 600, 0.3);
  LossSpec loss;
  loss.name = LossName::mse;
  auto grads = Gradients::zeros_like(model.parameters());
  pipeline_loss(model, loss, stft_cfg, noisy, clean, &grads);

  double worst = 0.0;
  for (std::size_t p = 0; p < model.parameters().count(); ++p) {
    auto& param = model.parameters()[p];
    const auto idx = testing::sample_indices(rng, param.size(), 3);
    for (std::size_t i : idx) {
      // Parameters are float32; step in float and use the realized step size.
      const float keep = param.values[i];
      const float up = keep + 1e-5f, down = keep - 1e-5f;
      param.values[i] = up;
      const double lu = pipeline_loss(model, loss, stft_cfg, noisy, clean).total;
      param.values[i] = down;
      const double ld = pipeline_loss(model, loss, stft_cfg, noisy, clean).total;
      param.values[i] = keep;
      const double numeric = (lu - ld) / (static_cast<double>(up) - static_cast<double>(down));
      const double analytic = grads[p][i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-4});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("gradients reach at least 99% of parameters") {
  Rng rng(13);
  const auto model = build_model(ModelConfig::small10(), 14);
  const auto noisy = testing::random_waveform(rng, 16384, 0.2);
  const auto clean = testing::random_waveform(rng, 16384, 0.2);
  LossSpec loss;
  loss.name = LossName::mae;
  auto grads = Gradients::zeros_like(model.parameters());
  pipeline_loss(model, loss, StftConfig{}, noisy, clean, &grads);
  std::size_t nonzero = 0, total = 0;
  for (const auto& g : grads.values) {
    for (double v : g) {
      nonzero += v != 0.0;
      ++total;
    }
  }
  CHECK(total == model.parameter_count());
  CHECK(static_cast<double>(nonzero) >= 0.99 * static_cast<double>(total));
}

}
