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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pfpl/dsp.hpp"
#include "pfpl/error.hpp"

namespace pfpl {
namespace {

constexpr double kKaiserBeta = 5.0;
constexpr std::size_t kZeroCrossings = 10;

// Lowpass FIR at cutoff 1/max(up, down) of Nyquist, DC gain `up`.
std::vector<double> design_filter(std::size_t up, std::size_t down) {
  const std::size_t factor = std::max(up, down);
  const std::size_t half = kZeroCrossings * factor;
  const std::size_t len = 2 * half + 1;
  const double cutoff = 1.0 / static_cast<double>(factor);
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
  std::vector<double> h(len);
  double sum = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const double m = static_cast<double>(k) - static_cast<double>(half);
    const double arg = cutoff * m;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double r = 2.0 * static_cast<double>(k) / static_cast<double>(len - 1) - 1.0;
    const double kaiser = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[k] = cutoff * sinc * kaiser;
    sum += h[k];
  }
  for (double& v : h) v *= static_cast<double>(up) / sum;
  return h;
}

}  // namespace

std::vector<double> resample_poly_filter(std::span<const double> x, std::size_t up, std::size_t down,
                                         std::span<const double> h) {
  require(up > 0 && down > 0, "resampling factors must be positive");
  require(h.size() % 2 == 1, "resampling filter length must be odd");
  const auto half = static_cast<std::ptrdiff_t>((h.size() - 1) / 2);
  const std::size_t n_out = (x.size() * up + down - 1) / down;
  const auto L = static_cast<std::ptrdiff_t>(h.size());
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());
  const auto U = static_cast<std::ptrdiff_t>(up);
  std::vector<double> y(n_out, 0.0);
  for (std::size_t m = 0; m < n_out; ++m) {
    // y[m] = sum_n x[n] h[m*down + half - n*up]
    const std::ptrdiff_t centre = static_cast<std::ptrdiff_t>(m * down) + half;
    std::ptrdiff_t n_hi = centre / U;
    std::ptrdiff_t n_lo = centre - (L - 1) <= 0 ? 0 : (centre - (L - 1) + U - 1) / U;
    n_hi = std::min(n_hi, n_in - 1);
    double acc = 0.0;
    for (std::ptrdiff_t n = n_lo; n <= n_hi; ++n) acc += x[n] * h[centre - n * U];
    y[m] = acc;
  }
  return y;
}

std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down) {
  require(up > 0 && down > 0, "resampling factors must be positive");
  const std::size_t g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};
  return resample_poly_filter(x, up, down, design_filter(up, down));
}

Waveform resample(const Waveform& w, int target_rate) {
  require(target_rate > 0, "target sample rate must be positive");
  if (w.sample_rate() == target_rate) return w;
  const auto g = std::gcd(w.sample_rate(), target_rate);
  auto y = resample_poly(w.view(), static_cast<std::size_t>(target_rate / g),
                         static_cast<std::size_t>(w.sample_rate() / g));
  return Waveform(std::move(y), target_rate);
}

}  // namespace pfpl
