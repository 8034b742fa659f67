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

#include "pfpl/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "pfpl/error.hpp"

namespace pfpl {

Waveform::Waveform(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  require(sample_rate_ > 0, "sample rate must be positive, got " + std::to_string(sample_rate_));
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) throw InvalidInput("non-finite sample at index " + std::to_string(i));
  }
}

Waveform Waveform::zeros(std::size_t n, int sample_rate) {
  return Waveform(std::vector<double>(n, 0.0), sample_rate);
}

double Waveform::duration_seconds() const {
  return static_cast<double>(samples_.size()) / static_cast<double>(sample_rate_);
}

std::string to_string(WindowType w) {
  switch (w) {
    case WindowType::hann: return "hann";
    case WindowType::rectangular: return "rectangular";
  }
  return "unknown";
}

WindowType window_from_string(const std::string& name) {
  if (name == "hann") return WindowType::hann;
  if (name == "rectangular" || name == "boxcar") return WindowType::rectangular;
  throw ConfigError("unknown window type: " + name);
}

std::vector<double> make_window(WindowType type, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (type == WindowType::hann) {
    for (std::size_t n = 0; n < length; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                  static_cast<double>(length));
    }
  }
  return w;
}

void StftConfig::validate() const {
  require<ConfigError>(window_length >= 2 && window_length % 2 == 0,
                       "window length must be even and >= 2");
  require<ConfigError>(hop_length > 0 && hop_length <= window_length,
                       "hop length must be in [1, window_length]");
  const auto w = make_window(window, window_length);
  std::vector<double> sums(hop_length, 0.0);
  for (std::size_t n = 0; n < window_length; ++n) sums[n % hop_length] += w[n];
  const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
  require<ConfigError>(*lo > 0.0 && (*hi - *lo) <= 1e-9 * *hi,
                       to_string(window) + " window of length " + std::to_string(window_length) +
                           " is not constant-overlap-add at hop " + std::to_string(hop_length));
}

std::size_t StftConfig::frames_for(std::size_t n) const {
  if (centered) return n / hop_length + 1;
  return n < window_length ? 0 : (n - window_length) / hop_length + 1;
}

ComplexSpectrogram::ComplexSpectrogram(std::size_t frames, std::size_t bins, StftConfig config,
                                       std::size_t original_length)
    : frames_(frames),
      bins_(bins),
      config_(config),
      original_length_(original_length),
      values_(frames * bins) {}

namespace {

// numpy-style "reflect" extension that keeps mirroring for long pads.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

std::size_t pad_for(const StftConfig& cfg) { return cfg.centered ? cfg.window_length / 2 : 0; }

std::vector<double> synthesis_envelope(const StftConfig& cfg, std::size_t frames,
                                       const std::vector<double>& window) {
  std::vector<double> env((frames - 1) * cfg.hop_length + cfg.window_length, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t n = 0; n < cfg.window_length; ++n) {
      env[t * cfg.hop_length + n] += window[n] * window[n];
    }
  }
  return env;
}

constexpr double kEnvelopeFloor = 1e-11;

void check_spectrogram(const ComplexSpectrogram& s) {
  const auto& cfg = s.config();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw InvalidInput(std::string("spectrogram carries an invalid config: ") + e.what());
  }
  require(s.bins() == cfg.bins(), "spectrogram has " + std::to_string(s.bins()) +
                                      " bins but its config implies " + std::to_string(cfg.bins()));
  require(s.frames() >= 1 && s.frames() == cfg.frames_for(s.original_length()),
          "spectrogram frame count " + std::to_string(s.frames()) +
              " is inconsistent with original length " + std::to_string(s.original_length()));
}

}  // namespace

ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  const std::size_t n = w.size();
  require(n > 0, "stft of an empty waveform");
  if (cfg.centered) {
    require(n >= cfg.hop_length, "waveform of " + std::to_string(n) +
                                     " samples is shorter than one hop (" +
                                     std::to_string(cfg.hop_length) + ")");
  } else {
    require(n >= cfg.window_length, "waveform shorter than one window");
  }
  const std::size_t frames = cfg.frames_for(n);
  const std::size_t pad = pad_for(cfg);
  const auto window = make_window(cfg.window, cfg.window_length);
  ComplexSpectrogram spec(frames, cfg.bins(), cfg, n);
  detail::RealFft fft(cfg.window_length);
  std::vector<double> frame(cfg.window_length);
  const auto& x = w.samples();
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < cfg.window_length; ++k) {
      const auto pos = static_cast<std::ptrdiff_t>(t * cfg.hop_length + k) -
                       static_cast<std::ptrdiff_t>(pad);
      frame[k] = x[reflect_index(pos, n)] * window[k];
    }
    fft.forward(frame.data(), &spec.at(t, 0));
  }
  return spec;
}

Waveform istft(const ComplexSpectrogram& s, int sample_rate) {
  check_spectrogram(s);
  const auto& cfg = s.config();
  const std::size_t win = cfg.window_length;
  const auto window = make_window(cfg.window, win);
  const auto env = synthesis_envelope(cfg, s.frames(), window);
  std::vector<double> buffer(env.size(), 0.0);
  detail::RealFft fft(win);
  std::vector<double> frame(win);
  const double scale = 1.0 / static_cast<double>(win);
  for (std::size_t t = 0; t < s.frames(); ++t) {
    fft.inverse(&s.at(t, 0), frame.data());
    for (std::size_t k = 0; k < win; ++k) {
      buffer[t * cfg.hop_length + k] += frame[k] * scale * window[k];
    }
  }
  const std::size_t pad = pad_for(cfg);
  std::vector<double> out(s.original_length(), 0.0);
  for (std::size_t i = 0; i < out.size() && pad + i < buffer.size(); ++i) {
    const double e = env[pad + i];
    out[i] = e > kEnvelopeFloor ? buffer[pad + i] / e : 0.0;
  }
  return Waveform(std::move(out), sample_rate);
}

ComplexSpectrogram istft_backward(std::span<const double> grad_waveform,
                                  const ComplexSpectrogram& like) {
  check_spectrogram(like);
  require(grad_waveform.size() == like.original_length(),
          "gradient length does not match the spectrogram's original length");
  const auto& cfg = like.config();
  const std::size_t win = cfg.window_length;
  const auto window = make_window(cfg.window, win);
  const auto env = synthesis_envelope(cfg, like.frames(), window);
  std::vector<double> gbuf(env.size(), 0.0);
  const std::size_t pad = pad_for(cfg);
  for (std::size_t i = 0; i < grad_waveform.size() && pad + i < gbuf.size(); ++i) {
    const double e = env[pad + i];
    gbuf[pad + i] = e > kEnvelopeFloor ? grad_waveform[i] / e : 0.0;
  }
  ComplexSpectrogram grad(like.frames(), like.bins(), cfg, like.original_length());
  detail::RealFft fft(win);
  std::vector<double> seg(win);
  const double inv_n = 1.0 / static_cast<double>(win);
  for (std::size_t t = 0; t < like.frames(); ++t) {
    for (std::size_t k = 0; k < win; ++k) seg[k] = gbuf[t * cfg.hop_length + k] * window[k];
    auto* row = &grad.at(t, 0);
    fft.forward(seg.data(), row);
    // irfft counts interior bins twice (Hermitian mirror) and the DC/Nyquist
    // bins once; their imaginary parts are discarded, so they get no gradient.
    for (std::size_t f = 0; f < like.bins(); ++f) {
      const bool edge = f == 0 || f == like.bins() - 1;
      row[f] *= (edge ? 1.0 : 2.0) * inv_n;
      if (edge) row[f] = {row[f].real(), 0.0};
    }
  }
  return grad;
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

double relative_l2_error(std::span<const double> estimate, std::span<const double> reference) {
  require(estimate.size() == reference.size(), "relative_l2_error: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    num += (estimate[i] - reference[i]) * (estimate[i] - reference[i]);
    den += reference[i] * reference[i];
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

}  // namespace pfpl
