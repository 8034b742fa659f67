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

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pfpl {

inline constexpr int kDefaultSampleRate = 16000;

/// Mono time-domain signal. Construction rejects non-finite samples and
/// non-positive sample rates.
class Waveform {
 public:
  Waveform() = default;
  Waveform(std::vector<double> samples, int sample_rate);

  static Waveform zeros(std::size_t n, int sample_rate = kDefaultSampleRate);

  const std::vector<double>& samples() const { return samples_; }
  std::span<const double> view() const { return samples_; }
  int sample_rate() const { return sample_rate_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double operator[](std::size_t i) const { return samples_[i]; }
  double duration_seconds() const;

 private:
  std::vector<double> samples_;
  int sample_rate_ = kDefaultSampleRate;
};

enum class WindowType { hann, rectangular };

std::string to_string(WindowType w);
WindowType window_from_string(const std::string& name);

struct StftConfig {
  std::size_t window_length = 1024;
  std::size_t hop_length = 256;
  WindowType window = WindowType::hann;
  bool centered = true;

  std::size_t bins() const { return window_length / 2 + 1; }
  /// Throws ConfigError unless hop <= window and the window is COLA at hop.
  void validate() const;
  /// Frame count for an n-sample signal.
  std::size_t frames_for(std::size_t n) const;

  bool operator==(const StftConfig&) const = default;
};

/// Periodic analysis window of the configured type and length.
std::vector<double> make_window(WindowType type, std::size_t length);

/// frames x bins complex matrix, row-major by frame.
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(std::size_t frames, std::size_t bins, StftConfig config,
                     std::size_t original_length);

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  const StftConfig& config() const { return config_; }
  std::size_t original_length() const { return original_length_; }

  std::complex<double>& at(std::size_t t, std::size_t f) { return values_[t * bins_ + f]; }
  const std::complex<double>& at(std::size_t t, std::size_t f) const {
    return values_[t * bins_ + f];
  }
  std::vector<std::complex<double>>& values() { return values_; }
  const std::vector<std::complex<double>>& values() const { return values_; }

 private:
  std::size_t frames_ = 0, bins_ = 0;
  StftConfig config_;
  std::size_t original_length_ = 0;
  std::vector<std::complex<double>> values_;
};

ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg);

/// Weighted overlap-add inverse, normalized by the summed squared window.
Waveform istft(const ComplexSpectrogram& s, int sample_rate = kDefaultSampleRate);

/// Vector-Jacobian product of istft: given dL/d(waveform), returns dL/dS as
/// a spectrogram whose real/imaginary parts are the gradients with respect
/// to the real/imaginary parts of each input cell.
ComplexSpectrogram istft_backward(std::span<const double> grad_waveform,
                                  const ComplexSpectrogram& like);

/// Rational-ratio polyphase resampling with a Kaiser-windowed sinc filter.
/// Output length is ceil(n * target / source).
Waveform resample(const Waveform& w, int target_rate);
std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down);
/// Centered polyphase filtering with a caller-supplied odd-length filter
/// (already scaled to the desired DC gain).
std::vector<double> resample_poly_filter(std::span<const double> x, std::size_t up, std::size_t down,
                                         std::span<const double> h);

double rms(std::span<const double> x);
double relative_l2_error(std::span<const double> estimate, std::span<const double> reference);

}  // namespace pfpl
