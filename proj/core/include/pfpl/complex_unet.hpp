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
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pfpl/dsp.hpp"
#include "pfpl/parameters.hpp"

namespace pfpl {

/// One complex convolution layer. Kernel and stride are given as
/// (frequency, time); `channels` counts complex channels.
struct UnetLayer {
  std::size_t kernel_f = 1, kernel_t = 1;
  std::size_t stride_f = 1, stride_t = 1;
  std::size_t channels = 1;

  bool operator==(const UnetLayer&) const = default;
};

/// Encoder/decoder layer table. Decoder layer j runs the transposed geometry
/// of encoder layer n-1-j, and every decoder layer after the first also
/// receives the output of that encoder layer's sibling as a skip input. The
/// last decoder layer emits the single complex mask channel.
struct ModelConfig {
  std::string name = "custom";
  std::size_t bins = 513;
  std::vector<UnetLayer> encoder;
  std::vector<UnetLayer> decoder;
  double leaky_slope = 0.01;
  double norm_eps = 1e-5;

  std::size_t depth() const { return encoder.size() + decoder.size(); }

  /// Throws ConfigError for non-mirrored or otherwise malformed tables.
  void validate() const;

  /// Desk-scale 10-layer variant (< 1M parameters).
  static ModelConfig small10();
  /// 20-layer reference layout in the style of Large-DCUnet-20.
  static ModelConfig large20();
  static ModelConfig preset(std::string_view name);

  /// Single-line text form, e.g. "small10" or a full layer table.
  std::string serialize() const;
  static ModelConfig parse(std::string_view text);

  bool operator==(const ModelConfig&) const = default;
};

/// Closed-form parameter count: per layer (kf*kt*Cin*Cout + Cout) * 2 for
/// real and imaginary parts, plus 4*Cout norm affine terms on normalized layers.
std::size_t expected_parameter_count(const ModelConfig& cfg);

/// Complex mask with frames x bins layout matching ComplexSpectrogram.
class ComplexRatioMask {
 public:
  ComplexRatioMask() = default;
  ComplexRatioMask(std::size_t frames, std::size_t bins, std::complex<double> fill = {});

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::complex<double>& at(std::size_t t, std::size_t f) { return values_[t * bins_ + f]; }
  const std::complex<double>& at(std::size_t t, std::size_t f) const { return values_[t * bins_ + f]; }
  std::vector<std::complex<double>>& values() { return values_; }
  const std::vector<std::complex<double>>& values() const { return values_; }
  double max_magnitude() const;

 private:
  std::size_t frames_ = 0, bins_ = 0;
  std::vector<std::complex<double>> values_;
};

/// Test hook replacing the learned mask.
enum class MaskInjection { none, identity, zero };

/// Cached intermediates of one forward pass; consumed by backward().
struct MaskForwardCache;

struct MaskForwardPass {
  ComplexRatioMask mask;
  std::shared_ptr<const MaskForwardCache> cache;
};

class MaskEstimator {
 public:
  /// Throws IntegrityError if `params` does not match the layout implied by `cfg`.
  MaskEstimator(ModelConfig cfg, ParameterSet params);

  const ModelConfig& config() const { return config_; }
  const ParameterSet& parameters() const { return params_; }
  ParameterSet& parameters() { return params_; }
  std::size_t parameter_count() const { return params_.total_size(); }

  void inject_mask(MaskInjection injection) { injection_ = injection; }
  MaskInjection injection() const { return injection_; }

  MaskForwardPass forward(const ComplexSpectrogram& x) const;

  /// Accumulates dL/dparams into `grads` given dL/dM, where each mask cell
  /// holds (dL/dRe M, dL/dIm M).
  void backward(const MaskForwardPass& pass, const ComplexRatioMask& grad_mask, Gradients& grads) const;

  /// Empty parameter set with every tensor allocated per `cfg`.
  static ParameterSet allocate_parameters(const ModelConfig& cfg);

 private:
  ModelConfig config_;
  ParameterSet params_;
  MaskInjection injection_ = MaskInjection::none;
};

/// Deterministic initialization from `seed`. Logs the parameter count.
MaskEstimator build_model(const ModelConfig& cfg, std::uint64_t seed);

/// Throws ShapeError when the spectrogram's bin count differs from the config.
ComplexRatioMask estimate_mask(const MaskEstimator& m, const ComplexSpectrogram& x);

/// Pointwise complex product M * X.
ComplexSpectrogram apply_mask(const ComplexRatioMask& m, const ComplexSpectrogram& x);

/// stft -> estimate_mask -> apply_mask -> istft. Output length equals input length.
Waveform enhance(const MaskEstimator& m, const Waveform& x, const StftConfig& cfg);

/// Bounded-tanh mask map M = tanh(|o|) o / |o| (0 where o = 0) and its
/// vector-Jacobian product. Exposed for testing.
std::complex<double> bound_mask(std::complex<double> o);
std::complex<double> bound_mask_backward(std::complex<double> o, std::complex<double> grad);

}  // namespace pfpl
