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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pfpl/dsp.hpp"
#include "pfpl/parameters.hpp"

namespace pfpl {

/// frames x channels feature matrix, row-major by frame.
struct FeatureSequence {
  std::size_t frames = 0;
  std::size_t channels = 0;
  std::size_t frame_stride = 160;
  std::string source;
  std::vector<double> values;

  double& at(std::size_t t, std::size_t c) { return values[t * channels + c]; }
  double at(std::size_t t, std::size_t c) const { return values[t * channels + c]; }
  bool same_shape(const FeatureSequence& o) const { return frames == o.frames && channels == o.channels; }
};

struct EncoderConvLayer {
  std::size_t channels = 512, kernel = 1, stride = 1;
  bool operator==(const EncoderConvLayer&) const = default;
};

struct EncoderContextLayer {
  std::size_t channels = 512, kernel = 1;
  bool operator==(const EncoderContextLayer&) const = default;
};

/// How context layers fill their k-1 left context samples.
enum class ContextPadding { replicate, zero };

/// Strided conv feature extractor (z) followed by a causal,
/// length-preserving context network (c). Every layer is
/// conv -> group norm (one group) -> ReLU.
struct EncoderSpec {
  std::vector<EncoderConvLayer> conv;
  std::vector<EncoderContextLayer> context;
  bool conv_skip = false;      // residual connections in the conv stack
  bool context_skip = true;    // residual connections in the context network
  double residual_scale = 0.7071067811865476;
  bool log_compression = false;  // z <- log(|z| + 1) before the context network
  ContextPadding padding = ContextPadding::replicate;
  double norm_eps = 1e-5;

  std::size_t total_stride() const;
  std::size_t receptive_field() const;
  /// Frame count via L <- floor((L - k) / s) + 1 per conv layer; 0 when too short.
  std::size_t frames_for(std::size_t samples) const;
  std::size_t output_channels() const;
  void validate() const;

  /// Five-layer conv stack (10,8,4,4,4)/(5,4,2,2,2) plus a light context network.
  static EncoderSpec stand_in(std::size_t width = 512, std::size_t context_layers = 3);
  /// Published large layout (seven conv layers, twelve context layers, kernels 2..13).
  static EncoderSpec wav2vec_large();

  std::string serialize_conv() const;
  std::string serialize_context() const;
  bool operator==(const EncoderSpec&) const = default;
};

enum class EncoderKind { network, identity_frame };

/// Which representation encode() returns.
enum class FeatureTap { context, conv };

struct EncoderCache;

struct EncoderPass {
  FeatureSequence features;
  std::shared_ptr<const EncoderCache> cache;
};

/// Frozen waveform -> feature encoder. Parameters are never updated; the
/// backward pass only produces gradients with respect to the waveform.
class PhoneticEncoder {
 public:
  PhoneticEncoder(EncoderSpec spec, ParameterSet params, std::string source);
  static PhoneticEncoder identity_frame();

  EncoderKind kind() const { return kind_; }
  const EncoderSpec& spec() const { return spec_; }
  const ParameterSet& parameters() const { return params_; }
  const std::string& source() const { return source_; }
  bool frozen() const { return true; }
  std::size_t channels() const;
  std::size_t receptive_field() const { return spec_.receptive_field(); }
  std::size_t frames_for(std::size_t samples) const { return spec_.frames_for(samples); }

  FeatureTap tap() const { return tap_; }
  void set_tap(FeatureTap t) { tap_ = t; }

  /// Throws InvalidInput when shorter than the receptive field.
  FeatureSequence encode(const Waveform& w) const;
  FeatureSequence encode(std::span<const double> samples) const;

  EncoderPass forward(std::span<const double> samples) const;
  /// dL/d(samples) given dL/d(features).
  std::vector<double> backward(const EncoderPass& pass, std::span<const double> grad_features) const;

  /// Expected tensor names and shapes for `spec` (fairseq-style names).
  static ParameterSet allocate_parameters(const EncoderSpec& spec, bool conv_bias = false, bool context_bias = false);

 private:
  PhoneticEncoder() = default;

  EncoderKind kind_ = EncoderKind::network;
  EncoderSpec spec_;
  ParameterSet params_;
  std::string source_;
  FeatureTap tap_ = FeatureTap::context;
};

/// Deterministic random stand-in.
PhoneticEncoder random_encoder(std::uint64_t seed, const EncoderSpec& spec = EncoderSpec::stand_in());

/// Reads an encoder archive (see save_encoder). Any failure -> LoadError
/// naming the offending field.
PhoneticEncoder load_encoder_checkpoint(const std::filesystem::path& path);
void save_encoder(const std::filesystem::path& path, const PhoneticEncoder& encoder);

/// Resolves "random:<seed>[:<width>]", "ckpt:<path>", "identity", or a bare path.
PhoneticEncoder load_encoder(std::string_view source);

}  // namespace pfpl
