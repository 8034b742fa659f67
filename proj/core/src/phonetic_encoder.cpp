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

#include "pfpl/phonetic_encoder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "pfpl/error.hpp"
#include "pfpl/log.hpp"
#include "pfpl/nn_ops.hpp"
#include "pfpl/random.hpp"
#include "pfpl/tensor_archive.hpp"

namespace pfpl {

namespace {

constexpr std::size_t kIdentityChannels = 160;
constexpr std::size_t kPublishedChannels = 512;

std::string conv_name(std::size_t i, const char* leaf) {
  return "feature_extractor.conv_layers." + std::to_string(i) + "." + leaf;
}

std::string context_name(std::size_t i, const char* leaf) {
  return "feature_aggregator.conv_layers." + std::to_string(i) + "." + leaf;
}

}  // namespace

// ---------------------------------------------------------------- spec

std::size_t EncoderSpec::total_stride() const {
  std::size_t s = 1;
  for (const auto& l : conv) s *= l.stride;
  return s;
}

std::size_t EncoderSpec::receptive_field() const {
  std::size_t rf = 1, jump = 1;
  for (const auto& l : conv) {
    rf += (l.kernel - 1) * jump;
    jump *= l.stride;
  }
  return rf;
}

std::size_t EncoderSpec::frames_for(std::size_t samples) const {
  std::size_t len = samples;
  for (const auto& l : conv) {
    if (len < l.kernel) return 0;
    len = (len - l.kernel) / l.stride + 1;
  }
  return len;
}

std::size_t EncoderSpec::output_channels() const {
  if (!context.empty()) return context.back().channels;
  return conv.empty() ? 0 : conv.back().channels;
}

void EncoderSpec::validate() const {
  require<ConfigError>(!conv.empty(), "encoder needs at least one conv layer");
  for (const auto& l : conv) {
    require<ConfigError>(l.channels > 0 && l.kernel > 0 && l.stride > 0, "encoder conv layer sizes must be positive");
  }
  for (const auto& l : context) {
    require<ConfigError>(l.channels > 0 && l.kernel > 0, "encoder context layer sizes must be positive");
  }
  require<ConfigError>(residual_scale > 0.0, "residual scale must be positive");
  require<ConfigError>(norm_eps > 0.0, "norm epsilon must be positive");
}

EncoderSpec EncoderSpec::stand_in(std::size_t width, std::size_t context_layers) {
  EncoderSpec s;
  s.conv = {{width, 10, 5}, {width, 8, 4}, {width, 4, 2}, {width, 4, 2}, {width, 4, 2}};
  for (std::size_t i = 0; i < context_layers; ++i) s.context.push_back({width, 3});
  return s;
}

EncoderSpec EncoderSpec::wav2vec_large() {
  EncoderSpec s;
  s.conv = {{512, 10, 5}, {512, 8, 4}, {512, 4, 2}, {512, 4, 2}, {512, 4, 2}, {512, 1, 1}, {512, 1, 1}};
  for (std::size_t k = 2; k <= 13; ++k) s.context.push_back({512, k});
  s.conv_skip = true;
  s.context_skip = true;
  s.log_compression = true;
  return s;
}

std::string EncoderSpec::serialize_conv() const {
  std::string out;
  for (const auto& l : conv) {
    if (!out.empty()) out += ',';
    out += std::to_string(l.channels) + 'x' + std::to_string(l.kernel) + 'x' + std::to_string(l.stride);
  }
  return out;
}

std::string EncoderSpec::serialize_context() const {
  std::string out;
  for (const auto& l : context) {
    if (!out.empty()) out += ',';
    out += std::to_string(l.channels) + 'x' + std::to_string(l.kernel);
  }
  return out;
}

// ---------------------------------------------------------------- construction

ParameterSet PhoneticEncoder::allocate_parameters(const EncoderSpec& spec, bool conv_bias, bool context_bias) {
  spec.validate();
  ParameterSet ps;
  std::size_t in = 1;
  for (std::size_t i = 0; i < spec.conv.size(); ++i) {
    const auto& l = spec.conv[i];
    ps.add(conv_name(i, "0.weight"), {l.channels, in, l.kernel});
    if (conv_bias) ps.add(conv_name(i, "0.bias"), {l.channels});
    ps.add(conv_name(i, "2.weight"), {l.channels}, 1.0f);
    ps.add(conv_name(i, "2.bias"), {l.channels});
    in = l.channels;
  }
  for (std::size_t i = 0; i < spec.context.size(); ++i) {
    const auto& l = spec.context[i];
    ps.add(context_name(i, "1.weight"), {l.channels, in, l.kernel});
    if (context_bias) ps.add(context_name(i, "1.bias"), {l.channels});
    ps.add(context_name(i, "3.weight"), {l.channels}, 1.0f);
    ps.add(context_name(i, "3.bias"), {l.channels});
    in = l.channels;
  }
  return ps;
}

PhoneticEncoder::PhoneticEncoder(EncoderSpec spec, ParameterSet params, std::string source)
    : spec_(std::move(spec)), params_(std::move(params)), source_(std::move(source)) {
  const auto expected = allocate_parameters(spec_, params_.find(conv_name(0, "0.bias")) != nullptr,
                                            params_.find(context_name(0, "1.bias")) != nullptr);
  for (const auto& p : expected) {
    const auto* got = params_.find(p.name);
    if (got == nullptr) throw LoadError("encoder is missing tensor '" + p.name + "'");
    if (got->shape != p.shape) {
      throw LoadError("encoder tensor '" + p.name + "' has shape " + format_shape(got->shape) + ", expected " +
                      format_shape(p.shape));
    }
  }
}

PhoneticEncoder PhoneticEncoder::identity_frame() {
  PhoneticEncoder e;
  e.kind_ = EncoderKind::identity_frame;
  e.spec_ = EncoderSpec::stand_in(kIdentityChannels, 0);
  e.source_ = "identity";
  return e;
}

std::size_t PhoneticEncoder::channels() const {
  if (kind_ == EncoderKind::identity_frame) return kIdentityChannels;
  if (tap_ == FeatureTap::conv) return spec_.conv.back().channels;
  return spec_.output_channels();
}

PhoneticEncoder random_encoder(std::uint64_t seed, const EncoderSpec& spec) {
  auto params = PhoneticEncoder::allocate_parameters(spec);
  Rng rng(seed);
  for (auto& p : params) {
    if (p.shape.size() != 3) continue;
    const double fan_in = static_cast<double>(p.shape[1] * p.shape[2]);
    const double std_dev = std::sqrt(2.0 / fan_in);
    for (auto& v : p.values) v = static_cast<float>(std_dev * rng.normal());
  }
  return PhoneticEncoder(spec, std::move(params), "random:" + std::to_string(seed));
}

// ---------------------------------------------------------------- forward / backward

struct EncoderCache {
  struct Layer {
    Tensor input;       // layer input (C, 1, L)
    Tensor conv_input;  // padded input actually convolved (context layers)
    nn::NormCache norm;
    Tensor activation;  // ReLU output
    bool skip = false;
  };
  std::vector<Layer> conv;
  std::vector<Layer> context;
  Tensor z_raw;  // conv stack output before log compression
  std::size_t samples = 0;
};

namespace {

nn::Conv2dGeometry geometry_1d(std::size_t k, std::size_t stride) {
  nn::Conv2dGeometry g;
  g.kernel_w = k;
  g.stride_w = stride;
  return g;
}

Tensor pad_left(const Tensor& x, std::size_t pad, ContextPadding mode) {
  const std::size_t c = x.dim(0), len = x.dim(2);
  Tensor out({c, 1, len + pad});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* src = x.data() + ch * len;
    double* dst = out.data() + ch * (len + pad);
    const double fill = mode == ContextPadding::replicate ? src[0] : 0.0;
    std::fill(dst, dst + pad, fill);
    std::copy(src, src + len, dst + pad);
  }
  return out;
}

Tensor pad_left_backward(const Tensor& g, std::size_t pad, ContextPadding mode) {
  const std::size_t c = g.dim(0), len = g.dim(2) - pad;
  Tensor out({c, 1, len});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* src = g.data() + ch * (len + pad);
    double* dst = out.data() + ch * len;
    std::copy(src + pad, src + pad + len, dst);
    if (mode == ContextPadding::replicate) {
      for (std::size_t i = 0; i < pad; ++i) dst[0] += src[i];
    }
  }
  return out;
}

// Strided residual alignment: residual[..., ::r // t][..., :t].
std::size_t residual_step(std::size_t in_len, std::size_t out_len) { return std::max<std::size_t>(1, in_len / out_len); }

std::vector<double> param_values(const ParameterSet& ps, const std::string& name) { return to_double(ps.at(name)); }

}  // namespace

EncoderPass PhoneticEncoder::forward(std::span<const double> samples) const {
  const std::size_t rf = receptive_field();
  if (samples.size() < rf) {
    throw InvalidInput("encoder input has " + std::to_string(samples.size()) +
                       " samples; the minimum is the receptive field of " + std::to_string(rf) + " samples");
  }
  if (!std::all_of(samples.begin(), samples.end(), [](double v) { return std::isfinite(v); }))
    throw InvalidInput("encoder input contains non-finite samples");
  auto cache = std::make_shared<EncoderCache>();
  cache->samples = samples.size();
  EncoderPass pass;
  FeatureSequence& out = pass.features;
  out.frame_stride = spec_.total_stride();
  out.source = source_;

  if (kind_ == EncoderKind::identity_frame) {
    out.frames = frames_for(samples.size());
    out.channels = kIdentityChannels;
    out.values.resize(out.frames * out.channels);
    for (std::size_t t = 0; t < out.frames; ++t) {
      std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(t * kIdentityChannels), kIdentityChannels,
                  out.values.begin() + static_cast<std::ptrdiff_t>(t * kIdentityChannels));
    }
    pass.cache = std::move(cache);
    return pass;
  }

  const bool has_bias = params_.find(conv_name(0, "0.bias")) != nullptr;
  const bool has_context_bias = params_.find(context_name(0, "1.bias")) != nullptr;
  Tensor x({1, 1, samples.size()}, std::vector<double>(samples.begin(), samples.end()));

  cache->conv.resize(spec_.conv.size());
  for (std::size_t i = 0; i < spec_.conv.size(); ++i) {
    const auto& l = spec_.conv[i];
    auto& layer = cache->conv[i];
    layer.input = std::move(x);
    const auto w = param_values(params_, conv_name(i, "0.weight"));
    const auto b = has_bias ? param_values(params_, conv_name(i, "0.bias")) : std::vector<double>{};
    Tensor y = nn::conv2d_forward(layer.input, w, l.channels, b, geometry_1d(l.kernel, l.stride));
    y = nn::group_norm_forward(y, param_values(params_, conv_name(i, "2.weight")),
                               param_values(params_, conv_name(i, "2.bias")), spec_.norm_eps, layer.norm);
    nn::leaky_relu_inplace(y, 0.0);
    layer.activation = y;
    layer.skip = spec_.conv_skip && layer.input.dim(0) == l.channels;
    if (layer.skip) {
      const std::size_t in_len = layer.input.dim(2), out_len = y.dim(2);
      const std::size_t step = residual_step(in_len, out_len);
      for (std::size_t c = 0; c < l.channels; ++c) {
        for (std::size_t t = 0; t < out_len; ++t) {
          double& v = y[c * out_len + t];
          v = (v + layer.input[c * in_len + t * step]) * spec_.residual_scale;
        }
      }
    }
    x = std::move(y);
  }
  cache->z_raw = x;
  if (spec_.log_compression) {
    for (double& v : x.values()) v = std::log(std::abs(v) + 1.0);
  }

  if (tap_ == FeatureTap::context) {
    cache->context.resize(spec_.context.size());
    for (std::size_t i = 0; i < spec_.context.size(); ++i) {
      const auto& l = spec_.context[i];
      auto& layer = cache->context[i];
      layer.input = std::move(x);
      layer.conv_input = pad_left(layer.input, l.kernel - 1, spec_.padding);
      const auto w = param_values(params_, context_name(i, "1.weight"));
      const auto b = has_context_bias ? param_values(params_, context_name(i, "1.bias")) : std::vector<double>{};
      Tensor y = nn::conv2d_forward(layer.conv_input, w, l.channels, b, geometry_1d(l.kernel, 1));
      y = nn::group_norm_forward(y, param_values(params_, context_name(i, "3.weight")),
                                 param_values(params_, context_name(i, "3.bias")), spec_.norm_eps, layer.norm);
      nn::leaky_relu_inplace(y, 0.0);
      layer.activation = y;
      layer.skip = spec_.context_skip && layer.input.dim(0) == l.channels;
      if (layer.skip) {
        for (std::size_t k = 0; k < y.size(); ++k) y[k] = (y[k] + layer.input[k]) * spec_.residual_scale;
      }
      x = std::move(y);
    }
  }

  out.channels = x.dim(0);
  out.frames = x.dim(2);
  out.values.resize(out.frames * out.channels);
  for (std::size_t c = 0; c < out.channels; ++c) {
    for (std::size_t t = 0; t < out.frames; ++t) out.values[t * out.channels + c] = x[c * out.frames + t];
  }
  pass.cache = std::move(cache);
  return pass;
}

std::vector<double> PhoneticEncoder::backward(const EncoderPass& pass, std::span<const double> grad_features) const {
  const auto& f = pass.features;
  require<ShapeError>(grad_features.size() == f.values.size(), "feature gradient size does not match features");
  const auto& cache = *pass.cache;
  std::vector<double> dx(cache.samples, 0.0);

  if (kind_ == EncoderKind::identity_frame) {
    for (std::size_t i = 0; i < grad_features.size(); ++i) dx[i] += grad_features[i];
    return dx;
  }

  Tensor g({f.channels, 1, f.frames});
  for (std::size_t c = 0; c < f.channels; ++c) {
    for (std::size_t t = 0; t < f.frames; ++t) g[c * f.frames + t] = grad_features[t * f.channels + c];
  }

  for (std::size_t i = cache.context.size(); i-- > 0;) {
    const auto& l = spec_.context[i];
    const auto& layer = cache.context[i];
    Tensor skip_grad;
    if (layer.skip) {
      for (double& v : g.values()) v *= spec_.residual_scale;
      skip_grad = g;
    }
    nn::leaky_relu_backward_inplace(g, layer.activation, 0.0);
    const auto gamma = param_values(params_, context_name(i, "3.weight"));
    g = nn::group_norm_backward(g, gamma, layer.norm, {}, {});
    const auto w = param_values(params_, context_name(i, "1.weight"));
    g = nn::conv2d_backward(layer.conv_input, g, w, geometry_1d(l.kernel, 1), {}, {});
    g = pad_left_backward(g, l.kernel - 1, spec_.padding);
    if (layer.skip) g += skip_grad;
  }

  if (spec_.log_compression) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double z = cache.z_raw[k];
      const double sign = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
      g[k] *= sign / (std::abs(z) + 1.0);
    }
  }

  for (std::size_t i = cache.conv.size(); i-- > 0;) {
    const auto& l = spec_.conv[i];
    const auto& layer = cache.conv[i];
    Tensor skip_grad;
    if (layer.skip) {
      for (double& v : g.values()) v *= spec_.residual_scale;
      const std::size_t in_len = layer.input.dim(2), out_len = g.dim(2);
      const std::size_t step = residual_step(in_len, out_len);
      skip_grad = Tensor(layer.input.shape());
      for (std::size_t c = 0; c < l.channels; ++c) {
        for (std::size_t t = 0; t < out_len; ++t) skip_grad[c * in_len + t * step] += g[c * out_len + t];
      }
    }
    nn::leaky_relu_backward_inplace(g, layer.activation, 0.0);
    const auto gamma = param_values(params_, conv_name(i, "2.weight"));
    g = nn::group_norm_backward(g, gamma, layer.norm, {}, {});
    const auto w = param_values(params_, conv_name(i, "0.weight"));
    g = nn::conv2d_backward(layer.input, g, w, geometry_1d(l.kernel, l.stride), {}, {});
    if (layer.skip) g += skip_grad;
  }
  std::copy(g.data(), g.data() + g.size(), dx.begin());
  return dx;
}

FeatureSequence PhoneticEncoder::encode(std::span<const double> samples) const { return forward(samples).features; }

FeatureSequence PhoneticEncoder::encode(const Waveform& w) const { return encode(w.view()); }

// ---------------------------------------------------------------- checkpoints

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t to_size(std::string_view s, const std::string& field) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw LoadError("encoder checkpoint field '" + field + "' has malformed value '" + std::string(s) + "'");
  }
  return v;
}

double to_double_field(std::string_view s, const std::string& field) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw LoadError("encoder checkpoint field '" + field + "' has malformed value '" + std::string(s) + "'");
  }
  return v;
}

bool to_bool(std::string_view s, const std::string& field) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw LoadError("encoder checkpoint field '" + field + "' has malformed value '" + std::string(s) + "'");
}

std::string meta_or_throw(const TensorArchive& a, const std::string& key) {
  auto v = a.meta_value(key);
  if (!v) throw LoadError("encoder checkpoint is missing field '" + key + "'");
  return *v;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

void save_encoder(const std::filesystem::path& path, const PhoneticEncoder& encoder) {
  require<ConfigError>(encoder.kind() == EncoderKind::network, "only network encoders can be saved");
  const auto& s = encoder.spec();
  TensorArchive a;
  a.set_meta("kind", "wav2vec");
  a.set_meta("conv_layers", s.serialize_conv());
  a.set_meta("context_layers", s.serialize_context());
  a.set_meta("conv_skip", s.conv_skip ? "1" : "0");
  a.set_meta("context_skip", s.context_skip ? "1" : "0");
  a.set_meta("residual_scale", format_double(s.residual_scale));
  a.set_meta("log_compression", s.log_compression ? "1" : "0");
  a.set_meta("padding", s.padding == ContextPadding::replicate ? "replicate" : "zero");
  a.set_meta("norm_eps", format_double(s.norm_eps));
  a.set_meta("source", encoder.source());
  for (const auto& p : encoder.parameters()) a.tensors.push_back({p.name, p.shape, p.values});
  write_archive_atomic(path, a);
}

PhoneticEncoder load_encoder_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw LoadError("encoder checkpoint not found: " + path.string());
  TensorArchive a;
  try {
    a = read_archive(path);
  } catch (const Error& e) {
    throw LoadError("encoder checkpoint " + path.string() + " is unreadable: " + e.what());
  }
  const auto kind = meta_or_throw(a, "kind");
  if (kind != "wav2vec") throw LoadError("encoder checkpoint field 'kind' is '" + kind + "', expected 'wav2vec'");

  EncoderSpec spec;
  const std::string conv_table = meta_or_throw(a, "conv_layers");
  const std::string context_table = a.meta_value("context_layers").value_or("");
  for (auto item : split(conv_table, ',')) {
    const auto parts = split(item, 'x');
    if (parts.size() != 3) throw LoadError("encoder checkpoint field 'conv_layers' is malformed");
    spec.conv.push_back({to_size(parts[0], "conv_layers"), to_size(parts[1], "conv_layers"),
                         to_size(parts[2], "conv_layers")});
  }
  for (auto item : split(context_table, ',')) {
    const auto parts = split(item, 'x');
    if (parts.size() != 2) throw LoadError("encoder checkpoint field 'context_layers' is malformed");
    spec.context.push_back({to_size(parts[0], "context_layers"), to_size(parts[1], "context_layers")});
  }
  if (auto v = a.meta_value("conv_skip")) spec.conv_skip = to_bool(*v, "conv_skip");
  if (auto v = a.meta_value("context_skip")) spec.context_skip = to_bool(*v, "context_skip");
  if (auto v = a.meta_value("residual_scale")) spec.residual_scale = to_double_field(*v, "residual_scale");
  if (auto v = a.meta_value("log_compression")) spec.log_compression = to_bool(*v, "log_compression");
  if (auto v = a.meta_value("norm_eps")) spec.norm_eps = to_double_field(*v, "norm_eps");
  if (auto v = a.meta_value("padding")) {
    if (*v == "replicate") spec.padding = ContextPadding::replicate;
    else if (*v == "zero") spec.padding = ContextPadding::zero;
    else throw LoadError("encoder checkpoint field 'padding' has unknown value '" + *v + "'");
  }
  if (spec.conv.empty()) throw LoadError("encoder checkpoint field 'conv_layers' is empty");
  if (spec.output_channels() != kPublishedChannels) {
    throw LoadError("encoder checkpoint field 'channels' reports " + std::to_string(spec.output_channels()) +
                    ", expected " + std::to_string(kPublishedChannels));
  }
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw LoadError(std::string("encoder checkpoint layer table is invalid: ") + e.what());
  }

  auto params = PhoneticEncoder::allocate_parameters(spec, a.find(conv_name(0, "0.bias")) != nullptr,
                                                    a.find(context_name(0, "1.bias")) != nullptr);
  for (auto& p : params) {
    const auto* t = a.find(p.name);
    if (t == nullptr) throw LoadError("encoder checkpoint is missing tensor '" + p.name + "'");
    if (t->shape != p.shape) {
      throw LoadError("encoder checkpoint tensor '" + p.name + "' has shape " + format_shape(t->shape) +
                      ", expected " + format_shape(p.shape));
    }
    p.values = t->values;
  }
  for (const auto& t : a.tensors) {
    if (params.find(t.name) == nullptr) log_warning("ignoring unknown encoder tensor '" + t.name + "'");
  }
  return PhoneticEncoder(spec, std::move(params), "ckpt:" + path.string());
}

PhoneticEncoder load_encoder(std::string_view source) {
  if (source == "identity") return PhoneticEncoder::identity_frame();
  if (source.starts_with("random:")) {
    const auto parts = split(source.substr(7), ':');
    if (parts.empty() || parts.size() > 2) throw ConfigError("malformed encoder source '" + std::string(source) + "'");
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(parts[0].data(), parts[0].data() + parts[0].size(), seed);
    if (ec != std::errc() || ptr != parts[0].data() + parts[0].size()) {
      throw ConfigError("malformed encoder seed in '" + std::string(source) + "'");
    }
    std::size_t width = kPublishedChannels;
    if (parts.size() == 2) {
      auto [p2, ec2] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), width);
      if (ec2 != std::errc() || p2 != parts[1].data() + parts[1].size() || width == 0) {
        throw ConfigError("malformed encoder width in '" + std::string(source) + "'");
      }
    }
    auto e = random_encoder(seed, EncoderSpec::stand_in(width));
    return e;
  }
  if (source.starts_with("ckpt:")) return load_encoder_checkpoint(std::string(source.substr(5)));
  return load_encoder_checkpoint(std::string(source));
}

}  // namespace pfpl
