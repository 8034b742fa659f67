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

#include "pfpl/complex_unet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "pfpl/error.hpp"
#include "pfpl/log.hpp"
#include "pfpl/nn_ops.hpp"
#include "pfpl/random.hpp"

namespace pfpl {

// ---------------------------------------------------------------- config

void ModelConfig::validate() const {
  require<ConfigError>(!encoder.empty(), "model needs at least one encoder layer");
  require<ConfigError>(encoder.size() == decoder.size(),
                       "encoder has " + std::to_string(encoder.size()) + " layers but decoder has " +
                           std::to_string(decoder.size()) + "; encoder and decoder must mirror");
  require<ConfigError>(bins >= 2, "model bin count must be >= 2");
  const std::size_t n = encoder.size();
  for (std::size_t j = 0; j < n; ++j) {
    const auto& d = decoder[j];
    const auto& e = encoder[n - 1 - j];
    if (d.kernel_f != e.kernel_f || d.kernel_t != e.kernel_t || d.stride_f != e.stride_f ||
        d.stride_t != e.stride_t) {
      throw ConfigError("decoder layer " + std::to_string(j) + " does not mirror encoder layer " +
                        std::to_string(n - 1 - j) + " (kernel/stride differ)");
    }
  }
  for (const auto& l : encoder) {
    require<ConfigError>(l.channels > 0 && l.kernel_f > 0 && l.kernel_t > 0 && l.stride_f > 0 &&
                             l.stride_t > 0,
                         "encoder layer sizes must be positive");
  }
  for (const auto& l : decoder) require<ConfigError>(l.channels > 0, "decoder channels must be positive");
  require<ConfigError>(decoder.back().channels == 1,
                       "the last decoder layer must emit exactly one complex (mask) channel");
  require<ConfigError>(leaky_slope > 0.0 && leaky_slope < 1.0, "leaky slope must be in (0, 1)");
  require<ConfigError>(norm_eps > 0.0, "norm epsilon must be positive");
}

namespace {

ModelConfig mirrored(std::string name, const std::vector<UnetLayer>& enc,
                     const std::vector<std::size_t>& dec_channels) {
  ModelConfig cfg;
  cfg.name = std::move(name);
  cfg.encoder = enc;
  for (std::size_t j = 0; j < enc.size(); ++j) {
    UnetLayer d = enc[enc.size() - 1 - j];
    d.channels = dec_channels[j];
    cfg.decoder.push_back(d);
  }
  return cfg;
}

}  // namespace

ModelConfig ModelConfig::small10() {
  return mirrored("small10",
                  {{7, 5, 2, 2, 16}, {7, 5, 2, 2, 32}, {5, 3, 2, 2, 32}, {5, 3, 2, 2, 32}, {5, 3, 2, 1, 32}},
                  {32, 32, 32, 16, 1});
}

ModelConfig ModelConfig::large20() {
  return mirrored("large20",
                  {{7, 1, 1, 1, 32},
                   {1, 7, 1, 1, 32},
                   {7, 5, 2, 2, 64},
                   {7, 5, 2, 1, 64},
                   {5, 3, 2, 2, 64},
                   {5, 3, 2, 1, 64},
                   {5, 3, 2, 2, 64},
                   {5, 3, 2, 1, 64},
                   {5, 3, 2, 2, 64},
                   {5, 3, 2, 1, 64}},
                  {64, 64, 64, 64, 64, 64, 64, 32, 32, 1});
}

ModelConfig ModelConfig::preset(std::string_view name) {
  if (name == "small10") return small10();
  if (name == "large20") return large20();
  throw ConfigError("unknown model preset: " + std::string(name));
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return v;
}

std::size_t parse_size(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_layers(const std::vector<UnetLayer>& layers) {
  std::string out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (i) out += ',';
    out += std::to_string(l.kernel_f) + 'x' + std::to_string(l.kernel_t) + '/' +
           std::to_string(l.stride_f) + 'x' + std::to_string(l.stride_t) + '/' +
           std::to_string(l.channels);
  }
  return out;
}

std::vector<UnetLayer> parse_layers(std::string_view text) {
  std::vector<UnetLayer> layers;
  for (auto item : split(text, ',')) {
    const auto parts = split(item, '/');
    if (parts.size() != 3) throw ConfigError("malformed layer spec '" + std::string(item) + "'");
    const auto k = split(parts[0], 'x');
    const auto s = split(parts[1], 'x');
    if (k.size() != 2 || s.size() != 2) throw ConfigError("malformed layer spec '" + std::string(item) + "'");
    layers.push_back({parse_size(k[0], "kernel"), parse_size(k[1], "kernel"), parse_size(s[0], "stride"),
                      parse_size(s[1], "stride"), parse_size(parts[2], "channels")});
  }
  return layers;
}

}  // namespace

std::string ModelConfig::serialize() const {
  return "name=" + name + ";bins=" + std::to_string(bins) + ";enc=" + format_layers(encoder) +
         ";dec=" + format_layers(decoder) + ";slope=" + format_double(leaky_slope) +
         ";eps=" + format_double(norm_eps);
}

ModelConfig ModelConfig::parse(std::string_view text) {
  if (text.find('=') == std::string_view::npos) return preset(text);
  ModelConfig cfg;
  for (auto field : split(text, ';')) {
    if (field.empty()) continue;
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw ConfigError("malformed model config field '" + std::string(field) + "'");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    if (key == "name") cfg.name = std::string(value);
    else if (key == "bins") cfg.bins = parse_size(value, "bins");
    else if (key == "enc") cfg.encoder = parse_layers(value);
    else if (key == "dec") cfg.decoder = parse_layers(value);
    else if (key == "slope") cfg.leaky_slope = parse_double(value, "slope");
    else if (key == "eps") cfg.norm_eps = parse_double(value, "eps");
    else throw ConfigError("unknown model config key '" + std::string(key) + "'");
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------- layout

namespace {

struct LayerPlan {
  std::string prefix;
  bool transposed = false;
  bool normalized = true;
  std::size_t in_channels = 0;   // complex
  std::size_t out_channels = 0;  // complex
  std::size_t kernel_f = 1, kernel_t = 1;
  nn::Conv2dGeometry geometry;
};

std::vector<LayerPlan> plan_layers(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.encoder.size();
  std::vector<LayerPlan> plan;
  std::size_t in = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = cfg.encoder[i];
    LayerPlan p;
    p.prefix = "enc" + std::to_string(i);
    p.in_channels = in;
    p.out_channels = l.channels;
    p.kernel_f = l.kernel_f;
    p.kernel_t = l.kernel_t;
    p.geometry = nn::Conv2dGeometry::centered(l.kernel_f, l.kernel_t, l.stride_f, l.stride_t);
    plan.push_back(p);
    in = l.channels;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const auto& l = cfg.decoder[j];
    const auto& mirror = plan[n - 1 - j];
    LayerPlan p;
    p.prefix = "dec" + std::to_string(j);
    p.transposed = true;
    p.normalized = j + 1 < n;
    p.in_channels = j == 0 ? cfg.encoder.back().channels
                           : cfg.decoder[j - 1].channels + cfg.encoder[n - 1 - j].channels;
    p.out_channels = l.channels;
    p.kernel_f = l.kernel_f;
    p.kernel_t = l.kernel_t;
    p.geometry = mirror.geometry;
    plan.push_back(p);
  }
  return plan;
}

}  // namespace

std::size_t expected_parameter_count(const ModelConfig& cfg) {
  std::size_t total = 0;
  for (const auto& p : plan_layers(cfg)) {
    total += (p.kernel_f * p.kernel_t * p.in_channels * p.out_channels + p.out_channels) * 2;
    if (p.normalized) total += 4 * p.out_channels;
  }
  return total;
}

ParameterSet MaskEstimator::allocate_parameters(const ModelConfig& cfg) {
  ParameterSet ps;
  for (const auto& p : plan_layers(cfg)) {
    const std::vector<std::size_t> wshape =
        p.transposed ? std::vector<std::size_t>{p.in_channels, p.out_channels, p.kernel_f, p.kernel_t}
                     : std::vector<std::size_t>{p.out_channels, p.in_channels, p.kernel_f, p.kernel_t};
    ps.add(p.prefix + ".w_re", wshape);
    ps.add(p.prefix + ".w_im", wshape);
    ps.add(p.prefix + ".b_re", {p.out_channels});
    ps.add(p.prefix + ".b_im", {p.out_channels});
    if (p.normalized) {
      ps.add(p.prefix + ".norm_re.gamma", {p.out_channels}, 1.0f);
      ps.add(p.prefix + ".norm_re.beta", {p.out_channels});
      ps.add(p.prefix + ".norm_im.gamma", {p.out_channels}, 1.0f);
      ps.add(p.prefix + ".norm_im.beta", {p.out_channels});
    }
  }
  return ps;
}

MaskEstimator::MaskEstimator(ModelConfig cfg, ParameterSet params)
    : config_(std::move(cfg)), params_(std::move(params)) {
  const auto expected = allocate_parameters(config_);
  if (expected.count() != params_.count()) {
    throw IntegrityError("model has " + std::to_string(params_.count()) + " parameter tensors, config implies " +
                         std::to_string(expected.count()));
  }
  for (std::size_t i = 0; i < expected.count(); ++i) {
    if (expected[i].name != params_[i].name || expected[i].shape != params_[i].shape) {
      throw IntegrityError("parameter '" + params_[i].name + "' " + format_shape(params_[i].shape) +
                           " does not match expected '" + expected[i].name + "' " +
                           format_shape(expected[i].shape));
    }
    if (params_[i].values.size() != expected[i].values.size()) {
      throw IntegrityError("parameter '" + params_[i].name + "' holds " + std::to_string(params_[i].values.size()) +
                           " values, shape implies " + std::to_string(expected[i].values.size()));
    }
  }
}

MaskEstimator build_model(const ModelConfig& cfg, std::uint64_t seed) {
  auto params = MaskEstimator::allocate_parameters(cfg);
  Rng rng(seed);
  for (const auto& p : plan_layers(cfg)) {
    const double fan_in = static_cast<double>(p.in_channels * p.kernel_f * p.kernel_t);
    const double std_dev = std::sqrt(1.0 / fan_in);
    for (const char* part : {".w_re", ".w_im"}) {
      for (auto& v : params.at(p.prefix + part).values) v = static_cast<float>(std_dev * rng.normal());
    }
  }
  MaskEstimator m(cfg, std::move(params));
  log_info("built model '" + cfg.name + "' with " + std::to_string(m.parameter_count()) + " parameters");
  return m;
}

// ---------------------------------------------------------------- masks

ComplexRatioMask::ComplexRatioMask(std::size_t frames, std::size_t bins, std::complex<double> fill)
    : frames_(frames), bins_(bins), values_(frames * bins, fill) {}

double ComplexRatioMask::max_magnitude() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

namespace {
constexpr double kMaxMaskMagnitude = 1.0 - 8.0 * std::numeric_limits<double>::epsilon();
constexpr double kSeriesThreshold = 1e-4;
}  // namespace

std::complex<double> bound_mask(std::complex<double> o) {
  const double r = std::abs(o);
  if (r == 0.0) return {0.0, 0.0};
  const double t = std::min(std::tanh(r), kMaxMaskMagnitude);
  return o * (t / r);
}

std::complex<double> bound_mask_backward(std::complex<double> o, std::complex<double> grad) {
  const double r = std::abs(o);
  double s, c;  // grad_o = s * g + c * <o, g> * o
  if (r < kSeriesThreshold) {
    s = 1.0 - r * r / 3.0;
    c = -2.0 / 3.0 + 8.0 * r * r / 15.0;
  } else {
    const double th = std::tanh(r);
    const double t = std::min(th, kMaxMaskMagnitude);
    const double dt = th >= kMaxMaskMagnitude ? 0.0 : 1.0 - th * th;
    s = t / r;
    c = (dt * r - t) / (r * r * r);
  }
  const double dot = o.real() * grad.real() + o.imag() * grad.imag();
  return s * grad + c * dot * o;
}

ComplexSpectrogram apply_mask(const ComplexRatioMask& m, const ComplexSpectrogram& x) {
  require<ShapeError>(m.frames() == x.frames() && m.bins() == x.bins(),
                      "mask shape does not match spectrogram shape");
  ComplexSpectrogram y(x.frames(), x.bins(), x.config(), x.original_length());
  for (std::size_t i = 0; i < x.values().size(); ++i) y.values()[i] = m.values()[i] * x.values()[i];
  return y;
}

// ---------------------------------------------------------------- forward / backward

struct MaskForwardCache {
  struct Layer {
    Tensor input;           // conv input (2*Cin, H, W)
    std::vector<double> weight;  // assembled real block weight
    nn::NormCache norm;
    Tensor output;          // post-activation output (or raw conv output for the last layer)
    std::size_t out_h = 0, out_w = 0;
  };
  std::vector<Layer> layers;
  Tensor logits;            // (2, F, T) final conv output
  bool injected = false;
};

namespace {

// Complex tensors are stored as (2C, H, W): real channels then imaginary.
Tensor complex_concat(const Tensor& a, const Tensor& b) {
  const std::size_t ca = a.dim(0) / 2, cb = b.dim(0) / 2;
  const std::size_t plane = a.dim(1) * a.dim(2);
  require<ShapeError>(a.dim(1) == b.dim(1) && a.dim(2) == b.dim(2),
                      "skip connection shape mismatch: " + a.shape_string() + " vs " + b.shape_string());
  Tensor out({2 * (ca + cb), a.dim(1), a.dim(2)});
  double* dst = out.data();
  dst = std::copy(a.data(), a.data() + ca * plane, dst);
  dst = std::copy(b.data(), b.data() + cb * plane, dst);
  dst = std::copy(a.data() + ca * plane, a.data() + 2 * ca * plane, dst);
  std::copy(b.data() + cb * plane, b.data() + 2 * cb * plane, dst);
  return out;
}

std::pair<Tensor, Tensor> complex_split(const Tensor& g, std::size_t ca) {
  const std::size_t cb = g.dim(0) / 2 - ca;
  const std::size_t plane = g.dim(1) * g.dim(2);
  Tensor a({2 * ca, g.dim(1), g.dim(2)}), b({2 * cb, g.dim(1), g.dim(2)});
  const double* src = g.data();
  std::copy(src, src + ca * plane, a.data());
  src += ca * plane;
  std::copy(src, src + cb * plane, b.data());
  src += cb * plane;
  std::copy(src, src + ca * plane, a.data() + ca * plane);
  src += ca * plane;
  std::copy(src, src + cb * plane, b.data() + cb * plane);
  return {std::move(a), std::move(b)};
}

// Assembles the real block weight for a complex (transposed) convolution.
// Plain conv: rows = real/imag outputs, cols = real/imag inputs:
//   [[Wr, -Wi], [Wi, Wr]]. Transposed conv stores (in, out*K) so the same
//   complex product becomes [[Wr, Wi], [-Wi, Wr]] in that orientation.
std::vector<double> assemble_weight(const LayerPlan& p, const Parameter& wr, const Parameter& wi) {
  const std::size_t ci = p.in_channels, co = p.out_channels, k = p.kernel_f * p.kernel_t;
  std::vector<double> w(4 * ci * co * k);
  if (!p.transposed) {
    const std::size_t row = 2 * ci * k;
    for (std::size_t o = 0; o < co; ++o) {
      for (std::size_t i = 0; i < ci; ++i) {
        for (std::size_t q = 0; q < k; ++q) {
          const double r = wr.values[(o * ci + i) * k + q];
          const double m = wi.values[(o * ci + i) * k + q];
          w[o * row + i * k + q] = r;
          w[o * row + (ci + i) * k + q] = -m;
          w[(co + o) * row + i * k + q] = m;
          w[(co + o) * row + (ci + i) * k + q] = r;
        }
      }
    }
  } else {
    const std::size_t row = 2 * co * k;
    for (std::size_t i = 0; i < ci; ++i) {
      for (std::size_t o = 0; o < co; ++o) {
        for (std::size_t q = 0; q < k; ++q) {
          const double r = wr.values[(i * co + o) * k + q];
          const double m = wi.values[(i * co + o) * k + q];
          w[i * row + o * k + q] = r;               // re in -> re out
          w[i * row + (co + o) * k + q] = m;        // re in -> im out
          w[(ci + i) * row + o * k + q] = -m;       // im in -> re out
          w[(ci + i) * row + (co + o) * k + q] = r; // im in -> im out
        }
      }
    }
  }
  return w;
}

void scatter_weight_grad(const LayerPlan& p, const std::vector<double>& dw, std::vector<double>& dwr,
                         std::vector<double>& dwi) {
  const std::size_t ci = p.in_channels, co = p.out_channels, k = p.kernel_f * p.kernel_t;
  if (!p.transposed) {
    const std::size_t row = 2 * ci * k;
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t i = 0; i < ci; ++i)
        for (std::size_t q = 0; q < k; ++q) {
          const std::size_t idx = (o * ci + i) * k + q;
          dwr[idx] += dw[o * row + i * k + q] + dw[(co + o) * row + (ci + i) * k + q];
          dwi[idx] += -dw[o * row + (ci + i) * k + q] + dw[(co + o) * row + i * k + q];
        }
  } else {
    const std::size_t row = 2 * co * k;
    for (std::size_t i = 0; i < ci; ++i)
      for (std::size_t o = 0; o < co; ++o)
        for (std::size_t q = 0; q < k; ++q) {
          const std::size_t idx = (i * co + o) * k + q;
          dwr[idx] += dw[i * row + o * k + q] + dw[(ci + i) * row + (co + o) * k + q];
          dwi[idx] += dw[i * row + (co + o) * k + q] - dw[(ci + i) * row + o * k + q];
        }
  }
}

std::vector<double> concat_parts(const Parameter& re, const Parameter& im) {
  std::vector<double> v(re.values.begin(), re.values.end());
  v.insert(v.end(), im.values.begin(), im.values.end());
  return v;
}

}  // namespace

MaskForwardPass MaskEstimator::forward(const ComplexSpectrogram& x) const {
  require<ShapeError>(x.bins() == config_.bins,
                      "spectrogram has " + std::to_string(x.bins()) + " bins, model expects " +
                          std::to_string(config_.bins));
  auto cache = std::make_shared<MaskForwardCache>();
  const std::size_t frames = x.frames(), bins = x.bins();
  MaskForwardPass pass;
  if (injection_ != MaskInjection::none) {
    const std::complex<double> fill = injection_ == MaskInjection::identity ? 1.0 : 0.0;
    pass.mask = ComplexRatioMask(frames, bins, fill);
    cache->injected = true;
    pass.cache = std::move(cache);
    return pass;
  }

  // (2, F, T) input
  Tensor input({2, bins, frames});
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < bins; ++f) {
      input[f * frames + t] = x.at(t, f).real();
      input[bins * frames + f * frames + t] = x.at(t, f).imag();
    }
  }

  const auto plan = plan_layers(config_);
  const std::size_t n = config_.encoder.size();
  cache->layers.resize(plan.size());
  std::vector<const Tensor*> encoder_outputs(n);
  std::vector<std::pair<std::size_t, std::size_t>> encoder_input_shapes(n);

  Tensor current = input;
  for (std::size_t li = 0; li < plan.size(); ++li) {
    const auto& p = plan[li];
    auto& layer = cache->layers[li];
    if (p.transposed) {
      const std::size_t j = li - n;
      layer.input = j == 0 ? current : complex_concat(current, *encoder_outputs[n - 1 - j]);
    } else {
      layer.input = std::move(current);
      encoder_input_shapes[li] = {layer.input.dim(1), layer.input.dim(2)};
    }
    layer.weight = assemble_weight(p, params_.at(p.prefix + ".w_re"), params_.at(p.prefix + ".w_im"));
    const auto bias = concat_parts(params_.at(p.prefix + ".b_re"), params_.at(p.prefix + ".b_im"));
    Tensor y;
    if (p.transposed) {
      const auto [oh, ow] = encoder_input_shapes[2 * n - 1 - li];
      layer.out_h = oh;
      layer.out_w = ow;
      y = nn::conv_transpose2d_forward(layer.input, layer.weight, 2 * p.out_channels, bias, p.geometry, oh, ow);
    } else {
      y = nn::conv2d_forward(layer.input, layer.weight, 2 * p.out_channels, bias, p.geometry);
    }
    if (p.normalized) {
      const auto gamma = concat_parts(params_.at(p.prefix + ".norm_re.gamma"), params_.at(p.prefix + ".norm_im.gamma"));
      const auto beta = concat_parts(params_.at(p.prefix + ".norm_re.beta"), params_.at(p.prefix + ".norm_im.beta"));
      y = nn::instance_norm_forward(y, gamma, beta, config_.norm_eps, layer.norm);
      nn::leaky_relu_inplace(y, config_.leaky_slope);
    }
    layer.output = y;
    if (!p.transposed) encoder_outputs[li] = &layer.output;
    current = std::move(y);
  }
  cache->logits = std::move(current);

  pass.mask = ComplexRatioMask(frames, bins);
  const Tensor& o = cache->logits;
  for (std::size_t f = 0; f < bins; ++f) {
    for (std::size_t t = 0; t < frames; ++t) {
      pass.mask.at(t, f) = bound_mask({o[f * frames + t], o[bins * frames + f * frames + t]});
    }
  }
  pass.cache = std::move(cache);
  return pass;
}

void MaskEstimator::backward(const MaskForwardPass& pass, const ComplexRatioMask& grad_mask,
                             Gradients& grads) const {
  const auto& cache = *pass.cache;
  if (cache.injected) return;
  require<ShapeError>(grads.values.size() == params_.count(), "gradient buffer does not match parameters");
  const std::size_t frames = grad_mask.frames(), bins = grad_mask.bins();
  const Tensor& o = cache.logits;
  Tensor grad({2, bins, frames});
  for (std::size_t f = 0; f < bins; ++f) {
    for (std::size_t t = 0; t < frames; ++t) {
      const std::size_t re = f * frames + t, im = bins * frames + f * frames + t;
      const auto g = bound_mask_backward({o[re], o[im]}, grad_mask.at(t, f));
      grad[re] = g.real();
      grad[im] = g.imag();
    }
  }

  const auto plan = plan_layers(config_);
  const std::size_t n = config_.encoder.size();
  std::vector<Tensor> skip_grads(n);  // gradient arriving at encoder outputs via skips

  for (std::size_t li = plan.size(); li-- > 0;) {
    const auto& p = plan[li];
    const auto& layer = cache.layers[li];
    if (!p.transposed && !skip_grads[li].empty()) grad += skip_grads[li];
    if (p.normalized) {
      nn::leaky_relu_backward_inplace(grad, layer.output, config_.leaky_slope);
      const auto gamma = concat_parts(params_.at(p.prefix + ".norm_re.gamma"), params_.at(p.prefix + ".norm_im.gamma"));
      std::vector<double> dgamma(gamma.size(), 0.0), dbeta(gamma.size(), 0.0);
      grad = nn::instance_norm_backward(grad, gamma, layer.norm, dgamma, dbeta);
      const std::size_t co = p.out_channels;
      auto& gre = grads[params_.index_of(p.prefix + ".norm_re.gamma")];
      auto& gim = grads[params_.index_of(p.prefix + ".norm_im.gamma")];
      auto& bre = grads[params_.index_of(p.prefix + ".norm_re.beta")];
      auto& bim = grads[params_.index_of(p.prefix + ".norm_im.beta")];
      for (std::size_t c = 0; c < co; ++c) {
        gre[c] += dgamma[c];
        gim[c] += dgamma[co + c];
        bre[c] += dbeta[c];
        bim[c] += dbeta[co + c];
      }
    }
    std::vector<double> dw(layer.weight.size(), 0.0), db(2 * p.out_channels, 0.0);
    Tensor dx;
    if (p.transposed) {
      dx = nn::conv_transpose2d_backward(layer.input, grad, layer.weight, p.geometry, dw, db);
    } else {
      dx = nn::conv2d_backward(layer.input, grad, layer.weight, p.geometry, dw, db, li > 0);
    }
    scatter_weight_grad(p, dw, grads[params_.index_of(p.prefix + ".w_re")],
                        grads[params_.index_of(p.prefix + ".w_im")]);
    auto& dbr = grads[params_.index_of(p.prefix + ".b_re")];
    auto& dbi = grads[params_.index_of(p.prefix + ".b_im")];
    for (std::size_t c = 0; c < p.out_channels; ++c) {
      dbr[c] += db[c];
      dbi[c] += db[p.out_channels + c];
    }
    if (li == 0) break;
    if (p.transposed) {
      const std::size_t j = li - n;
      if (j == 0) {
        grad = std::move(dx);
      } else {
        auto [dprev, dskip] = complex_split(dx, config_.decoder[j - 1].channels);
        const std::size_t enc = n - 1 - j;
        if (skip_grads[enc].empty()) skip_grads[enc] = std::move(dskip);
        else skip_grads[enc] += dskip;
        grad = std::move(dprev);
      }
    } else {
      grad = std::move(dx);
    }
  }
}

ComplexRatioMask estimate_mask(const MaskEstimator& m, const ComplexSpectrogram& x) {
  return m.forward(x).mask;
}

Waveform enhance(const MaskEstimator& m, const Waveform& x, const StftConfig& cfg) {
  const auto spec = stft(x, cfg);
  const auto mask = estimate_mask(m, spec);
  return istft(apply_mask(mask, spec), x.sample_rate());
}

}  // namespace pfpl
