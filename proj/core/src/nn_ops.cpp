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

#include "pfpl/nn_ops.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "pfpl/error.hpp"

namespace pfpl::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

bool is_pointwise(const Conv2dGeometry& g) {
  return g.kernel_h == 1 && g.kernel_w == 1 && g.stride_h == 1 && g.stride_w == 1 &&
         g.pad_top == 0 && g.pad_bottom == 0 && g.pad_left == 0 && g.pad_right == 0;
}

// cols has shape (C*kh*kw, oh*ow).
std::vector<double> im2col(const Tensor& x, const Conv2dGeometry& g, std::size_t oh, std::size_t ow) {
  const std::size_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t k = c_in * g.kernel_h * g.kernel_w;
  std::vector<double> cols(k * oh * ow, 0.0);
  const double* src = x.data();
  std::size_t row = 0;
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t i = 0; i < g.kernel_h; ++i) {
      for (std::size_t j = 0; j < g.kernel_w; ++j, ++row) {
        double* dst = cols.data() + row * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride_h + i) -
                                    static_cast<std::ptrdiff_t>(g.pad_top);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          const double* line = src + (c * h + static_cast<std::size_t>(iy)) * w;
          for (std::size_t xo = 0; xo < ow; ++xo) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * g.stride_w + j) -
                                      static_cast<std::ptrdiff_t>(g.pad_left);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) dst[y * ow + xo] = line[ix];
          }
        }
      }
    }
  }
  return cols;
}

void col2im(const double* cols, const Conv2dGeometry& g, std::size_t oh, std::size_t ow, Tensor& x) {
  const std::size_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  double* dst = x.data();
  std::size_t row = 0;
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t i = 0; i < g.kernel_h; ++i) {
      for (std::size_t j = 0; j < g.kernel_w; ++j, ++row) {
        const double* src = cols + row * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride_h + i) -
                                    static_cast<std::ptrdiff_t>(g.pad_top);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          double* line = dst + (c * h + static_cast<std::size_t>(iy)) * w;
          for (std::size_t xo = 0; xo < ow; ++xo) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * g.stride_w + j) -
                                      static_cast<std::ptrdiff_t>(g.pad_left);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) line[ix] += src[y * ow + xo];
          }
        }
      }
    }
  }
}

void add_bias(Tensor& y, std::span<const double> bias) {
  if (bias.empty()) return;
  const std::size_t plane = y.dim(1) * y.dim(2);
  require<ShapeError>(bias.size() == y.dim(0), "bias size does not match channel count");
  for (std::size_t c = 0; c < y.dim(0); ++c) {
    double* p = y.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += bias[c];
  }
}

void accumulate_bias_grad(const Tensor& dy, std::span<double> dbias) {
  if (dbias.empty()) return;
  const std::size_t plane = dy.dim(1) * dy.dim(2);
  for (std::size_t c = 0; c < dy.dim(0); ++c) {
    const double* p = dy.data() + c * plane;
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += p[i];
    dbias[c] += s;
  }
}

void check_rank3(const Tensor& x, const char* what) {
  require<ShapeError>(x.rank() == 3, std::string(what) + " expects a (C,H,W) tensor, got " +
                                         x.shape_string());
}

}  // namespace

Conv2dGeometry Conv2dGeometry::centered(std::size_t kh, std::size_t kw, std::size_t sh,
                                        std::size_t sw) {
  Conv2dGeometry g;
  g.kernel_h = kh;
  g.kernel_w = kw;
  g.stride_h = sh;
  g.stride_w = sw;
  g.pad_top = g.pad_bottom = (kh - 1) / 2;
  g.pad_left = g.pad_right = (kw - 1) / 2;
  return g;
}

Conv2dGeometry Conv2dGeometry::causal_1d(std::size_t k, std::size_t stride, std::size_t pad_left) {
  Conv2dGeometry g;
  g.kernel_w = k;
  g.stride_w = stride;
  g.pad_left = pad_left;
  return g;
}

std::pair<std::size_t, std::size_t> Conv2dGeometry::output_size(std::size_t h, std::size_t w) const {
  const std::size_t ph = h + pad_top + pad_bottom;
  const std::size_t pw = w + pad_left + pad_right;
  require<ShapeError>(ph >= kernel_h && pw >= kernel_w,
                      "input " + std::to_string(h) + "x" + std::to_string(w) +
                          " is smaller than the kernel");
  return {(ph - kernel_h) / stride_h + 1, (pw - kernel_w) / stride_w + 1};
}

Tensor conv2d_forward(const Tensor& x, std::span<const double> weight, std::size_t out_channels,
                      std::span<const double> bias, const Conv2dGeometry& g) {
  check_rank3(x, "conv2d");
  const auto [oh, ow] = g.output_size(x.dim(1), x.dim(2));
  const std::size_t k = x.dim(0) * g.kernel_h * g.kernel_w;
  require<ShapeError>(weight.size() == out_channels * k, "conv2d weight size mismatch");
  Tensor y({out_channels, oh, ow});
  MutMap ym(y.data(), static_cast<Eigen::Index>(out_channels), static_cast<Eigen::Index>(oh * ow));
  ConstMap wm(weight.data(), static_cast<Eigen::Index>(out_channels), static_cast<Eigen::Index>(k));
  if (is_pointwise(g)) {
    ym.noalias() = wm * ConstMap(x.data(), static_cast<Eigen::Index>(k),
                                 static_cast<Eigen::Index>(oh * ow));
  } else {
    const auto cols = im2col(x, g, oh, ow);
    ym.noalias() = wm * ConstMap(cols.data(), static_cast<Eigen::Index>(k),
                                 static_cast<Eigen::Index>(oh * ow));
  }
  add_bias(y, bias);
  return y;
}

Tensor conv2d_backward(const Tensor& x, const Tensor& dy, std::span<const double> weight,
                       const Conv2dGeometry& g, std::span<double> dweight, std::span<double> dbias,
                       bool need_input_grad) {
  check_rank3(x, "conv2d_backward");
  const std::size_t cout = dy.dim(0), oh = dy.dim(1), ow = dy.dim(2);
  const auto k = static_cast<Eigen::Index>(x.dim(0) * g.kernel_h * g.kernel_w);
  const auto p = static_cast<Eigen::Index>(oh * ow);
  ConstMap dym(dy.data(), static_cast<Eigen::Index>(cout), p);
  ConstMap wm(weight.data(), static_cast<Eigen::Index>(cout), k);
  const bool pointwise = is_pointwise(g);

  if (!dweight.empty()) {
    MutMap dwm(dweight.data(), static_cast<Eigen::Index>(cout), k);
    if (pointwise) {
      dwm.noalias() += dym * ConstMap(x.data(), k, p).transpose();
    } else {
      const auto cols = im2col(x, g, oh, ow);
      dwm.noalias() += dym * ConstMap(cols.data(), k, p).transpose();
    }
  }
  accumulate_bias_grad(dy, dbias);
  if (!need_input_grad) return {};

  Tensor dx(x.shape());
  if (pointwise) {
    MutMap(dx.data(), k, p).noalias() = wm.transpose() * dym;
  } else {
    RowMat dcols = wm.transpose() * dym;
    col2im(dcols.data(), g, oh, ow, dx);
  }
  return dx;
}

Tensor conv_transpose2d_forward(const Tensor& x, std::span<const double> weight,
                                std::size_t out_channels, std::span<const double> bias,
                                const Conv2dGeometry& g, std::size_t out_h, std::size_t out_w) {
  check_rank3(x, "conv_transpose2d");
  const auto [ih, iw] = g.output_size(out_h, out_w);
  require<ShapeError>(ih == x.dim(1) && iw == x.dim(2),
                      "transposed convolution target " + std::to_string(out_h) + "x" +
                          std::to_string(out_w) + " is inconsistent with input " + x.shape_string());
  const auto cin = static_cast<Eigen::Index>(x.dim(0));
  const auto k = static_cast<Eigen::Index>(out_channels * g.kernel_h * g.kernel_w);
  const auto p = static_cast<Eigen::Index>(ih * iw);
  require<ShapeError>(weight.size() == static_cast<std::size_t>(cin * k),
                      "transposed conv weight size mismatch");
  RowMat cols = ConstMap(weight.data(), cin, k).transpose() * ConstMap(x.data(), cin, p);
  Tensor y({out_channels, out_h, out_w});
  col2im(cols.data(), g, ih, iw, y);
  add_bias(y, bias);
  return y;
}

Tensor conv_transpose2d_backward(const Tensor& x, const Tensor& dy, std::span<const double> weight,
                                 const Conv2dGeometry& g, std::span<double> dweight,
                                 std::span<double> dbias) {
  const std::size_t ih = x.dim(1), iw = x.dim(2);
  const auto cin = static_cast<Eigen::Index>(x.dim(0));
  const auto k = static_cast<Eigen::Index>(dy.dim(0) * g.kernel_h * g.kernel_w);
  const auto p = static_cast<Eigen::Index>(ih * iw);
  const auto dcols = im2col(dy, g, ih, iw);
  ConstMap dcm(dcols.data(), k, p);
  if (!dweight.empty()) {
    MutMap(dweight.data(), cin, k).noalias() += ConstMap(x.data(), cin, p) * dcm.transpose();
  }
  accumulate_bias_grad(dy, dbias);
  Tensor dx(x.shape());
  MutMap(dx.data(), cin, p).noalias() = ConstMap(weight.data(), cin, k) * dcm;
  return dx;
}

namespace {

// Shared normalization over `groups` contiguous blocks of `block` values,
// with the affine map applied per channel (each channel spans `plane`).
Tensor norm_forward(const Tensor& x, std::size_t groups, std::span<const double> gamma,
                    std::span<const double> beta, double eps, NormCache& cache) {
  const std::size_t channels = x.dim(0);
  const std::size_t plane = x.size() / channels;
  const std::size_t block = x.size() / groups;
  require<ShapeError>(gamma.size() == channels && beta.size() == channels,
                      "norm affine size does not match channel count");
  cache.normalized = Tensor(x.shape());
  cache.inv_std.assign(groups, 0.0);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const double* src = x.data() + gi * block;
    double mean = 0.0;
    for (std::size_t i = 0; i < block; ++i) mean += src[i];
    mean /= static_cast<double>(block);
    double var = 0.0;
    for (std::size_t i = 0; i < block; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(block);
    const double inv = 1.0 / std::sqrt(var + eps);
    cache.inv_std[gi] = inv;
    double* dst = cache.normalized.data() + gi * block;
    for (std::size_t i = 0; i < block; ++i) dst[i] = (src[i] - mean) * inv;
  }
  Tensor y(x.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    const double* xh = cache.normalized.data() + c * plane;
    double* dst = y.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = gamma[c] * xh[i] + beta[c];
  }
  return y;
}

Tensor norm_backward(const Tensor& dy, std::size_t groups, std::span<const double> gamma,
                     const NormCache& cache, std::span<double> dgamma, std::span<double> dbeta) {
  const std::size_t channels = dy.dim(0);
  const std::size_t plane = dy.size() / channels;
  const std::size_t block = dy.size() / groups;
  Tensor dxhat(dy.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    const double* g = dy.data() + c * plane;
    const double* xh = cache.normalized.data() + c * plane;
    double* d = dxhat.data() + c * plane;
    double sg = 0.0, sgx = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      d[i] = g[i] * gamma[c];
      sg += g[i];
      sgx += g[i] * xh[i];
    }
    if (!dgamma.empty()) dgamma[c] += sgx;
    if (!dbeta.empty()) dbeta[c] += sg;
  }
  Tensor dx(dy.shape());
  const double n = static_cast<double>(block);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const double* d = dxhat.data() + gi * block;
    const double* xh = cache.normalized.data() + gi * block;
    double sd = 0.0, sdx = 0.0;
    for (std::size_t i = 0; i < block; ++i) {
      sd += d[i];
      sdx += d[i] * xh[i];
    }
    const double inv = cache.inv_std[gi];
    double* out = dx.data() + gi * block;
    for (std::size_t i = 0; i < block; ++i) out[i] = inv * (d[i] - sd / n - xh[i] * sdx / n);
  }
  return dx;
}

}  // namespace

Tensor instance_norm_forward(const Tensor& x, std::span<const double> gamma,
                             std::span<const double> beta, double eps, NormCache& cache) {
  return norm_forward(x, x.dim(0), gamma, beta, eps, cache);
}

Tensor instance_norm_backward(const Tensor& dy, std::span<const double> gamma,
                              const NormCache& cache, std::span<double> dgamma,
                              std::span<double> dbeta) {
  return norm_backward(dy, dy.dim(0), gamma, cache, dgamma, dbeta);
}

Tensor group_norm_forward(const Tensor& x, std::span<const double> gamma,
                          std::span<const double> beta, double eps, NormCache& cache) {
  return norm_forward(x, 1, gamma, beta, eps, cache);
}

Tensor group_norm_backward(const Tensor& dy, std::span<const double> gamma,
                           const NormCache& cache, std::span<double> dgamma,
                           std::span<double> dbeta) {
  return norm_backward(dy, 1, gamma, cache, dgamma, dbeta);
}

void leaky_relu_inplace(Tensor& x, double slope) {
  for (double& v : x.values()) v = v > 0.0 ? v : slope * v;
}

void leaky_relu_backward_inplace(Tensor& dy, const Tensor& y, double slope) {
  for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = y[i] > 0.0 ? dy[i] : slope * dy[i];
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require<ShapeError>(a.rank() == 3 && b.rank() == 3 && a.dim(1) == b.dim(1) && a.dim(2) == b.dim(2),
                      "channel concat needs matching spatial shapes: " + a.shape_string() + " vs " +
                          b.shape_string());
  Tensor out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data(), a.data() + a.size(), out.data());
  std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& dy, std::size_t ca) {
  const std::size_t plane = dy.dim(1) * dy.dim(2);
  Tensor a({ca, dy.dim(1), dy.dim(2)});
  Tensor b({dy.dim(0) - ca, dy.dim(1), dy.dim(2)});
  std::copy(dy.data(), dy.data() + ca * plane, a.data());
  std::copy(dy.data() + ca * plane, dy.data() + dy.size(), b.data());
  return {std::move(a), std::move(b)};
}

}  // namespace pfpl::nn
