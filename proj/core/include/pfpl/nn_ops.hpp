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
#include <span>
#include <utility>
#include <vector>

#include "pfpl/tensor.hpp"

/// Differentiable building blocks with explicit forward/backward passes.
///
/// Feature maps are (channels, height, width) tensors. Weights are row-major
/// (out, in*kh*kw) for convolutions and (in, out*kh*kw) for transposed
/// convolutions. Backward functions return the input gradient and
/// accumulate into the weight/bias gradient spans when those are non-empty.
namespace pfpl::nn {

struct Conv2dGeometry {
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_top = 0, pad_bottom = 0;
  std::size_t pad_left = 0, pad_right = 0;

  /// Symmetric "same-ish" padding of (k-1)/2 on each side.
  static Conv2dGeometry centered(std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw);
  /// 1-D convolution over the width axis with left-only (causal) padding.
  static Conv2dGeometry causal_1d(std::size_t k, std::size_t stride, std::size_t pad_left);

  std::pair<std::size_t, std::size_t> output_size(std::size_t h, std::size_t w) const;
};

Tensor conv2d_forward(const Tensor& x, std::span<const double> weight, std::size_t out_channels,
                      std::span<const double> bias, const Conv2dGeometry& g);

Tensor conv2d_backward(const Tensor& x, const Tensor& dy, std::span<const double> weight,
                       const Conv2dGeometry& g, std::span<double> dweight, std::span<double> dbias,
                       bool need_input_grad = true);

/// Adjoint of conv2d with geometry `g`: maps a (Cin, Hin, Win) map to
/// (Cout, out_h, out_w), where g.output_size(out_h, out_w) == (Hin, Win).
Tensor conv_transpose2d_forward(const Tensor& x, std::span<const double> weight,
                                std::size_t out_channels, std::span<const double> bias,
                                const Conv2dGeometry& g, std::size_t out_h, std::size_t out_w);

Tensor conv_transpose2d_backward(const Tensor& x, const Tensor& dy, std::span<const double> weight,
                                 const Conv2dGeometry& g, std::span<double> dweight,
                                 std::span<double> dbias);

/// Per-channel normalization cache shared by instance and group norm.
struct NormCache {
  Tensor normalized;               // x_hat
  std::vector<double> inv_std;     // one per normalization group
};

/// Normalizes every channel over its spatial extent, then applies a
/// per-channel affine map.
Tensor instance_norm_forward(const Tensor& x, std::span<const double> gamma,
                             std::span<const double> beta, double eps, NormCache& cache);
Tensor instance_norm_backward(const Tensor& dy, std::span<const double> gamma,
                              const NormCache& cache, std::span<double> dgamma,
                              std::span<double> dbeta);

/// Single-group group norm: normalizes over all channels and positions
/// jointly, then applies a per-channel affine map.
Tensor group_norm_forward(const Tensor& x, std::span<const double> gamma,
                          std::span<const double> beta, double eps, NormCache& cache);
Tensor group_norm_backward(const Tensor& dy, std::span<const double> gamma,
                           const NormCache& cache, std::span<double> dgamma,
                           std::span<double> dbeta);

void leaky_relu_inplace(Tensor& x, double slope);
/// `y` is the activation output; its sign identifies the active branch.
void leaky_relu_backward_inplace(Tensor& dy, const Tensor& y, double slope);

/// Concatenates along the channel axis.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits dy of a concatenation into the parts for `a` (first ca channels) and `b`.
std::pair<Tensor, Tensor> split_channels(const Tensor& dy, std::size_t ca);

}  // namespace pfpl::nn
