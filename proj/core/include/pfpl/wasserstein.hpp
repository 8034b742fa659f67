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
#include <vector>

#include "pfpl/phonetic_encoder.hpp"

namespace pfpl {

/// Transport plan between two equal-weight empirical samples.
struct Coupling {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;  // rows x cols, row-major

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  /// Row sums equal 1/rows, column sums equal 1/cols, entries nonnegative.
  bool is_feasible(double tol = 1e-12) const;
};

/// Exact 1-D W1 between equal-size samples: mean |sort(a)_i - sort(b)_i|.
/// Throws InvalidInput on size mismatch, empty or non-finite input.
double w1_1d(std::span<const double> a, std::span<const double> b);

/// Same value; also accumulates the (sub)gradient with respect to a and b
/// into the non-empty output spans. Ties are broken by a stable sort.
double w1_1d_backward(std::span<const double> a, std::span<const double> b, std::span<double> grad_a,
                      std::span<double> grad_b);

/// Exhaustive optimum of the Kantorovich problem for cost |x - y|^p, returned
/// as W_p = (min expected cost)^(1/p). Both samples must hold at most 8 points.
double w1_oracle(std::span<const double> a, std::span<const double> b, int p);
Coupling oracle_coupling(std::span<const double> a, std::span<const double> b, int p);

enum class ChannelAggregation { mean, sum };

/// Per-channel 1-D W1 over the frame axis, aggregated over channels.
/// Throws InvalidInput on shape mismatch.
double feature_w1(const FeatureSequence& c, const FeatureSequence& c_hat,
                  ChannelAggregation aggregation = ChannelAggregation::mean);

/// Value plus dL/d(c_hat), laid out like c_hat.values.
double feature_w1_backward(const FeatureSequence& c, const FeatureSequence& c_hat, std::span<double> grad_c_hat,
                           ChannelAggregation aggregation = ChannelAggregation::mean);

}  // namespace pfpl
