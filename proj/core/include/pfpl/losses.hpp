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

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pfpl/dsp.hpp"
#include "pfpl/phonetic_encoder.hpp"
#include "pfpl/wasserstein.hpp"

namespace pfpl {

enum class LossName { mae, mse, wsdr, pfpl, pfpl_w, pfpl_w_mae };

std::string to_string(LossName name);
/// Throws ConfigError for unknown names.
LossName loss_from_string(std::string_view name);

struct LossSpec {
  LossName name = LossName::pfpl;
  double mae_weight = 1.0;
  double feature_weight = 1.0;
  ChannelAggregation aggregation = ChannelAggregation::mean;
  std::shared_ptr<const PhoneticEncoder> encoder;

  bool needs_encoder() const;
  /// Throws ConfigError when a feature loss has no encoder.
  void validate() const;
};

struct LossValue {
  double total = 0.0;
  std::map<std::string, double> components;
  std::map<std::string, double> weights;
};

double mae_loss(const Waveform& y, const Waveform& y_hat);
double mse_loss(const Waveform& y, const Waveform& y_hat);
/// Weighted SDR in [-1, 1]; x is the noisy mixture.
double wsdr_loss(const Waveform& x, const Waveform& y, const Waveform& y_hat);
/// Mean absolute entrywise difference.
double feature_l1(const FeatureSequence& c, const FeatureSequence& c_hat);

/// Gradient-returning span versions; each accumulates into `grad` when it is non-empty.
double mae_loss(std::span<const double> y, std::span<const double> y_hat, std::span<double> grad);
double mse_loss(std::span<const double> y, std::span<const double> y_hat, std::span<double> grad);
double wsdr_loss(std::span<const double> x, std::span<const double> y, std::span<const double> y_hat,
                 std::span<double> grad);
double feature_l1(const FeatureSequence& c, const FeatureSequence& c_hat, std::span<double> grad);

struct LossOptions {
  /// Precomputed encoder output for the clean waveform.
  const FeatureSequence* clean_features = nullptr;
  /// When set, receives dL/d(y_hat), sized like y.
  std::vector<double>* grad_y_hat = nullptr;
};

/// Evaluates the selected objective. y_hat is trimmed or zero-padded to the
/// length of y first. x is only read by wsdr.
LossValue compute_loss(const LossSpec& spec, const Waveform& x, const Waveform& y, const Waveform& y_hat,
                       const LossOptions& options = {});

}  // namespace pfpl
