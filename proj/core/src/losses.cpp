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

#include "pfpl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pfpl/error.hpp"

namespace pfpl {

namespace {

constexpr double kWsdrEps = 1e-8;

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  require(a == b, std::string(what) + " needs equal lengths, got " + std::to_string(a) + " and " +
                      std::to_string(b));
  require(a > 0, std::string(what) + " needs non-empty signals");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// cos(u, v) = u.v / (|u||v| + eps); accumulates scale * d cos / dv into grad.
double guarded_cosine(std::span<const double> u, std::span<const double> v, double scale, std::span<double> grad) {
  const double nu = std::sqrt(dot(u, u));
  const double nv = std::sqrt(dot(v, v));
  const double uv = dot(u, v);
  const double denom = nu * nv + kWsdrEps;
  if (!grad.empty()) {
    const double a = scale / denom;
    const double b = nv > 0.0 ? scale * uv * nu / (nv * denom * denom) : 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) grad[i] += a * u[i] - b * v[i];
  }
  return uv / denom;
}

constexpr const char* kMae = "mae_term";
constexpr const char* kMse = "mse_term";
constexpr const char* kWsdr = "wsdr_term";
constexpr const char* kW1 = "wasserstein_term";
constexpr const char* kL1 = "feature_l1_term";

}  // namespace

std::string to_string(LossName name) {
  switch (name) {
    case LossName::mae: return "mae";
    case LossName::mse: return "mse";
    case LossName::wsdr: return "wsdr";
    case LossName::pfpl: return "pfpl";
    case LossName::pfpl_w: return "pfpl_w";
    case LossName::pfpl_w_mae: return "pfpl_w_mae";
  }
  return "?";
}

LossName loss_from_string(std::string_view name) {
  for (auto n : {LossName::mae, LossName::mse, LossName::wsdr, LossName::pfpl, LossName::pfpl_w,
                 LossName::pfpl_w_mae}) {
    if (to_string(n) == name) return n;
  }
  throw ConfigError("unknown loss '" + std::string(name) + "' (expected mae, mse, wsdr, pfpl, pfpl_w or pfpl_w_mae)");
}

bool LossSpec::needs_encoder() const {
  return name == LossName::pfpl || name == LossName::pfpl_w || name == LossName::pfpl_w_mae;
}

void LossSpec::validate() const {
  if (needs_encoder() && !encoder) throw ConfigError("loss '" + to_string(name) + "' requires a phonetic encoder");
  require<ConfigError>(std::isfinite(mae_weight) && std::isfinite(feature_weight), "loss weights must be finite");
}

double mae_loss(std::span<const double> y, std::span<const double> y_hat, std::span<double> grad) {
  check_lengths(y.size(), y_hat.size(), "mae_loss");
  const double inv_n = 1.0 / static_cast<double>(y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y_hat[i] - y[i];
    s += std::abs(d);
    if (!grad.empty()) grad[i] += (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv_n;
  }
  return s * inv_n;
}

double mse_loss(std::span<const double> y, std::span<const double> y_hat, std::span<double> grad) {
  check_lengths(y.size(), y_hat.size(), "mse_loss");
  const double inv_n = 1.0 / static_cast<double>(y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y_hat[i] - y[i];
    s += d * d;
    if (!grad.empty()) grad[i] += 2.0 * d * inv_n;
  }
  return s * inv_n;
}

double wsdr_loss(std::span<const double> x, std::span<const double> y, std::span<const double> y_hat,
                 std::span<double> grad) {
  check_lengths(y.size(), y_hat.size(), "wsdr_loss");
  check_lengths(x.size(), y.size(), "wsdr_loss");
  const std::size_t n = y.size();
  std::vector<double> noise(n), noise_hat(n);
  for (std::size_t i = 0; i < n; ++i) {
    noise[i] = x[i] - y[i];
    noise_hat[i] = x[i] - y_hat[i];
  }
  const double yy = dot(y, y);
  const double nn = dot(noise, noise);
  const double alpha = yy / (yy + nn + kWsdrEps);
  std::vector<double> g2;
  if (!grad.empty()) g2.assign(n, 0.0);
  const double c1 = guarded_cosine(y, y_hat, -alpha, grad);
  const double c2 = guarded_cosine(noise, noise_hat, -(1.0 - alpha), g2);
  // noise_hat = x - y_hat
  for (std::size_t i = 0; i < g2.size(); ++i) grad[i] -= g2[i];
  return -alpha * c1 - (1.0 - alpha) * c2;
}

double feature_l1(const FeatureSequence& c, const FeatureSequence& c_hat, std::span<double> grad) {
  require(c.same_shape(c_hat), "feature_l1 needs equal shapes, got " + std::to_string(c.frames) + "x" +
                                   std::to_string(c.channels) + " and " + std::to_string(c_hat.frames) + "x" +
                                   std::to_string(c_hat.channels));
  require(!c.values.empty(), "feature_l1 needs non-empty features");
  const double inv_n = 1.0 / static_cast<double>(c.values.size());
  double s = 0.0;
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    const double d = c_hat.values[i] - c.values[i];
    s += std::abs(d);
    if (!grad.empty()) grad[i] += (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv_n;
  }
  return s * inv_n;
}

double mae_loss(const Waveform& y, const Waveform& y_hat) { return mae_loss(y.view(), y_hat.view(), {}); }
double mse_loss(const Waveform& y, const Waveform& y_hat) { return mse_loss(y.view(), y_hat.view(), {}); }
double wsdr_loss(const Waveform& x, const Waveform& y, const Waveform& y_hat) {
  return wsdr_loss(x.view(), y.view(), y_hat.view(), {});
}
double feature_l1(const FeatureSequence& c, const FeatureSequence& c_hat) { return feature_l1(c, c_hat, {}); }

LossValue compute_loss(const LossSpec& spec, const Waveform& x, const Waveform& y, const Waveform& y_hat,
                       const LossOptions& options) {
  spec.validate();
  const std::size_t n = y.size();
  require(n > 0, "clean waveform is empty");
  std::vector<double> est(n, 0.0);
  std::copy_n(y_hat.samples().begin(), std::min(n, y_hat.size()), est.begin());

  const bool want_grad = options.grad_y_hat != nullptr;
  std::vector<double> grad(want_grad ? n : 0, 0.0);
  LossValue value;
  auto add = [&](const char* name, double weight, double v) {
    value.components[name] = v;
    value.weights[name] = weight;
    value.total += weight * v;
  };

  const bool has_mae = spec.name == LossName::mae || spec.name == LossName::pfpl || spec.name == LossName::pfpl_w;
  if (has_mae) {
    std::vector<double> g(want_grad ? n : 0, 0.0);
    const double weight = spec.name == LossName::mae ? 1.0 : spec.mae_weight;
    add(kMae, weight, mae_loss(y.view(), est, g));
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += weight * g[i];
  }
  if (spec.name == LossName::mse) add(kMse, 1.0, mse_loss(y.view(), est, grad));
  if (spec.name == LossName::wsdr) {
    require(x.size() == n, "wsdr needs the noisy waveform at the clean length");
    add(kWsdr, 1.0, wsdr_loss(x.view(), y.view(), est, grad));
  }

  if (spec.needs_encoder()) {
    const auto& enc = *spec.encoder;
    FeatureSequence clean_local;
    const FeatureSequence* clean = options.clean_features;
    if (clean == nullptr) {
      clean_local = enc.encode(y);
      clean = &clean_local;
    }
    const auto pass = enc.forward(est);
    std::vector<double> gf(want_grad ? pass.features.values.size() : 0, 0.0);
    const double weight = spec.feature_weight;
    double term = 0.0;
    if (spec.name == LossName::pfpl) {
      term = feature_w1_backward(*clean, pass.features, gf, spec.aggregation);
      add(kW1, weight, term);
    } else {
      term = feature_l1(*clean, pass.features, gf);
      add(kL1, weight, term);
    }
    if (want_grad) {
      for (double& g : gf) g *= weight;
      const auto gx = enc.backward(pass, gf);
      for (std::size_t i = 0; i < n; ++i) grad[i] += gx[i];
    }
  }

  if (want_grad) *options.grad_y_hat = std::move(grad);
  return value;
}

}  // namespace pfpl
