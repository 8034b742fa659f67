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

#include "pfpl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "pfpl/error.hpp"
#include "pfpl/log.hpp"
#include "pfpl/random.hpp"

namespace pfpl {

void TrainConfig::validate() const {
  loss.validate();
  require<ConfigError>(batch_size > 0, "batch size must be positive");
  require<ConfigError>(adam.lr > 0.0 && std::isfinite(adam.lr), "learning rate must be positive");
  require<ConfigError>(adam.beta1 >= 0.0 && adam.beta1 < 1.0, "adam beta1 must be in [0, 1)");
  require<ConfigError>(adam.beta2 >= 0.0 && adam.beta2 < 1.0, "adam beta2 must be in [0, 1)");
  require<ConfigError>(adam.eps > 0.0, "adam epsilon must be positive");
  require<ConfigError>(std::isfinite(clip_norm), "gradient clip norm must be finite");
  crop.validate();
  stft.validate();
}

std::string TrainConfig::canonical() const {
  std::ostringstream o;
  o.precision(17);
  o << "loss=" << to_string(loss.name) << "\nloss.mae_weight=" << loss.mae_weight
    << "\nloss.feature_weight=" << loss.feature_weight
    << "\nloss.aggregation=" << (loss.aggregation == ChannelAggregation::mean ? "mean" : "sum")
    << "\nencoder=" << (loss.encoder ? loss.encoder->source() : std::string("none")) << "\nbatch=" << batch_size
    << "\nlr=" << adam.lr << "\nbeta1=" << adam.beta1 << "\nbeta2=" << adam.beta2 << "\neps=" << adam.eps
    << "\nseed=" << seed << "\ncrop=" << crop.length << "/" << crop.hop << "/" << to_string(crop.pad)
    << "\nclip=" << clip_norm << "\nstft=" << stft.window_length << "/" << stft.hop_length << "/"
    << to_string(stft.window) << "/" << stft.centered << "\n";
  return o.str();
}

std::string TrainConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

std::vector<double> TrainReport::losses() const {
  std::vector<double> out;
  out.reserve(log.size());
  for (const auto& r : log) out.push_back(r.loss);
  return out;
}

LossValue pipeline_loss(const MaskEstimator& model, const LossSpec& loss, const StftConfig& stft_cfg,
                        const Waveform& noisy, const Waveform& clean, Gradients* grads,
                        const FeatureSequence* clean_features) {
  const auto x = stft(noisy, stft_cfg);
  const auto pass = model.forward(x);
  const auto y = apply_mask(pass.mask, x);
  const auto y_hat = istft(y, noisy.sample_rate());
  std::vector<double> g;
  LossOptions opts;
  opts.clean_features = clean_features;
  if (grads != nullptr) opts.grad_y_hat = &g;
  auto value = compute_loss(loss, noisy, clean, y_hat, opts);
  if (grads != nullptr) {
    g.resize(y_hat.size(), 0.0);
    const auto gy = istft_backward(g, y);
    ComplexRatioMask gm(x.frames(), x.bins());
    for (std::size_t i = 0; i < gm.values().size(); ++i) gm.values()[i] = gy.values()[i] * std::conj(x.values()[i]);
    model.backward(pass, gm, *grads);
  }
  return value;
}

void adam_step(ParameterSet& params, OptimizerState& state, const Gradients& grads, const AdamConfig& cfg) {
  require<ShapeError>(state.m.size() == params.count() && state.v.size() == params.count(),
                      "optimizer state does not match the parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.count(); ++i) {
    auto& p = params[i].values;
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double mk = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      const double vk = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double update = cfg.lr * (mk / c1) / (std::sqrt(vk / c2) + cfg.eps);
      p[k] = static_cast<float>(static_cast<double>(p[k]) - update);
    }
  }
}

Trainer::Trainer(TrainConfig cfg, CorpusIndex corpus) : cfg_(std::move(cfg)), corpus_(std::move(corpus)) {
  cfg_.validate();
  train_ = corpus_.split(Split::train);
  if (train_.empty()) throw EmptyCorpus("corpus has no training utterances");
}

const WavePair& Trainer::pair(const std::string& id) {
  auto it = waves_.find(id);
  if (it != waves_.end()) {
    wave_lru_.splice(wave_lru_.begin(), wave_lru_, it->second.second);
    return it->second.first;
  }
  if (cfg_.wave_cache_entries > 0 && waves_.size() >= cfg_.wave_cache_entries) {
    waves_.erase(wave_lru_.back());
    wave_lru_.pop_back();
  }
  wave_lru_.push_front(id);
  auto [pos, ok] = waves_.emplace(id, std::make_pair(load_pair(corpus_, id), wave_lru_.begin()));
  return pos->second.first;
}

std::vector<BatchItem> Trainer::batch_for_step(std::size_t step) {
  Rng rng(derive_seed(cfg_.seed, step));
  std::vector<BatchItem> batch;
  for (std::size_t b = 0; b < cfg_.batch_size; ++b) {
    const auto& entry = train_[rng.below(train_.size())];
    const auto& wp = pair(entry.id);
    const std::size_t n = wp.clean.size();
    const std::size_t span = n > cfg_.crop.length ? n - cfg_.crop.length : 0;
    const std::size_t offset = rng.below(span + 1);
    batch.push_back({entry.id, offset, crop(wp.clean, offset, cfg_.crop.length, cfg_.crop.pad),
                     crop(wp.noisy, offset, cfg_.crop.length, cfg_.crop.pad)});
  }
  return batch;
}

const FeatureSequence* Trainer::clean_features(const BatchItem& item) {
  if (!cfg_.loss.needs_encoder() || cfg_.feature_cache_entries == 0) return nullptr;
  const auto key = std::make_pair(item.id, item.offset);
  auto it = features_.find(key);
  if (it != features_.end()) return &it->second;
  if (features_.size() >= cfg_.feature_cache_entries) {
    features_.erase(feature_order_.front());
    feature_order_.pop_front();
  }
  feature_order_.push_back(key);
  return &features_.emplace(key, cfg_.loss.encoder->encode(item.clean)).first->second;
}

TrainReport Trainer::train(MaskEstimator& model, OptimizerState& state,
                           const std::function<void(const StepRecord&)>& on_step) {
  if (state.m.empty() && state.v.empty()) {
    const auto step = state.step;
    state = OptimizerState::zeros_like(model.parameters());
    state.step = step;
  }
  TrainReport report;
  report.start_step = state.step;
  report.end_step = state.step;
  const double inv_b = 1.0 / static_cast<double>(cfg_.batch_size);
  for (std::size_t s = state.step; s < cfg_.steps; ++s) {
    const auto batch = batch_for_step(s);
    auto grads = Gradients::zeros_like(model.parameters());
    StepRecord rec;
    rec.step = s;
    auto where = [&] {
      std::string ids;
      for (const auto& item : batch) ids += (ids.empty() ? "" : ", ") + item.id + "@" + std::to_string(item.offset);
      return " at step " + std::to_string(s) + " (batch: " + ids + ")";
    };
    try {
      for (const auto& item : batch) {
        const auto value = pipeline_loss(model, cfg_.loss, cfg_.stft, item.noisy, item.clean, &grads,
                                         clean_features(item));
        rec.loss += value.total * inv_b;
        for (const auto& [k, v] : value.components) rec.components[k] += v * inv_b;
      }
    } catch (const InvalidInput& e) {
      // non-finite intermediate signals surface here before the loss exists
      throw TrainingError(std::string("non-finite values") + where() + ": " + e.what());
    }
    grads.scale(inv_b);
    rec.grad_norm = grads.global_norm();
    if (!std::isfinite(rec.loss) || !std::isfinite(rec.grad_norm)) {
      throw TrainingError("non-finite " + std::string(std::isfinite(rec.loss) ? "gradient" : "loss") + where());
    }
    if (cfg_.clip_norm > 0.0 && rec.grad_norm > cfg_.clip_norm) grads.scale(cfg_.clip_norm / rec.grad_norm);
    adam_step(model.parameters(), state, grads, cfg_.adam);
    report.log.push_back(rec);
    report.end_step = s + 1;
    if (on_step) on_step(rec);
    const bool last = s + 1 == cfg_.steps;
    if (!cfg_.checkpoint_path.empty() &&
        (last || (cfg_.checkpoint_interval > 0 && (s + 1) % cfg_.checkpoint_interval == 0))) {
      save_checkpoint(cfg_.checkpoint_path, model, cfg_.save_optimizer ? &state : nullptr, s + 1, cfg_.hash());
    }
  }
  return report;
}

}  // namespace pfpl
