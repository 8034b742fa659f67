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
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pfpl/checkpoint.hpp"
#include "pfpl/complex_unet.hpp"
#include "pfpl/data_io.hpp"
#include "pfpl/losses.hpp"

namespace pfpl {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  LossSpec loss;
  std::size_t steps = 1000;
  std::size_t batch_size = 4;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::size_t checkpoint_interval = 0;   // 0: only at the end
  std::filesystem::path checkpoint_path;  // empty: no checkpoints
  bool save_optimizer = true;
  SegmentSpec crop;
  double clip_norm = 5.0;                // <= 0 disables clipping
  StftConfig stft;
  std::size_t feature_cache_entries = 512;
  std::size_t wave_cache_entries = 64;
  bool deterministic = true;

  /// Throws ConfigError on non-positive counts or rates.
  void validate() const;
  /// Every setting that influences the optimization trajectory (paths excluded).
  std::string canonical() const;
  std::string hash() const;
};

struct BatchItem {
  std::string id;
  std::size_t offset = 0;
  Waveform clean;
  Waveform noisy;
};

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
  std::map<std::string, double> components;  // batch means
  double grad_norm = 0.0;
};

struct TrainReport {
  std::size_t start_step = 0;
  std::size_t end_step = 0;
  std::vector<StepRecord> log;

  std::vector<double> losses() const;
};

/// Loss of one (noisy, clean) pair through stft -> mask -> istft, and when
/// `grads` is set, accumulates dL/dparams into it.
LossValue pipeline_loss(const MaskEstimator& model, const LossSpec& loss, const StftConfig& stft,
                        const Waveform& noisy, const Waveform& clean, Gradients* grads = nullptr,
                        const FeatureSequence* clean_features = nullptr);

/// Adam update with bias correction; parameters and moments stay float32.
void adam_step(ParameterSet& params, OptimizerState& state, const Gradients& grads, const AdamConfig& cfg);

class Trainer {
 public:
  /// Throws EmptyCorpus when the corpus has no training entries.
  Trainer(TrainConfig cfg, CorpusIndex corpus);

  const TrainConfig& config() const { return cfg_; }
  const std::vector<CorpusEntry>& training_entries() const { return train_; }

  /// The batch for a step depends only on (seed, step).
  std::vector<BatchItem> batch_for_step(std::size_t step);

  /// Runs steps [state.step, cfg.steps). NaN or infinite losses raise
  /// TrainingError naming the step and the utterances of the batch.
  TrainReport train(MaskEstimator& model, OptimizerState& state,
                    const std::function<void(const StepRecord&)>& on_step = {});

 private:
  const WavePair& pair(const std::string& id);
  const FeatureSequence* clean_features(const BatchItem& item);

  TrainConfig cfg_;
  CorpusIndex corpus_;
  std::vector<CorpusEntry> train_;
  std::map<std::string, std::pair<WavePair, std::list<std::string>::iterator>> waves_;
  std::list<std::string> wave_lru_;
  std::map<std::pair<std::string, std::size_t>, FeatureSequence> features_;
  std::list<std::pair<std::string, std::size_t>> feature_order_;
};

}  // namespace pfpl
