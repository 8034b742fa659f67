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

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pfpl/dsp.hpp"
#include "pfpl/pesq_adapter.hpp"

namespace pfpl {

struct MetricScores {
  std::optional<double> pesq;
  double stoi = 0.0;
  std::optional<double> csig, cbak, covl;
  double seg_snr = 0.0;
  double llr = 0.0;
  double wss = 0.0;
};

struct CompositeScores {
  double csig = 1.0, cbak = 1.0, covl = 1.0;
};

/// Frame settings shared by seg_snr, llr and wss: 32 ms frames, 75% overlap.
struct FrameSettings {
  std::size_t length = 0, hop = 0;
  static FrameSettings for_rate(int sample_rate);
};

/// Mean per-frame SNR clamped to [-10, 35] dB over frames whose clean energy
/// is within 40 dB of the loudest frame. Throws NoActiveFrames when none are.
double seg_snr(const Waveform& y, const Waveform& y_hat);

/// Median over frames of the per-frame log-likelihood ratio (clipped to
/// [0, 2]); frames with an all-zero side are skipped.
double llr(const Waveform& y, const Waveform& y_hat);
/// LPC order used by llr at a given sample rate.
std::size_t llr_order(int sample_rate);

/// Weighted spectral slope distance; median over the best 95% of frames.
double wss(const Waveform& y, const Waveform& y_hat);

/// Short-time objective intelligibility. Throws InvalidInput when fewer than
/// 30 analysis frames survive silence removal.
double stoi(const Waveform& y, const Waveform& y_hat);

/// Regression composites, each clipped to [1, 5].
CompositeScores composite(double pesq, double llr, double wss, double seg_snr);

/// Always fills stoi, seg_snr, llr, wss; pesq and composites only when the
/// adapter produces a score (failures log a warning).
MetricScores evaluate_pair(const Waveform& y, const Waveform& y_hat, const PesqAdapter* adapter = nullptr);

struct MetricRow {
  std::string id;
  MetricScores scores;
};

/// One row per utterance; absent values are empty cells.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace pfpl
