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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfpl/complex_unet.hpp"
#include "pfpl/data_io.hpp"
#include "pfpl/losses.hpp"
#include "pfpl/metrics.hpp"
#include "pfpl/phonetic_encoder.hpp"

namespace pfpl {

/// Throws InvalidInput on length mismatch or fewer than two points, and
/// DegenerateInput when either side has zero variance.
double pearson_cc(std::span<const double> u, std::span<const double> v);

/// Names of the metric columns, in report order.
const std::vector<std::string>& metric_names();
/// Metric value by column name; empty for absent PESQ-derived values.
std::optional<double> metric_value(const MetricScores& s, const std::string& name);

struct CorrelationRow {
  std::string id;
  std::map<std::string, double> losses;
  MetricScores metrics;
};

struct PccCell {
  std::string loss;
  std::string metric;
  std::optional<double> value;  // empty when degenerate
  std::size_t samples = 0;
  std::string note;
};

struct CorrelationReport {
  std::vector<std::string> loss_names;
  std::vector<CorrelationRow> rows;
  std::vector<PccCell> pcc;
  std::size_t pesq_failures = 0;
};

/// PCC for every (loss, metric) pair over the rows that have both values.
std::vector<PccCell> pcc_matrix(const std::vector<CorrelationRow>& rows, const std::vector<std::string>& loss_names);

/// Enhances every test utterance (sorted by id), scores each loss on the full
/// utterance against the clean reference, and evaluates the metrics.
CorrelationReport correlation_report(const CorpusIndex& corpus, const MaskEstimator& model,
                                     const std::vector<LossSpec>& losses, const StftConfig& stft,
                                     const PesqAdapter* adapter = nullptr);

/// Writes correlation_report.csv and pcc_matrix.csv into `dir`.
void write_correlation_report(const std::filesystem::path& dir, const CorrelationReport& report);
/// Reads the per-utterance table back (pcc is recomputed from it).
CorrelationReport read_correlation_report(const std::filesystem::path& csv);

struct FeatureItem {
  std::string id;
  Waveform waveform;
  std::string label;
};

/// One CSV row per frame: id, frame, label, then one column per channel.
void export_features(const PhoneticEncoder& encoder, const std::vector<FeatureItem>& items,
                     const std::filesystem::path& csv);

}  // namespace pfpl
