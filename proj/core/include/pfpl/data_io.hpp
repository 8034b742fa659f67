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
#include <filesystem>
#include <string>
#include <vector>

#include "pfpl/dsp.hpp"

namespace pfpl {

enum class Split { train, test };
std::string to_string(Split s);

struct CorpusEntry {
  std::string id;
  std::filesystem::path clean;
  std::filesystem::path noisy;
  Split split = Split::train;
};

/// Paired clean/noisy utterances, sorted by id.
class CorpusIndex {
 public:
  CorpusIndex() = default;
  CorpusIndex(std::filesystem::path root, std::vector<CorpusEntry> entries);

  const std::filesystem::path& root() const { return root_; }
  const std::vector<CorpusEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& id) const;
  /// Throws KeyError for unknown ids.
  const CorpusEntry& at(const std::string& id) const;
  std::vector<CorpusEntry> split(Split s) const;

 private:
  std::filesystem::path root_;
  std::vector<CorpusEntry> entries_;
};

/// Walks `root` for directories whose name contains "clean" and pairs each
/// file with the identically named file in the sibling directory where
/// "clean" is replaced by "noisy". A directory name containing "train" marks
/// the training split; everything else is test.
CorpusIndex scan_corpus(const std::filesystem::path& root);

struct WavePair {
  Waveform clean;
  Waveform noisy;
};

/// Both sides at 16 kHz; the shorter one is zero padded (with a warning).
WavePair load_pair(const CorpusIndex& index, const std::string& id);

struct MixResult {
  Waveform waveform;
  double gain = 0.0;
  bool tiled = false;
};

/// clean + g * noise with g chosen for the requested SNR. Noise shorter than
/// the clean signal is tiled.
MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db);

enum class PadPolicy { reflect, zero, drop_last };
std::string to_string(PadPolicy p);
PadPolicy pad_policy_from_string(const std::string& name);

struct SegmentSpec {
  std::size_t length = 16384;
  std::size_t hop = 16384;
  PadPolicy pad = PadPolicy::reflect;

  void validate() const;
};

/// Full segments at 0, hop, 2*hop, ...; unless the policy is drop_last, one
/// more padded segment covers any uncovered tail.
std::vector<Waveform> segment(const Waveform& w, const SegmentSpec& spec);

/// `length` samples starting at `offset`, padded past the end per `pad`
/// (drop_last behaves like zero here).
Waveform crop(const Waveform& w, std::size_t offset, std::size_t length, PadPolicy pad);

}  // namespace pfpl
