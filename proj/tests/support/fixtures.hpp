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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pfpl/dsp.hpp"
#include "pfpl/phonetic_encoder.hpp"
#include "pfpl/random.hpp"

namespace pfpl::testing {

std::filesystem::path data_path(const std::string& name);
Waveform fixture_wav(const std::string& name);
nlohmann::json golden(const std::string& name);

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::vector<double> normal_vector(Rng& rng, std::size_t n, double scale = 1.0);
Waveform random_waveform(Rng& rng, std::size_t n, double scale = 0.1);

/// Random stand-in whose receptive field (105 samples) fits 256-sample inputs.
EncoderSpec short_stand_in(std::size_t width = 512);

struct CorpusLayout {
  std::size_t train = 2;
  std::size_t test = 2;
  double snr_db = 5.0;
  std::size_t samples = 16000;
};

/// VBD-style tree (clean_/noisy_ trainset/testset dirs) built from the
/// speech fixtures mixed with the noise fixture. Utterance k uses a
/// circularly shifted, rescaled fixture so every id is distinct.
void write_fixture_corpus(const std::filesystem::path& root, const CorpusLayout& layout = {});

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Central differences of f at x over `coords`. The error of coordinate i is
/// |a_i - n_i| / max(|a_i|, |n_i|, floor), where floor = 1e-3 * max_j |n_j|.
GradCheck check_gradient(const std::function<double(std::span<const double>)>& f, std::vector<double> x,
                         std::span<const double> analytic, std::span<const std::size_t> coords, double h);

std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n, std::size_t count);

}  // namespace pfpl::testing
