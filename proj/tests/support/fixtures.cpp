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

#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "pfpl/data_io.hpp"
#include "pfpl/wav_io.hpp"

namespace pfpl::testing {

namespace fs = std::filesystem;

fs::path data_path(const std::string& name) { return fs::path(PFPL_TEST_DATA_DIR) / name; }

Waveform fixture_wav(const std::string& name) { return read_wav(data_path(name)); }

nlohmann::json golden(const std::string& name) {
  std::ifstream in(data_path(name));
  if (!in) throw std::runtime_error("missing golden file " + name);
  return nlohmann::json::parse(in);
}

namespace {
std::atomic<unsigned> dir_counter{0};
}

TempDir::TempDir(const std::string& tag) {
  path_ = fs::temp_directory_path() /
          ("pfpl-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(dir_counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<double> normal_vector(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

Waveform random_waveform(Rng& rng, std::size_t n, double scale) {
  return Waveform(normal_vector(rng, n, scale), kDefaultSampleRate);
}

EncoderSpec short_stand_in(std::size_t width) {
  EncoderSpec s = EncoderSpec::stand_in(width);
  s.conv = {{width, 10, 5}, {width, 8, 4}, {width, 4, 2}};
  return s;
}

void write_fixture_corpus(const fs::path& root, const CorpusLayout& layout) {
  const Waveform speech[2] = {fixture_wav("speech_a.wav"), fixture_wav("speech_b.wav")};
  const Waveform noise = fixture_wav("noise.wav");
  auto make = [&](std::size_t k) {
    const auto& src = speech[k % 2].samples();
    const double gain = 0.8 + 0.1 * static_cast<double>(k % 3);
    std::vector<double> clean(layout.samples), n(layout.samples);
    for (std::size_t i = 0; i < layout.samples; ++i) {
      clean[i] = gain * src[(i + 997 * (k / 2)) % src.size()];
      n[i] = noise.samples()[(i + 1601 * k) % noise.size()];
    }
    Waveform c(std::move(clean), kDefaultSampleRate);
    auto noisy = mix_at_snr(c, Waveform(std::move(n), kDefaultSampleRate), layout.snr_db).waveform;
    return std::pair{c, noisy};
  };
  auto emit = [&](const std::string& split, const std::string& speaker, std::size_t count, std::size_t base) {
    const fs::path clean_dir = root / ("clean_" + split + "_wav");
    const fs::path noisy_dir = root / ("noisy_" + split + "_wav");
    fs::create_directories(clean_dir);
    fs::create_directories(noisy_dir);
    for (std::size_t i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%s_%03zu.wav", speaker.c_str(), i + 1);
      auto [c, n] = make(base + i);
      write_wav(clean_dir / name, c, WavSampleFormat::float32);
      write_wav(noisy_dir / name, n, WavSampleFormat::float32);
    }
  };
  emit("trainset", "p226", layout.train, 0);
  emit("testset", "p232", layout.test, layout.train);
}

GradCheck check_gradient(const std::function<double(std::span<const double>)>& f, std::vector<double> x,
                         std::span<const double> analytic, std::span<const std::size_t> coords, double h) {
  std::vector<double> numeric(coords.size());
  for (std::size_t j = 0; j < coords.size(); ++j) {
    const std::size_t i = coords[j];
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    numeric[j] = (up - down) / (2.0 * h);
  }
  double scale = 0.0;
  for (double v : numeric) scale = std::max(scale, std::abs(v));
  const double floor = 1e-3 * scale;
  GradCheck out;
  out.checked = coords.size();
  for (std::size_t j = 0; j < coords.size(); ++j) {
    const double a = analytic[coords[j]], n = numeric[j];
    const double denom = std::max({std::abs(a), std::abs(n), floor, 1e-300});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(a - n) / denom);
  }
  return out;
}

std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n, std::size_t count) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < std::min(count, n); ++i) {
    std::swap(idx[i], idx[i + rng.below(n - i)]);
  }
  idx.resize(std::min(count, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace pfpl::testing
