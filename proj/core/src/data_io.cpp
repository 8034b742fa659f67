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

#include "pfpl/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pfpl/error.hpp"
#include "pfpl/log.hpp"
#include "pfpl/wav_io.hpp"

namespace pfpl {

namespace fs = std::filesystem;

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

CorpusIndex::CorpusIndex(fs::path root, std::vector<CorpusEntry> entries)
    : root_(std::move(root)), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
}

bool CorpusIndex::contains(const std::string& id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const CorpusEntry& e, const std::string& key) { return e.id < key; });
  return it != entries_.end() && it->id == id;
}

const CorpusEntry& CorpusIndex::at(const std::string& id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const CorpusEntry& e, const std::string& key) { return e.id < key; });
  if (it == entries_.end() || it->id != id) throw KeyError("unknown utterance id '" + id + "'");
  return *it;
}

std::vector<CorpusEntry> CorpusIndex::split(Split s) const {
  std::vector<CorpusEntry> out;
  for (const auto& e : entries_) {
    if (e.split == s) out.push_back(e);
  }
  return out;
}

namespace {

bool is_wav(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".wav";
}

std::map<std::string, fs::path> wav_files(const fs::path& dir) {
  std::map<std::string, fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_wav(e.path())) files.emplace(e.path().filename().string(), e.path());
  }
  return files;
}

std::string replace_first(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

CorpusIndex scan_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("corpus root is not a directory: " + root.string());
  std::vector<fs::path> clean_dirs, noisy_dirs;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_directory()) continue;
    const auto name = e.path().filename().string();
    if (name.find("clean") != std::string::npos) clean_dirs.push_back(e.path());
    else if (name.find("noisy") != std::string::npos) noisy_dirs.push_back(e.path());
  }
  std::sort(clean_dirs.begin(), clean_dirs.end());

  std::vector<CorpusEntry> entries;
  std::vector<std::string> offenders;
  std::vector<fs::path> matched_noisy;
  for (const auto& cdir : clean_dirs) {
    const auto name = cdir.filename().string();
    const auto ndir = cdir.parent_path() / replace_first(name, "clean", "noisy");
    const auto clean_files = wav_files(cdir);
    const auto noisy_files = wav_files(ndir);
    if (fs::is_directory(ndir)) matched_noisy.push_back(ndir);
    const Split split = name.find("train") != std::string::npos ? Split::train : Split::test;
    for (const auto& [file, path] : clean_files) {
      auto it = noisy_files.find(file);
      if (it == noisy_files.end()) {
        offenders.push_back(path.string() + " (no noisy counterpart)");
        continue;
      }
      entries.push_back({fs::path(file).stem().string(), path, it->second, split});
    }
    for (const auto& [file, path] : noisy_files) {
      if (!clean_files.contains(file)) offenders.push_back(path.string() + " (no clean counterpart)");
    }
  }
  for (const auto& ndir : noisy_dirs) {
    if (std::find(matched_noisy.begin(), matched_noisy.end(), ndir) != matched_noisy.end()) continue;
    for (const auto& [file, path] : wav_files(ndir)) offenders.push_back(path.string() + " (no clean counterpart)");
  }
  if (!offenders.empty()) {
    std::string msg = "unpaired corpus files:";
    for (const auto& o : offenders) msg += "\n  " + o;
    throw PairingError(msg);
  }
  if (entries.empty()) throw EmptyCorpus("no clean/noisy pairs found under " + root.string());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].id == entries[i - 1].id) {
      throw PairingError("utterance id '" + entries[i].id + "' appears more than once: " +
                         entries[i - 1].clean.string() + " and " + entries[i].clean.string());
    }
  }
  return CorpusIndex(root, std::move(entries));
}

WavePair load_pair(const CorpusIndex& index, const std::string& id) {
  const auto& e = index.at(id);
  auto clean = load_wav(e.clean, kDefaultSampleRate);
  auto noisy = load_wav(e.noisy, kDefaultSampleRate);
  if (clean.size() != noisy.size()) {
    log_warning("utterance '" + id + "': clean has " + std::to_string(clean.size()) + " samples, noisy has " +
                std::to_string(noisy.size()) + "; zero padding the shorter one");
    const std::size_t n = std::max(clean.size(), noisy.size());
    auto pad = [n](const Waveform& w) {
      auto s = w.samples();
      s.resize(n, 0.0);
      return Waveform(std::move(s), w.sample_rate());
    };
    clean = pad(clean);
    noisy = pad(noisy);
  }
  return {std::move(clean), std::move(noisy)};
}

MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
  require(!clean.empty() && !noise.empty(), "mix_at_snr needs non-empty signals");
  require(clean.sample_rate() == noise.sample_rate(), "mix_at_snr needs equal sample rates");
  require(std::isfinite(snr_db), "mix_at_snr needs a finite SNR");
  const std::size_t n = clean.size();
  MixResult r;
  r.tiled = noise.size() < n;
  std::vector<double> nz(n);
  for (std::size_t i = 0; i < n; ++i) nz[i] = noise[i % noise.size()];
  double pc = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pc += clean[i] * clean[i];
    pn += nz[i] * nz[i];
  }
  require(pc > 0.0, "mix_at_snr: clean signal has zero power");
  require(pn > 0.0, "mix_at_snr: noise has zero power");
  r.gain = std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
  std::vector<double> mix(n);
  for (std::size_t i = 0; i < n; ++i) mix[i] = clean[i] + r.gain * nz[i];
  r.waveform = Waveform(std::move(mix), clean.sample_rate());
  return r;
}

std::string to_string(PadPolicy p) {
  switch (p) {
    case PadPolicy::reflect: return "reflect";
    case PadPolicy::zero: return "zero";
    case PadPolicy::drop_last: return "drop_last";
  }
  return "?";
}

PadPolicy pad_policy_from_string(const std::string& name) {
  if (name == "reflect") return PadPolicy::reflect;
  if (name == "zero") return PadPolicy::zero;
  if (name == "drop_last") return PadPolicy::drop_last;
  throw ConfigError("unknown pad policy '" + name + "' (expected reflect, zero or drop_last)");
}

void SegmentSpec::validate() const {
  require<ConfigError>(length > 0, "segment length must be positive");
  require<ConfigError>(hop > 0, "segment hop must be positive");
}

Waveform crop(const Waveform& w, std::size_t offset, std::size_t length, PadPolicy pad) {
  const auto& s = w.samples();
  const std::size_t n = s.size();
  std::vector<double> out(length, 0.0);
  const bool reflect = pad == PadPolicy::reflect && n >= 2;
  const std::size_t period = reflect ? 2 * (n - 1) : 0;
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t j = offset + i;
    if (j < n) {
      out[i] = s[j];
    } else if (reflect) {
      const std::size_t r = j % period;
      out[i] = s[r < n ? r : period - r];
    }
  }
  return Waveform(std::move(out), w.sample_rate());
}

std::vector<Waveform> segment(const Waveform& w, const SegmentSpec& spec) {
  spec.validate();
  std::vector<Waveform> out;
  const std::size_t n = w.size();
  std::size_t start = 0;
  while (start + spec.length <= n) {
    out.push_back(crop(w, start, spec.length, PadPolicy::zero));
    start += spec.hop;
  }
  const std::size_t covered = out.empty() ? 0 : (start - spec.hop) + spec.length;
  if (spec.pad != PadPolicy::drop_last && covered < n && start < n) out.push_back(crop(w, start, spec.length, spec.pad));
  return out;
}

}  // namespace pfpl
