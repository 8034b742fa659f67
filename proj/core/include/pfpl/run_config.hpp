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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pfpl/complex_unet.hpp"
#include "pfpl/dsp.hpp"
#include "pfpl/losses.hpp"
#include "pfpl/trainer.hpp"

namespace pfpl {

/// Flat `key = value` settings with dotted section prefixes. Later merges
/// override earlier ones; unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  /// Every known key with its default value, in file order.
  static const std::vector<std::pair<std::string, std::string>>& defaults();

  void merge_file(const std::filesystem::path& path);
  void merge_text(std::string_view text, std::string_view source = "config");
  void set(const std::string& key, std::string value);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string serialize() const;
  /// Writes `run_config.resolved` into `dir`.
  void write_resolved(const std::filesystem::path& dir) const;

  StftConfig stft() const;
  ModelConfig model() const;
  LossSpec loss(std::shared_ptr<const PhoneticEncoder> encoder) const;
  TrainConfig train(std::shared_ptr<const PhoneticEncoder> encoder) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace pfpl
