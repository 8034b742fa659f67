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

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pfpl/dsp.hpp"

namespace pfpl {

/// Runs an external P.862 tool as `<tool> +16000 <ref.wav> <deg.wav>` and
/// reads the last numeric token of its stdout. Calls are serialized.
class PesqAdapter {
 public:
  explicit PesqAdapter(std::filesystem::path tool);

  const std::filesystem::path& tool() const { return tool_; }

  /// Empty when the tool is missing, fails, or prints no usable score;
  /// last_error() then says why.
  std::optional<double> score(const Waveform& reference, const Waveform& degraded) const;
  std::string last_error() const;

 private:
  std::filesystem::path tool_;
  mutable std::mutex mutex_;
  mutable std::string last_error_;
};

/// Parses the final numeric token of `text`.
std::optional<double> parse_last_number(const std::string& text);

}  // namespace pfpl
