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
#include <optional>
#include <string>
#include <vector>

#include "pfpl/complex_unet.hpp"
#include "pfpl/tensor_archive.hpp"

namespace pfpl {

/// Adam moments in float32, parallel to the model's ParameterSet.
struct OptimizerState {
  std::size_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  static OptimizerState zeros_like(const ParameterSet& params);
  bool operator==(const OptimizerState&) const = default;
};

struct LoadedCheckpoint {
  MaskEstimator model;
  std::optional<OptimizerState> optimizer;
  std::size_t step = 0;
  std::string config_hash;
};

/// Model archive: meta kind=model, model_config, step, config_hash, followed
/// by the parameter tensors and, optionally, "adam.m.<name>"/"adam.v.<name>".
void save_checkpoint(const std::filesystem::path& path, const MaskEstimator& model,
                     const OptimizerState* optimizer, std::size_t step, const std::string& config_hash = "",
                     const ArchiveWriteOptions& options = {});

/// Bad magic -> FormatError, other version -> VersionError, truncation or a
/// tensor that disagrees with the embedded config -> IntegrityError.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pfpl
