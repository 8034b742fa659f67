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

#include "pfpl/checkpoint.hpp"

#include <charconv>

#include "pfpl/error.hpp"
#include "pfpl/tensor.hpp"

namespace pfpl {

namespace {
constexpr const char* kMomentPrefix = "adam.m.";
constexpr const char* kVelocityPrefix = "adam.v.";

std::size_t parse_count(const std::string& s, const std::string& field) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IntegrityError("checkpoint field '" + field + "' is malformed: '" + s + "'");
  }
  return v;
}
}  // namespace

OptimizerState OptimizerState::zeros_like(const ParameterSet& params) {
  OptimizerState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.size(), 0.0f);
    s.v.emplace_back(p.size(), 0.0f);
  }
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const MaskEstimator& model, const OptimizerState* optimizer,
                     std::size_t step, const std::string& config_hash, const ArchiveWriteOptions& options) {
  const auto& params = model.parameters();
  TensorArchive a;
  a.set_meta("kind", "model");
  a.set_meta("model_config", model.config().serialize());
  a.set_meta("step", std::to_string(step));
  a.set_meta("config_hash", config_hash);
  a.set_meta("optimizer", optimizer != nullptr ? "adam" : "none");
  for (const auto& p : params) a.tensors.push_back({p.name, p.shape, p.values});
  if (optimizer != nullptr) {
    require<ShapeError>(optimizer->m.size() == params.count() && optimizer->v.size() == params.count(),
                        "optimizer state does not match the model parameters");
    a.set_meta("optimizer_step", std::to_string(optimizer->step));
    for (std::size_t i = 0; i < params.count(); ++i) {
      a.tensors.push_back({kMomentPrefix + params[i].name, params[i].shape, optimizer->m[i]});
      a.tensors.push_back({kVelocityPrefix + params[i].name, params[i].shape, optimizer->v[i]});
    }
  }
  write_archive_atomic(path, a, options);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto a = read_archive(path);
  const auto& kind = a.require_meta("kind");
  if (kind != "model") throw FormatError(path.string() + " holds a '" + kind + "' archive, not a model checkpoint");
  ModelConfig cfg;
  try {
    cfg = ModelConfig::parse(a.require_meta("model_config"));
  } catch (const ConfigError& e) {
    throw IntegrityError(std::string("checkpoint model_config is invalid: ") + e.what());
  }
  auto params = MaskEstimator::allocate_parameters(cfg);
  for (auto& p : params) {
    const auto* t = a.find(p.name);
    if (t == nullptr) throw IntegrityError("checkpoint is missing tensor '" + p.name + "'");
    if (t->shape != p.shape) {
      throw IntegrityError("checkpoint tensor '" + p.name + "' has shape " + format_shape(t->shape) +
                           " but the embedded config implies " + format_shape(p.shape));
    }
    p.values = t->values;
  }

  std::optional<OptimizerState> opt;
  if (a.meta_value("optimizer").value_or("none") == "adam") {
    OptimizerState s;
    s.step = parse_count(a.require_meta("optimizer_step"), "optimizer_step");
    for (const auto& p : params) {
      const auto* m = a.find(kMomentPrefix + p.name);
      const auto* v = a.find(kVelocityPrefix + p.name);
      if (m == nullptr || v == nullptr) throw IntegrityError("checkpoint is missing optimizer state for '" + p.name + "'");
      if (m->shape != p.shape || v->shape != p.shape) {
        throw IntegrityError("checkpoint optimizer state for '" + p.name + "' has the wrong shape");
      }
      s.m.push_back(m->values);
      s.v.push_back(v->values);
    }
    opt = std::move(s);
  }
  LoadedCheckpoint out{MaskEstimator(cfg, std::move(params)), std::move(opt),
                       parse_count(a.require_meta("step"), "step"), a.meta_value("config_hash").value_or("")};
  return out;
}

}  // namespace pfpl
