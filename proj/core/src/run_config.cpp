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

#include "pfpl/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "pfpl/error.hpp"

namespace pfpl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& RunConfig::defaults() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"stft.window_length", "1024"},
      {"stft.hop_length", "256"},
      {"stft.window", "hann"},
      {"stft.centered", "true"},
      {"model.preset", "small10"},
      {"model.seed", "0"},
      {"model.checkpoint", ""},
      {"train.steps", "1000"},
      {"train.batch_size", "4"},
      {"train.lr", "0.0001"},
      {"train.beta1", "0.9"},
      {"train.beta2", "0.999"},
      {"train.eps", "1e-08"},
      {"train.seed", "0"},
      {"train.checkpoint_interval", "100"},
      {"train.crop_length", "16384"},
      {"train.crop_hop", "16384"},
      {"train.crop_pad", "reflect"},
      {"train.clip_norm", "5"},
      {"train.save_optimizer", "true"},
      {"train.resume", ""},
      {"train.checkpoint", ""},
      {"loss.name", "pfpl"},
      {"loss.mae_weight", "1"},
      {"loss.feature_weight", "1"},
      {"loss.aggregation", "mean"},
      {"encoder.source", "random:0"},
      {"encoder.tap", "context"},
      {"data.root", ""},
      {"output.dir", "out"},
      {"eval.pesq_tool", ""},
      {"analysis.losses", "mae,mse,wsdr,pfpl,pfpl_w"},
      {"run.deterministic", "true"},
  };
  return d;
}

RunConfig::RunConfig() {
  for (const auto& [k, v] : defaults()) values_[k] = v;
}

void RunConfig::set(const std::string& key, std::string value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = std::move(value);
}

void RunConfig::merge_text(std::string_view text, std::string_view source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = trim(std::string_view(stripped).substr(0, eq));
    const auto value = trim(std::string_view(stripped).substr(eq + 1));
    if (!values_.contains(key)) {
      throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": unknown config key '" + key + "'");
    }
    values_[key] = value;
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.string());
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const auto& s = get(key);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(key + " expects a number, got '" + s + "'");
  return v;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const auto& s = get(key);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(key + " expects a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::size_t RunConfig::get_size(const std::string& key) const { return static_cast<std::size_t>(get_u64(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  const auto& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + " expects true or false, got '" + s + "'");
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [k, unused] : defaults()) out += k + " = " + values_.at(k) + "\n";
  return out;
}

void RunConfig::write_resolved(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const auto path = dir / "run_config.resolved";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize();
  if (!out) throw IoError("failed while writing " + path.string());
}

StftConfig RunConfig::stft() const {
  StftConfig c;
  c.window_length = get_size("stft.window_length");
  c.hop_length = get_size("stft.hop_length");
  c.window = window_from_string(get("stft.window"));
  c.centered = get_bool("stft.centered");
  c.validate();
  return c;
}

ModelConfig RunConfig::model() const {
  auto m = ModelConfig::parse(get("model.preset"));
  m.bins = stft().bins();
  m.validate();
  return m;
}

LossSpec RunConfig::loss(std::shared_ptr<const PhoneticEncoder> encoder) const {
  LossSpec s;
  s.name = loss_from_string(get("loss.name"));
  s.mae_weight = get_double("loss.mae_weight");
  s.feature_weight = get_double("loss.feature_weight");
  const auto& agg = get("loss.aggregation");
  if (agg == "mean") s.aggregation = ChannelAggregation::mean;
  else if (agg == "sum") s.aggregation = ChannelAggregation::sum;
  else throw ConfigError("loss.aggregation expects mean or sum, got '" + agg + "'");
  if (s.needs_encoder()) s.encoder = std::move(encoder);
  s.validate();
  return s;
}

TrainConfig RunConfig::train(std::shared_ptr<const PhoneticEncoder> encoder) const {
  TrainConfig t;
  t.loss = loss(std::move(encoder));
  t.steps = get_size("train.steps");
  t.batch_size = get_size("train.batch_size");
  t.adam.lr = get_double("train.lr");
  t.adam.beta1 = get_double("train.beta1");
  t.adam.beta2 = get_double("train.beta2");
  t.adam.eps = get_double("train.eps");
  t.seed = get_u64("train.seed");
  t.checkpoint_interval = get_size("train.checkpoint_interval");
  t.crop.length = get_size("train.crop_length");
  t.crop.hop = get_size("train.crop_hop");
  t.crop.pad = pad_policy_from_string(get("train.crop_pad"));
  t.clip_norm = get_double("train.clip_norm");
  t.save_optimizer = get_bool("train.save_optimizer");
  t.stft = stft();
  t.deterministic = get_bool("run.deterministic");
  t.validate();
  return t;
}

}  // namespace pfpl
