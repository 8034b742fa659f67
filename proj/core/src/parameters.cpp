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

#include "pfpl/parameters.hpp"

#include <bit>
#include <cmath>
#include <cstdint>

#include "pfpl/error.hpp"
#include "pfpl/tensor.hpp"

namespace pfpl {

Parameter& ParameterSet::add(std::string name, std::vector<std::size_t> shape, float fill) {
  require<ConfigError>(!index_.contains(name), "duplicate parameter name: " + name);
  index_.emplace(name, params_.size());
  Parameter p;
  p.name = std::move(name);
  p.values.assign(shape_volume(shape), fill);
  p.shape = std::move(shape);
  params_.push_back(std::move(p));
  return params_.back();
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw KeyError("unknown parameter: " + name);
  return it->second;
}

Parameter& ParameterSet::at(const std::string& name) { return params_[index_of(name)]; }
const Parameter& ParameterSet::at(const std::string& name) const { return params_[index_of(name)]; }

const Parameter* ParameterSet::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.shape != b.shape) return false;
    // bitwise comparison; NaN payloads compare by representation
    for (std::size_t j = 0; j < a.values.size(); ++j) {
      if (std::bit_cast<std::uint32_t>(a.values[j]) != std::bit_cast<std::uint32_t>(b.values[j]))
        return false;
    }
  }
  return true;
}

Gradients Gradients::zeros_like(const ParameterSet& params) {
  Gradients g;
  g.values.reserve(params.count());
  for (const auto& p : params) g.values.emplace_back(p.size(), 0.0);
  return g;
}

void Gradients::scale(double factor) {
  for (auto& v : values)
    for (auto& x : v) x *= factor;
}

double Gradients::global_norm() const {
  double s = 0.0;
  for (const auto& v : values)
    for (double x : v) s += x * x;
  return std::sqrt(s);
}

void Gradients::add(const Gradients& other) {
  require<ShapeError>(other.values.size() == values.size(), "gradient set mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require<ShapeError>(other.values[i].size() == values[i].size(), "gradient size mismatch");
    for (std::size_t j = 0; j < values[i].size(); ++j) values[i][j] += other.values[i][j];
  }
}

std::vector<double> to_double(const Parameter& p) {
  return std::vector<double>(p.values.begin(), p.values.end());
}

}  // namespace pfpl
