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
#include <string>
#include <unordered_map>
#include <vector>

namespace pfpl {

/// A named float32 parameter tensor. Parameters live in float32 so that a
/// checkpoint round trip is bitwise exact; arithmetic happens in double.
struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;

  std::size_t size() const { return values.size(); }
};

class ParameterSet {
 public:
  Parameter& add(std::string name, std::vector<std::size_t> shape, float fill = 0.0f);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  const Parameter* find(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;

  std::size_t count() const { return params_.size(); }
  std::size_t total_size() const;

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  bool operator==(const ParameterSet& other) const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Gradient buffers parallel to a ParameterSet (same order, same sizes).
struct Gradients {
  std::vector<std::vector<double>> values;

  static Gradients zeros_like(const ParameterSet& params);
  std::vector<double>& operator[](std::size_t i) { return values[i]; }
  const std::vector<double>& operator[](std::size_t i) const { return values[i]; }
  void scale(double factor);
  double global_norm() const;
  void add(const Gradients& other);
};

/// Converts a float parameter to a double working copy.
std::vector<double> to_double(const Parameter& p);

}  // namespace pfpl
