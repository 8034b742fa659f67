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

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace pfpl {

enum class LogLevel { info, warning };

using LogSink = std::function<void(LogLevel, std::string_view)>;

void log_info(std::string_view message);
void log_warning(std::string_view message);

/// Replaces the process-wide sink (stderr by default). Returns the old sink.
LogSink set_log_sink(LogSink sink);

/// Collects warnings for the lifetime of the object; used by tests.
class ScopedLogCapture {
 public:
  ScopedLogCapture();
  ~ScopedLogCapture();
  ScopedLogCapture(const ScopedLogCapture&) = delete;
  ScopedLogCapture& operator=(const ScopedLogCapture&) = delete;

  const std::vector<std::string>& warnings() const { return warnings_; }
  bool contains(std::string_view needle) const;

 private:
  LogSink previous_;
  std::vector<std::string> warnings_;
};

}  // namespace pfpl
