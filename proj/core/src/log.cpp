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

#include "pfpl/log.hpp"

#include <iostream>
#include <mutex>

namespace pfpl {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& current_sink() {
  static LogSink sink = [](LogLevel level, std::string_view message) {
    std::cerr << (level == LogLevel::warning ? "WARNING: " : "") << message << '\n';
  };
  return sink;
}

void emit(LogLevel level, std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (current_sink()) current_sink()(level, message);
}

}  // namespace

void log_info(std::string_view message) { emit(LogLevel::info, message); }
void log_warning(std::string_view message) { emit(LogLevel::warning, message); }

LogSink set_log_sink(LogSink sink) {
  std::lock_guard lock(sink_mutex());
  LogSink old = std::move(current_sink());
  current_sink() = std::move(sink);
  return old;
}

ScopedLogCapture::ScopedLogCapture() {
  previous_ = set_log_sink([this](LogLevel level, std::string_view message) {
    if (level == LogLevel::warning) warnings_.emplace_back(message);
  });
}

ScopedLogCapture::~ScopedLogCapture() { set_log_sink(std::move(previous_)); }

bool ScopedLogCapture::contains(std::string_view needle) const {
  for (const auto& w : warnings_) {
    if (w.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace pfpl
