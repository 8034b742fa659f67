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

#include "pfpl/pesq_adapter.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <sstream>

#include "pfpl/error.hpp"
#include "pfpl/log.hpp"
#include "pfpl/wav_io.hpp"

extern char** environ;

namespace pfpl {

namespace {

std::atomic<unsigned> temp_counter{0};

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("pfpl-pesq-" + std::to_string(::getpid()) + "-" + std::to_string(temp_counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

struct ProcessResult {
  int status = -1;
  std::string output;
};

ProcessResult run_capture(const std::vector<std::string>& args) {
  int fds[2];
  if (::pipe(fds) != 0) throw IoError("pipe() failed");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, fds[0]);
  posix_spawn_file_actions_addclose(&actions, fds[1]);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);

  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  pid_t pid = 0;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(fds[1]);
  ProcessResult result;
  if (rc != 0) {
    ::close(fds[0]);
    result.status = 127;
    return result;
  }
  std::array<char, 4096> buf{};
  ssize_t n = 0;
  while ((n = ::read(fds[0], buf.data(), buf.size())) > 0) result.output.append(buf.data(), static_cast<std::size_t>(n));
  ::close(fds[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  result.status = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
  return result;
}

}  // namespace

std::optional<double> parse_last_number(const std::string& text) {
  std::istringstream in(text);
  std::string token;
  std::optional<double> last;
  while (in >> token) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(v)) last = v;
  }
  return last;
}

PesqAdapter::PesqAdapter(std::filesystem::path tool) : tool_(std::move(tool)) {}

std::string PesqAdapter::last_error() const {
  std::lock_guard lock(mutex_);
  return last_error_;
}

std::optional<double> PesqAdapter::score(const Waveform& reference, const Waveform& degraded) const {
  std::lock_guard lock(mutex_);
  last_error_.clear();
  try {
    TempDir dir;
    const auto ref = dir.path / "ref.wav";
    const auto deg = dir.path / "deg.wav";
    write_wav(ref, resample(reference, kDefaultSampleRate));
    write_wav(deg, resample(degraded, kDefaultSampleRate));
    const auto result = run_capture({tool_.string(), "+16000", ref.string(), deg.string()});
    if (result.status != 0) {
      last_error_ = "PESQ tool '" + tool_.string() + "' exited with status " + std::to_string(result.status);
      return std::nullopt;
    }
    const auto value = parse_last_number(result.output);
    if (!value) {
      last_error_ = "PESQ tool '" + tool_.string() + "' printed no numeric score";
      return std::nullopt;
    }
    if (*value < -0.5 || *value > 4.5) {
      last_error_ = "PESQ tool '" + tool_.string() + "' printed out-of-range score " + std::to_string(*value);
      return std::nullopt;
    }
    return value;
  } catch (const std::exception& e) {
    last_error_ = std::string("PESQ adapter failed: ") + e.what();
    return std::nullopt;
  }
}

}  // namespace pfpl
