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

#include <filesystem>

#include "pfpl/dsp.hpp"

namespace pfpl {

enum class WavSampleFormat { pcm16, float32 };

/// Reads a mono 16-bit PCM or 32-bit float WAV file at its native rate.
Waveform read_wav(const std::filesystem::path& path);

/// Reads a WAV file and resamples it to `target_rate` (with a warning) when
/// the native rate differs.
Waveform load_wav(const std::filesystem::path& path, int target_rate = kDefaultSampleRate);

/// PCM16 output clips to [-1, 1].
void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavSampleFormat format = WavSampleFormat::pcm16);

}  // namespace pfpl
