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

#include "pfpl/wav_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "pfpl/error.hpp"
#include "pfpl/log.hpp"

namespace pfpl {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file" + where);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) throw FormatError("truncated fmt chunk" + where);
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (available < 26) throw FormatError("truncated extensible fmt chunk" + where);
        format = read_u16(chunk + 32);  // first two bytes of the subformat GUID
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
    }
    pos = body + size + (size & 1u);
  }
  if (format == 0) throw FormatError("missing fmt chunk" + where);
  if (data == nullptr) throw FormatError("missing data chunk" + where);
  if (channels != 1) {
    throw InvalidInput("only mono WAV files are supported; " + path.string() + " has " +
                       std::to_string(channels) + " channels");
  }

  std::vector<double> samples;
  if (format == kFormatPcm && bits == 16) {
    samples.resize(data_size / 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto v = static_cast<std::int16_t>(read_u16(data + 2 * i));
      samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    samples.resize(data_size / 4);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = static_cast<double>(std::bit_cast<float>(read_u32(data + 4 * i)));
    }
  } else {
    throw FormatError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits)" + where);
  }
  return Waveform(std::move(samples), static_cast<int>(rate));
}

Waveform load_wav(const std::filesystem::path& path, int target_rate) {
  Waveform w = read_wav(path);
  if (w.sample_rate() != target_rate) {
    log_warning(path.string() + ": resampling " + std::to_string(w.sample_rate()) + " Hz -> " +
                std::to_string(target_rate) + " Hz");
    w = resample(w, target_rate);
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w, WavSampleFormat format) {
  const bool is_float = format == WavSampleFormat::float32;
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint16_t block = bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(w.size() * block);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, is_float ? kFormatFloat : kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate()));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate()) * block);
  put_u16(out, block);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : w.samples()) {
    if (is_float) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
    } else {
      const double clipped = std::clamp(s, -1.0, 1.0);
      const auto v = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
      put_u16(out, static_cast<std::uint16_t>(v));
    }
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write WAV file: " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace pfpl
