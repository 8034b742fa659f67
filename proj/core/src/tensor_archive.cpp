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

#include "pfpl/tensor_archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "pfpl/error.hpp"
#include "pfpl/tensor.hpp"

namespace pfpl {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  Reader(std::span<const unsigned char> bytes, std::string_view source)
      : bytes_(bytes), source_(source) {}

  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw IntegrityError(std::string(source_) + ": truncated while reading " + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  float f32() {
    const std::uint32_t bits = u32("tensor payload");
    return std::bit_cast<float>(bits);
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

}  // namespace

void TensorArchive::set_meta(std::string key, std::string value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  meta.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> TensorArchive::meta_value(std::string_view key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return std::nullopt;
}

const std::string& TensorArchive::require_meta(std::string_view key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw IntegrityError("archive is missing metadata key '" + std::string(key) + "'");
}

const ArchiveTensor* TensorArchive::find(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text) {
  return fnv1a64(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::vector<unsigned char> encode_archive(const TensorArchive& archive) {
  Writer w;
  w.raw(kArchiveMagic, 4);
  w.u32(kArchiveVersion);
  w.u32(static_cast<std::uint32_t>(archive.meta.size()));
  for (const auto& [k, v] : archive.meta) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(archive.tensors.size()));
  for (const auto& t : archive.tensors) {
    require<ShapeError>(t.values.size() == shape_volume(t.shape),
                        "tensor '" + t.name + "' value count does not match its shape");
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u64(d);
    for (float v : t.values) w.u32(std::bit_cast<std::uint32_t>(v));
  }
  const std::uint64_t checksum = fnv1a64(w.bytes());
  w.u64(checksum);
  return std::move(w.bytes());
}

TensorArchive decode_archive(std::span<const unsigned char> bytes, std::string_view source) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kArchiveMagic, 4) != 0) {
    throw FormatError(std::string(source) + ": bad magic (expected 'PFPL')");
  }
  Reader r(bytes.subspan(4), source);
  const std::uint32_t version = r.u32("version");
  if (version != kArchiveVersion) {
    throw VersionError(std::string(source) + ": unsupported format version " +
                       std::to_string(version) + " (expected " + std::to_string(kArchiveVersion) + ")");
  }
  TensorArchive archive;
  const std::uint32_t n_meta = r.u32("metadata count");
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str("metadata key");
    std::string v = r.str("metadata value");
    archive.meta.emplace_back(std::move(k), std::move(v));
  }
  const std::uint32_t n_tensors = r.u32("tensor count");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    ArchiveTensor t;
    t.name = r.str("tensor name");
    const std::uint32_t ndim = r.u32("tensor rank");
    if (ndim > 8) throw IntegrityError(std::string(source) + ": implausible rank for " + t.name);
    std::uint64_t volume = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const std::uint64_t dim = r.u64("tensor shape");
      t.shape.push_back(static_cast<std::size_t>(dim));
      volume *= dim;
    }
    if (volume > r.remaining() / 4) {
      throw IntegrityError(std::string(source) + ": truncated payload for tensor '" + t.name + "'");
    }
    t.values.resize(static_cast<std::size_t>(volume));
    for (auto& v : t.values) v = r.f32();
    archive.tensors.push_back(std::move(t));
  }
  const std::size_t body_end = 4 + r.pos();
  const std::uint64_t stored = r.u64("checksum");
  if (r.remaining() != 0) throw IntegrityError(std::string(source) + ": trailing bytes after checksum");
  if (stored != fnv1a64(bytes.first(body_end))) {
    throw IntegrityError(std::string(source) + ": checksum mismatch");
  }
  return archive;
}

void write_archive_atomic(const std::filesystem::path& path, const TensorArchive& archive,
                          const ArchiveWriteOptions& options) {
  const auto bytes = encode_archive(archive);
  std::random_device rd;
  auto tmp = path;
  tmp += ".tmp." + std::to_string(rd());
  const auto cleanup = [&] {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
  };
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot create temporary file " + tmp.string());
    std::size_t n = bytes.size();
    if (options.fail_after_bytes) n = std::min(n, *options.fail_after_bytes);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(n));
    os.flush();
    if (!os || n != bytes.size()) {
      os.close();
      cleanup();
      throw IoError("write interrupted for " + path.string());
    }
  }
  try {
    (void)read_archive(tmp);
  } catch (const Error& e) {
    cleanup();
    throw IoError("validation of written archive failed: " + std::string(e.what()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    cleanup();
    throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

TensorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_archive(bytes, path.string());
}

}  // namespace pfpl
