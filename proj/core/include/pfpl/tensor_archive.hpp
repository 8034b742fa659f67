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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pfpl {

/// Binary container for named float32 tensors plus string metadata.
///
/// Layout (all integers little-endian):
///
///     "PFPL"                      4-byte magic
///     u32 version                 currently 1
///     u32 meta_count
///       { u32 key_len, key, u32 value_len, value } * meta_count
///     u32 tensor_count
///       { u32 name_len, name, u32 ndim, u64 dim * ndim,
///         float32 * prod(dim) } * tensor_count
///     u64 FNV-1a 64 checksum of every preceding byte
inline constexpr char kArchiveMagic[4] = {'P', 'F', 'P', 'L'};
inline constexpr std::uint32_t kArchiveVersion = 1;

struct ArchiveTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;
};

struct TensorArchive {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<ArchiveTensor> tensors;

  void set_meta(std::string key, std::string value);
  std::optional<std::string> meta_value(std::string_view key) const;
  /// Throws `IntegrityError` when the key is missing.
  const std::string& require_meta(std::string_view key) const;
  const ArchiveTensor* find(std::string_view name) const;
};

std::vector<unsigned char> encode_archive(const TensorArchive& archive);

/// Bad magic -> FormatError, other version -> VersionError, truncation or
/// checksum mismatch -> IntegrityError.
TensorArchive decode_archive(std::span<const unsigned char> bytes, std::string_view source = "archive");

struct ArchiveWriteOptions {
  /// Test hook: abort after writing this many bytes of the temporary file.
  std::optional<std::size_t> fail_after_bytes;
};

/// Writes to a sibling temporary file, validates it by decoding it back, then
/// renames over `path`. On failure the temporary file is removed and any
/// existing file at `path` is left untouched.
void write_archive_atomic(const std::filesystem::path& path, const TensorArchive& archive,
                          const ArchiveWriteOptions& options = {});

TensorArchive read_archive(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace pfpl
