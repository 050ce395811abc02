// Copyright 2026 The mtltag Authors
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

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string_view>

#include "mtltag/corpus_io.hpp"

namespace mtltag {

// Binary corpus cache, little-endian throughout:
//
//   magic    8 bytes  "MTLTCRPS"
//   version  u32      kCorpusCacheVersion
//   sections repeated { tag u32, length u64, payload[length] }
//
//   tag 1  source:    size u64, fnv1a64 u64, token column u64,
//                     count u32, { task str, column u64 } * count
//   tag 2  vocab:     words u32, str * words,
//                     tasks u32, { name str, labels u32, str * labels } * tasks
//   tag 3  sentences: count u64, { length u32, { word u32, label u32 * tasks } * length }
//
// str is { length u32, bytes }.

inline constexpr std::uint32_t kCorpusCacheVersion = 1;

struct SourceFingerprint {
  std::uint64_t size = 0;
  std::uint64_t hash = 0;

  bool operator==(const SourceFingerprint&) const = default;
};

std::uint64_t fnv1a64(std::string_view bytes);
SourceFingerprint fingerprint_file(const std::filesystem::path& path);

void write_corpus_cache(std::ostream& out, const Corpus& corpus, const ColumnSpec& columns,
                        const SourceFingerprint& source);

/// nullopt when the cache describes a different source or column layout.
/// Throws DataError on malformed or unsupported files.
std::optional<Corpus> read_corpus_cache(std::istream& in, const ColumnSpec& columns,
                                        const SourceFingerprint& source);

/// Parses `source`, going through a cache file under cache_dir when given.
Corpus load_corpus(const std::filesystem::path& source, const ColumnSpec& columns,
                   const std::optional<std::filesystem::path>& cache_dir);

std::filesystem::path corpus_cache_path(const std::filesystem::path& source,
                                        const ColumnSpec& columns,
                                        const std::filesystem::path& cache_dir);

}  // namespace mtltag
