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

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtltag/corpus_io.hpp"

namespace mtltag {

/// Word vectors of one fixed dimension, possibly the concatenation of
/// several sources (source_dims lists the segment widths in order).
struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<std::size_t> source_dims;
  std::map<std::string, std::vector<double>> vectors;

  std::size_t size() const noexcept { return vectors.size(); }
  bool contains(std::string_view word) const { return vectors.contains(std::string(word)); }
  /// Exact match, then lowercase match; nullptr when neither exists.
  const std::vector<double>* find(std::string_view word) const;

  bool operator==(const EmbeddingSet&) const = default;
};

/// One word plus whitespace-separated floats per line. A leading
/// "<count> <dim>" header line is detected and skipped.
EmbeddingSet parse_embeddings(std::istream& in, std::string_view source_name);
EmbeddingSet read_embedding_file(const std::filesystem::path& path);

/// Vocabulary is the intersection of the sources; each vector is the
/// concatenation of the source vectors in the given order.
EmbeddingSet concatenate_embeddings(std::span<const EmbeddingSet> sources,
                                    std::span<const std::string> source_names);
EmbeddingSet build_embedding_set(std::span<const std::filesystem::path> files);

/// Keeps only vectors reachable (exact or lowercase) from corpus tokens.
EmbeddingSet prune_embeddings(const EmbeddingSet& embeddings,
                              std::span<const Corpus* const> corpora);

/// Text format without header, readable by parse_embeddings.
void write_embeddings(std::ostream& out, const EmbeddingSet& embeddings);

}  // namespace mtltag
