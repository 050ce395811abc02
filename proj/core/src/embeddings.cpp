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

#include "mtltag/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>

#include "mtltag/error.hpp"

namespace mtltag {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i == line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view text, double& out) {
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

bool is_integer(std::string_view text) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

const std::vector<double>* EmbeddingSet::find(std::string_view word) const {
  if (auto it = vectors.find(std::string(word)); it != vectors.end()) return &it->second;
  if (auto it = vectors.find(lowercase(word)); it != vectors.end()) return &it->second;
  return nullptr;
}

EmbeddingSet parse_embeddings(std::istream& in, std::string_view source_name) {
  EmbeddingSet set;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cols = split_ws(line);
    if (cols.empty()) continue;
    if (first) {
      first = false;
      if (cols.size() == 2 && is_integer(cols[0]) && is_integer(cols[1])) continue;
    }
    const std::size_t dim = cols.size() - 1;
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no);
    if (dim == 0) throw DataError(where + ": word without vector");
    if (set.dim == 0) {
      set.dim = dim;
    } else if (dim != set.dim) {
      throw DataError(where + ": inconsistent dimension " + std::to_string(dim) +
                      ", expected " + std::to_string(set.dim));
    }
    std::vector<double> vec(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_double(cols[k + 1], vec[k])) {
        throw DataError(where + ": malformed number '" + std::string(cols[k + 1]) + "'");
      }
    }
    set.vectors.insert_or_assign(std::string(cols[0]), std::move(vec));
  }
  if (set.dim > 0) set.source_dims = {set.dim};
  return set;
}

EmbeddingSet read_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  return parse_embeddings(in, path.string());
}

EmbeddingSet concatenate_embeddings(std::span<const EmbeddingSet> sources,
                                    std::span<const std::string> source_names) {
  if (sources.empty()) return {};
  if (sources.size() == 1) return sources.front();

  std::set<std::string> common;
  for (const auto& [word, vec] : sources.front().vectors) common.insert(word);
  for (std::size_t i = 1; i < sources.size(); ++i) {
    std::set<std::string> next;
    for (const auto& word : common) {
      if (sources[i].contains(word)) next.insert(word);
    }
    if (next.empty()) {
      std::string left;
      for (std::size_t k = 0; k < i; ++k) {
        if (k) left += ", ";
        left += k < source_names.size() ? source_names[k] : "#" + std::to_string(k);
      }
      const std::string right =
          i < source_names.size() ? source_names[i] : "#" + std::to_string(i);
      throw DataError("empty intersection of embedding vocabularies: " + left + " and " + right);
    }
    common = std::move(next);
  }

  EmbeddingSet out;
  for (const auto& s : sources) {
    out.dim += s.dim;
    out.source_dims.push_back(s.dim);
  }
  for (const auto& word : common) {
    std::vector<double> vec;
    vec.reserve(out.dim);
    for (const auto& s : sources) {
      const auto& part = s.vectors.at(word);
      vec.insert(vec.end(), part.begin(), part.end());
    }
    out.vectors.emplace(word, std::move(vec));
  }
  return out;
}

EmbeddingSet build_embedding_set(std::span<const std::filesystem::path> files) {
  std::vector<EmbeddingSet> sources;
  std::vector<std::string> names;
  for (const auto& f : files) {
    sources.push_back(read_embedding_file(f));
    names.push_back(f.string());
  }
  return concatenate_embeddings(sources, names);
}

EmbeddingSet prune_embeddings(const EmbeddingSet& embeddings,
                              std::span<const Corpus* const> corpora) {
  EmbeddingSet out;
  out.dim = embeddings.dim;
  out.source_dims = embeddings.source_dims;
  for (const Corpus* corpus : corpora) {
    for (const auto& sentence : corpus->sentences) {
      for (const auto& token : sentence) {
        if (auto it = embeddings.vectors.find(token.surface); it != embeddings.vectors.end()) {
          out.vectors.insert(*it);
        } else if (auto lower = embeddings.vectors.find(lowercase(token.surface));
                   lower != embeddings.vectors.end()) {
          out.vectors.insert(*lower);
        }
      }
    }
  }
  return out;
}

void write_embeddings(std::ostream& out, const EmbeddingSet& embeddings) {
  out << std::setprecision(17);
  for (const auto& [word, vec] : embeddings.vectors) {
    out << word;
    for (double v : vec) out << ' ' << v;
    out << '\n';
  }
}

}  // namespace mtltag
