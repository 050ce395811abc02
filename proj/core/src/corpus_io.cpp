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

#include "mtltag/corpus_io.hpp"

#include <fstream>
#include <sstream>

#include "mtltag/error.hpp"

namespace mtltag {
namespace {

std::vector<std::string_view> split_columns(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i == line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    cols.push_back(line.substr(start, i - start));
  }
  return cols;
}

}  // namespace

std::size_t Corpus::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::size_t ColumnSpec::max_column() const noexcept {
  std::size_t top = token_column;
  for (const auto& [task, col] : label_columns) top = std::max(top, col);
  return top;
}

Corpus parse_conll(std::istream& in, const ColumnSpec& columns) {
  Corpus corpus;
  Sentence current;
  std::string line;
  std::size_t line_no = 0;
  const std::size_t needed = columns.max_column() + 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cols = split_columns(line);
    if (cols.empty()) {
      if (!current.empty()) corpus.sentences.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (cols.size() < needed) {
      throw DataError("line " + std::to_string(line_no) + ": expected at least " +
                      std::to_string(needed) + " columns, found " +
                      std::to_string(cols.size()));
    }
    Token token;
    token.surface = std::string(cols[columns.token_column]);
    for (const auto& [task, col] : columns.label_columns) {
      token.labels.emplace(task, std::string(cols[col]));
    }
    current.push_back(std::move(token));
  }
  if (!current.empty()) corpus.sentences.push_back(std::move(current));
  return corpus;
}

Corpus parse_conll(std::string_view text, const ColumnSpec& columns) {
  std::istringstream in{std::string(text)};
  return parse_conll(in, columns);
}

Corpus read_conll_file(const std::filesystem::path& path, const ColumnSpec& columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CoNLL file " + path.string());
  try {
    return parse_conll(in, columns);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_conll(std::ostream& out, const Corpus& corpus, std::span<const std::string> tasks) {
  for (const auto& sentence : corpus.sentences) {
    for (const auto& token : sentence) {
      out << token.surface;
      for (const auto& task : tasks) out << '\t' << token.labels.at(task);
      out << '\n';
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------- vocabulary

Vocabulary Vocabulary::with_specials() {
  Vocabulary v;
  v.add(kPadToken);
  v.add(kUnkToken);
  v.has_specials_ = true;
  return v;
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> entries, bool has_specials) {
  Vocabulary v;
  for (auto& e : entries) {
    if (v.find(e)) throw DataError("duplicate vocabulary entry '" + e + "'");
    v.add(e);
  }
  v.has_specials_ = has_specials;
  if (has_specials && (v.size() < 2 || v.at(kPad) != kPadToken || v.at(kUnk) != kUnkToken)) {
    throw DataError("vocabulary does not start with the PAD/UNK entries");
  }
  return v;
}

int Vocabulary::add(std::string_view entry) {
  if (auto found = find(entry)) return *found;
  const int id = static_cast<int>(entries_.size());
  entries_.emplace_back(entry);
  index_.emplace(entries_.back(), id);
  return id;
}

std::optional<int> Vocabulary::find(std::string_view entry) const {
  const auto it = index_.find(std::string(entry));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::lookup(std::string_view word) const {
  if (auto exact = find(word)) return *exact;
  if (auto lower = find(lowercase(word))) return *lower;
  return kUnk;
}

int Vocabulary::index(std::string_view entry) const {
  if (auto found = find(entry)) return *found;
  throw DataError("unknown label '" + std::string(entry) + "'");
}

// --------------------------------------------------------------------- utf-8

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if ((lead & 0xE0) == 0xC0) {
      len = 2;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
    } else if ((lead & 0xF8) == 0xF0) {
      len = 4;
    }
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto c = static_cast<unsigned char>(out[i]);
    if (c >= 'A' && c <= 'Z') {
      out[i] = static_cast<char>(c + 32);
    } else if (c == 0xC3 && i + 1 < out.size()) {
      auto next = static_cast<unsigned char>(out[i + 1]);
      if (next >= 0x80 && next <= 0x9E && next != 0x97) out[i + 1] = static_cast<char>(next + 32);
      ++i;
    }
  }
  return out;
}

}  // namespace mtltag
