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

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mtltag {

struct Token {
  std::string surface;
  std::map<std::string, std::string> labels;  // task name -> label

  bool operator==(const Token&) const = default;
};

using Sentence = std::vector<Token>;

struct Corpus {
  std::vector<Sentence> sentences;

  std::size_t token_count() const noexcept;
  bool operator==(const Corpus&) const = default;
};

/// Which whitespace-separated column holds the token and which hold labels.
struct ColumnSpec {
  std::size_t token_column = 0;
  std::map<std::string, std::size_t> label_columns;

  std::size_t max_column() const noexcept;
  bool operator==(const ColumnSpec&) const = default;
};

/// Blank lines separate sentences; runs of blank lines collapse into a
/// single boundary. Throws DataError naming the line on short rows.
Corpus parse_conll(std::istream& in, const ColumnSpec& columns);
Corpus parse_conll(std::string_view text, const ColumnSpec& columns);
Corpus read_conll_file(const std::filesystem::path& path, const ColumnSpec& columns);

/// Writes token then the labels of `tasks` in order, tab separated, with a
/// blank line after every sentence.
void write_conll(std::ostream& out, const Corpus& corpus, std::span<const std::string> tasks);

/// Bijective string <-> index map. Word and character vocabularies reserve
/// index 0 for PAD and 1 for UNK; label vocabularies reserve nothing.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::string_view kPadToken = "<PAD>";
  static constexpr std::string_view kUnkToken = "<UNK>";

  Vocabulary() = default;
  static Vocabulary with_specials();
  static Vocabulary from_entries(std::vector<std::string> entries, bool has_specials);

  int add(std::string_view entry);
  std::optional<int> find(std::string_view entry) const;
  /// Exact match, then lowercased match, then UNK. Only for vocabularies
  /// with specials.
  int lookup(std::string_view word) const;
  /// Throws DataError for entries that are not present.
  int index(std::string_view entry) const;

  const std::string& at(int index) const { return entries_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const noexcept { return entries_.size(); }
  bool has_specials() const noexcept { return has_specials_; }
  const std::vector<std::string>& entries() const noexcept { return entries_; }

  bool operator==(const Vocabulary& other) const { return entries_ == other.entries_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> index_;
  bool has_specials_ = false;
};

/// Splits UTF-8 text into code point substrings. Invalid bytes become
/// single-byte pieces.
std::vector<std::string> utf8_chars(std::string_view text);
/// ASCII and Latin-1 supplement lowercase.
std::string lowercase(std::string_view text);

}  // namespace mtltag
