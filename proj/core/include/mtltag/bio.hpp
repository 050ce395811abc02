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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtltag {

enum class BioPrefix { B, I, O };

struct BioLabel {
  BioPrefix prefix = BioPrefix::O;
  std::string cls;  // empty iff prefix is O

  static BioLabel outside() { return {}; }
  static BioLabel parse(std::string_view text);
  std::string str() const;

  bool operator==(const BioLabel&) const = default;
};

enum class BioViolationKind { InsideAtStart, InsideAfterOutside, InsideClassChange };

struct BioViolation {
  std::size_t index;
  BioViolationKind kind;

  bool operator==(const BioViolation&) const = default;
};

/// An I- label is invalid at the start, after O, or after a label of a
/// different class.
std::vector<BioViolation> validate_bio(std::span<const BioLabel> labels);
/// Parses each string first; an unparseable label throws DataError naming its index.
std::vector<BioViolation> validate_bio(std::span<const std::string> labels);

enum class BioRepair {
  ToOutside,  // invalid labels become O, re-checked left to right
  ToBegin,    // the first invalid I- of a run becomes B- of the same class
};

std::vector<BioLabel> correct_bio(std::span<const BioLabel> labels, BioRepair variant);
std::vector<std::string> correct_bio(std::span<const std::string> labels, BioRepair variant);

std::vector<BioLabel> parse_bio_sequence(std::span<const std::string> labels);

}  // namespace mtltag
