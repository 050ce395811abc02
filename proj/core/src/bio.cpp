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

#include "mtltag/bio.hpp"

#include <optional>

#include "mtltag/error.hpp"

namespace mtltag {
namespace {

std::optional<BioViolationKind> check(const BioLabel* previous, const BioLabel& current) {
  if (current.prefix != BioPrefix::I) return std::nullopt;
  if (previous == nullptr) return BioViolationKind::InsideAtStart;
  if (previous->prefix == BioPrefix::O) return BioViolationKind::InsideAfterOutside;
  if (previous->cls != current.cls) return BioViolationKind::InsideClassChange;
  return std::nullopt;
}

}  // namespace

BioLabel BioLabel::parse(std::string_view text) {
  if (text == "O") return outside();
  if (text.size() >= 3 && text[1] == '-' && (text[0] == 'B' || text[0] == 'I')) {
    return {text[0] == 'B' ? BioPrefix::B : BioPrefix::I, std::string(text.substr(2))};
  }
  throw DataError("not a BIO label: '" + std::string(text) + "'");
}

std::string BioLabel::str() const {
  switch (prefix) {
    case BioPrefix::B:
      return "B-" + cls;
    case BioPrefix::I:
      return "I-" + cls;
    case BioPrefix::O:
      break;
  }
  return "O";
}

std::vector<BioLabel> parse_bio_sequence(std::span<const std::string> labels) {
  std::vector<BioLabel> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    try {
      out.push_back(BioLabel::parse(labels[i]));
    } catch (const DataError& e) {
      throw DataError("index " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<BioViolation> validate_bio(std::span<const BioLabel> labels) {
  std::vector<BioViolation> out;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (auto kind = check(k == 0 ? nullptr : &labels[k - 1], labels[k])) {
      out.push_back({k, *kind});
    }
  }
  return out;
}

std::vector<BioViolation> validate_bio(std::span<const std::string> labels) {
  const auto parsed = parse_bio_sequence(labels);
  return validate_bio(std::span<const BioLabel>(parsed));
}

std::vector<BioLabel> correct_bio(std::span<const BioLabel> labels, BioRepair variant) {
  std::vector<BioLabel> out(labels.begin(), labels.end());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!check(k == 0 ? nullptr : &out[k - 1], out[k])) continue;
    if (variant == BioRepair::ToOutside) {
      out[k] = BioLabel::outside();
    } else {
      out[k].prefix = BioPrefix::B;
    }
  }
  return out;
}

std::vector<std::string> correct_bio(std::span<const std::string> labels, BioRepair variant) {
  const auto parsed = parse_bio_sequence(labels);
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const auto& l : correct_bio(std::span<const BioLabel>(parsed), variant)) {
    out.push_back(l.str());
  }
  return out;
}

}  // namespace mtltag
