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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtltag/bio.hpp"

namespace mtltag {

// Argumentation labels are four-tuples (b, t, d, s) rendered as
// "B:P:1:Supp" or "O". The empty field is written as "⊥".

inline constexpr std::string_view kBottom = "⊥";

enum class ComponentType { None, Premise, Claim, MajorClaim };
enum class Stance { None, Support, Attack, For, Against };

std::string_view to_string(ComponentType type);  // "P", "C", "MC", "⊥"
std::string_view to_string(Stance stance);       // "Supp", "Att", "For", "Ag", "⊥"

struct AmLabel {
  BioPrefix bio = BioPrefix::O;
  ComponentType type = ComponentType::None;
  std::optional<int> distance;  // relative, in components; never 0
  Stance stance = Stance::None;

  static AmLabel outside() { return {}; }
  std::string str() const;

  bool operator==(const AmLabel&) const = default;
};

/// Maps corpus spellings onto the short names, e.g. Premise -> P,
/// Support -> Supp. Applied to the type and stance fields before parsing.
using AmAliases = std::map<std::string, std::string, std::less<>>;
const AmAliases& default_am_aliases();

/// Throws DataError when the text is malformed or the tuple violates an invariant.
AmLabel parse_am_label(std::string_view text, const AmAliases& aliases = default_am_aliases());
std::vector<AmLabel> parse_am_sequence(std::span<const std::string> labels,
                                       const AmAliases& aliases = default_am_aliases());
std::vector<std::string> render_am_sequence(std::span<const AmLabel> labels);

/// Description of the first violated tuple invariant, if any.
std::optional<std::string> am_invariant_violation(const AmLabel& label);

enum class Subtask { ACS, ACI, ARS, ARI };
Subtask parse_subtask(std::string_view name);
std::string_view to_string(Subtask subtask);

std::string derive_subtask_label(const AmLabel& label, Subtask subtask);
std::vector<std::string> derive_subtask(std::span<const AmLabel> labels, Subtask subtask);

/// A maximal B I* run. Indices are inclusive token positions; target is the
/// absolute index of the linked component within the document.
struct ComponentSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  ComponentType type = ComponentType::None;
  Stance stance = Stance::None;
  std::optional<int> distance;
  std::optional<std::size_t> target;

  std::size_t length() const noexcept { return end - start + 1; }
  bool operator==(const ComponentSpan&) const = default;
};

/// Requires a valid BIO structure and homogeneous components; throws
/// DataError otherwise (am_postprocess produces such input).
std::vector<ComponentSpan> components_from_labels(std::span<const AmLabel> labels);
std::vector<AmLabel> labels_from_components(std::span<const ComponentSpan> components,
                                            std::size_t length);

/// Repairs raw predictions into a valid structure:
///  1. BIO repair of the b field with the ToBegin variant;
///  2. per component, each of t, d, s set to its majority value;
///  3. links leaving the document are clamped to the nearest component,
///     never the component itself.
std::vector<AmLabel> am_postprocess(std::span<const AmLabel> labels);

/// target = index + distance; throws DataError when out of range.
std::vector<ComponentSpan> rel_to_abs_links(std::vector<ComponentSpan> components);
std::vector<ComponentSpan> abs_to_rel_links(std::vector<ComponentSpan> components);

/// Every structural problem found; empty for a valid document.
std::vector<std::string> validate_am_structure(std::span<const AmLabel> labels);

/// Drops the empty-alignment symbol and splits joined phonemes.
std::vector<std::string> alignment_phonemes(std::span<const std::string> predicted,
                                            std::string_view empty_symbol,
                                            std::string_view join_symbol);
/// The phonemes of alignment_phonemes joined by single spaces.
std::string strip_alignment_symbols(std::span<const std::string> predicted,
                                    std::string_view empty_symbol, std::string_view join_symbol);

}  // namespace mtltag
