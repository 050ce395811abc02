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

#include "mtltag/am_labels.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <tuple>

#include "mtltag/error.hpp"

namespace mtltag {
namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view resolve(std::string_view field, const AmAliases& aliases) {
  if (auto it = aliases.find(field); it != aliases.end()) return it->second;
  return field;
}

ComponentType parse_type(std::string_view text) {
  if (text == kBottom) return ComponentType::None;
  if (text == "P") return ComponentType::Premise;
  if (text == "C") return ComponentType::Claim;
  if (text == "MC") return ComponentType::MajorClaim;
  throw DataError("unknown component type '" + std::string(text) + "'");
}

Stance parse_stance(std::string_view text) {
  if (text == kBottom) return Stance::None;
  if (text == "Supp") return Stance::Support;
  if (text == "Att") return Stance::Attack;
  if (text == "For") return Stance::For;
  if (text == "Ag") return Stance::Against;
  throw DataError("unknown stance '" + std::string(text) + "'");
}

std::optional<int> parse_distance(std::string_view text) {
  if (text == kBottom) return std::nullopt;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  int value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw DataError("malformed distance '" + std::string(text) + "'");
  }
  return value;
}

bool is_premise_stance(Stance s) { return s == Stance::Support || s == Stance::Attack; }
bool is_claim_stance(Stance s) { return s == Stance::For || s == Stance::Against; }

// Majority vote; `before(a, b)` orders tied candidates, first wins.
template <typename T, typename Before>
std::optional<T> majority(const std::vector<T>& votes, Before before) {
  std::vector<std::pair<T, std::size_t>> tally;
  for (const T& v : votes) {
    auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& e) { return e.first == v; });
    if (it == tally.end()) {
      tally.emplace_back(v, 1);
    } else {
      ++it->second;
    }
  }
  if (tally.empty()) return std::nullopt;
  auto best = tally.begin();
  for (auto it = tally.begin() + 1; it != tally.end(); ++it) {
    if (it->second > best->second || (it->second == best->second && before(it->first, best->first))) {
      best = it;
    }
  }
  return best->first;
}

bool distance_before(int a, int b) {
  if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
  return a > b;  // positive first
}

template <typename E>
bool name_before(E a, E b) {
  return to_string(a) < to_string(b);
}

}  // namespace

std::string_view to_string(ComponentType type) {
  switch (type) {
    case ComponentType::Premise:
      return "P";
    case ComponentType::Claim:
      return "C";
    case ComponentType::MajorClaim:
      return "MC";
    case ComponentType::None:
      break;
  }
  return kBottom;
}

std::string_view to_string(Stance stance) {
  switch (stance) {
    case Stance::Support:
      return "Supp";
    case Stance::Attack:
      return "Att";
    case Stance::For:
      return "For";
    case Stance::Against:
      return "Ag";
    case Stance::None:
      break;
  }
  return kBottom;
}

std::string AmLabel::str() const {
  if (bio == BioPrefix::O) return "O";
  std::string out = bio == BioPrefix::B ? "B:" : "I:";
  out += to_string(type);
  out += ':';
  out += distance ? std::to_string(*distance) : std::string(kBottom);
  out += ':';
  out += to_string(stance);
  return out;
}

const AmAliases& default_am_aliases() {
  static const AmAliases aliases = {
      {"Premise", "P"}, {"Claim", "C"},  {"MajorClaim", "MC"}, {"Support", "Supp"},
      {"Attack", "Att"}, {"Against", "Ag"}, {"None", std::string(kBottom)},
  };
  return aliases;
}

std::optional<std::string> am_invariant_violation(const AmLabel& l) {
  if (l.bio == BioPrefix::O) {
    if (l.type != ComponentType::None || l.distance || l.stance != Stance::None) {
      return "outside label carries component fields";
    }
    return std::nullopt;
  }
  switch (l.type) {
    case ComponentType::None:
      return "component token without a type";
    case ComponentType::MajorClaim:
      if (l.distance || l.stance != Stance::None) return "major claim with a link or stance";
      break;
    case ComponentType::Claim:
      if (l.distance) return "claim with a distance";
      if (!is_claim_stance(l.stance)) return "claim stance must be For or Ag";
      break;
    case ComponentType::Premise:
      if (!l.distance) return "premise without a distance";
      if (*l.distance == 0) return "premise linking to itself";
      if (!is_premise_stance(l.stance)) return "premise stance must be Supp or Att";
      break;
  }
  return std::nullopt;
}

AmLabel parse_am_label(std::string_view text, const AmAliases& aliases) {
  if (text == "O") return AmLabel::outside();
  const auto fields = split(text, ':');
  if (fields.size() != 4) {
    throw DataError("AM label needs four ':'-separated fields: '" + std::string(text) + "'");
  }
  AmLabel label;
  if (fields[0] == "B") {
    label.bio = BioPrefix::B;
  } else if (fields[0] == "I") {
    label.bio = BioPrefix::I;
  } else if (fields[0] == "O") {
    label.bio = BioPrefix::O;
  } else {
    throw DataError("bad BIO field in AM label '" + std::string(text) + "'");
  }
  label.type = parse_type(resolve(fields[1], aliases));
  label.distance = parse_distance(fields[2]);
  label.stance = parse_stance(resolve(fields[3], aliases));
  if (auto problem = am_invariant_violation(label)) {
    throw DataError("invalid AM label '" + std::string(text) + "': " + *problem);
  }
  return label;
}

std::vector<AmLabel> parse_am_sequence(std::span<const std::string> labels,
                                       const AmAliases& aliases) {
  std::vector<AmLabel> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    try {
      out.push_back(parse_am_label(labels[i], aliases));
    } catch (const DataError& e) {
      throw DataError("index " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::string> render_am_sequence(std::span<const AmLabel> labels) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(l.str());
  return out;
}

// ------------------------------------------------------------------ subtasks

Subtask parse_subtask(std::string_view name) {
  if (name == "ACS" || name == "acs") return Subtask::ACS;
  if (name == "ACI" || name == "aci") return Subtask::ACI;
  if (name == "ARS" || name == "ars") return Subtask::ARS;
  if (name == "ARI" || name == "ari") return Subtask::ARI;
  throw ConfigError("unknown subtask '" + std::string(name) + "'");
}

std::string_view to_string(Subtask subtask) {
  switch (subtask) {
    case Subtask::ACS:
      return "ACS";
    case Subtask::ACI:
      return "ACI";
    case Subtask::ARS:
      return "ARS";
    case Subtask::ARI:
      return "ARI";
  }
  return "ACS";
}

std::string derive_subtask_label(const AmLabel& l, Subtask subtask) {
  if (l.bio == BioPrefix::O) return "O";
  const std::string prefix = l.bio == BioPrefix::B ? "B-" : "I-";
  switch (subtask) {
    case Subtask::ACS:
      return prefix + "Arg";
    case Subtask::ACI:
      return prefix + std::string(to_string(l.type));
    case Subtask::ARS:
      return l.type == ComponentType::MajorClaim ? "O" : prefix + "Rel";
    case Subtask::ARI:
      if (l.type == ComponentType::MajorClaim) return prefix + "MC";
      return prefix + std::string(to_string(l.type)) + ":" + std::string(to_string(l.stance));
  }
  return "O";
}

std::vector<std::string> derive_subtask(std::span<const AmLabel> labels, Subtask subtask) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(derive_subtask_label(l, subtask));
  return out;
}

// ---------------------------------------------------------------- components

std::vector<ComponentSpan> components_from_labels(std::span<const AmLabel> labels) {
  std::vector<ComponentSpan> out;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const AmLabel& l = labels[k];
    if (l.bio == BioPrefix::O) continue;
    if (l.bio == BioPrefix::I) {
      if (k == 0 || labels[k - 1].bio == BioPrefix::O) {
        throw DataError("invalid BIO structure at token " + std::to_string(k) +
                        "; apply am_postprocess first");
      }
      const AmLabel& head = labels[out.back().start];
      if (l.type != head.type || l.distance != head.distance || l.stance != head.stance) {
        throw DataError("heterogeneous component at token " + std::to_string(k) +
                        "; apply am_postprocess first");
      }
      out.back().end = k;
      continue;
    }
    out.push_back({k, k, l.type, l.stance, l.distance, std::nullopt});
  }
  return out;
}

std::vector<AmLabel> labels_from_components(std::span<const ComponentSpan> components,
                                            std::size_t length) {
  std::vector<AmLabel> out(length);
  for (std::size_t c = 0; c < components.size(); ++c) {
    const ComponentSpan& span = components[c];
    if (span.end >= length || span.start > span.end) {
      throw DataError("component span outside the document");
    }
    std::optional<int> distance = span.distance;
    if (!distance && span.target) {
      distance = static_cast<int>(*span.target) - static_cast<int>(c);
    }
    for (std::size_t k = span.start; k <= span.end; ++k) {
      out[k] = {k == span.start ? BioPrefix::B : BioPrefix::I, span.type,
                span.type == ComponentType::Premise ? distance : std::nullopt, span.stance};
    }
  }
  return out;
}

std::vector<AmLabel> am_postprocess(std::span<const AmLabel> labels) {
  std::vector<AmLabel> work(labels.begin(), labels.end());

  // Step 1: BIO structure of the b field, second repair variant.
  for (std::size_t k = 0; k < work.size(); ++k) {
    if (work[k].bio == BioPrefix::I && (k == 0 || work[k - 1].bio == BioPrefix::O)) {
      work[k].bio = BioPrefix::B;
    }
    if (work[k].bio == BioPrefix::O) work[k] = AmLabel::outside();
  }

  // Step 2: per-field majority within every component.
  std::vector<ComponentSpan> comps;
  for (std::size_t k = 0; k < work.size(); ++k) {
    if (work[k].bio == BioPrefix::B) {
      comps.push_back({k, k, ComponentType::None, Stance::None, std::nullopt, std::nullopt});
    } else if (work[k].bio == BioPrefix::I) {
      comps.back().end = k;
    }
  }
  const std::size_t n = comps.size();
  for (std::size_t c = 0; c < n; ++c) {
    ComponentSpan& span = comps[c];
    std::vector<ComponentType> types;
    std::vector<int> distances;
    std::vector<Stance> stances;
    for (std::size_t k = span.start; k <= span.end; ++k) {
      if (work[k].type != ComponentType::None) types.push_back(work[k].type);
      if (work[k].distance && *work[k].distance != 0) distances.push_back(*work[k].distance);
      stances.push_back(work[k].stance);
    }
    span.type = majority(types, name_before<ComponentType>).value_or(ComponentType::Claim);

    if (span.type == ComponentType::Premise) {
      std::vector<Stance> allowed;
      std::copy_if(stances.begin(), stances.end(), std::back_inserter(allowed), is_premise_stance);
      span.stance = majority(allowed, name_before<Stance>).value_or(Stance::Support);
      span.distance = majority(distances, distance_before).value_or(c > 0 ? -1 : 1);
    } else if (span.type == ComponentType::Claim) {
      std::vector<Stance> allowed;
      std::copy_if(stances.begin(), stances.end(), std::back_inserter(allowed), is_claim_stance);
      span.stance = majority(allowed, name_before<Stance>).value_or(Stance::For);
    }
  }

  // Step 3: keep every premise link inside the document and off itself.
  for (std::size_t c = 0; c < n; ++c) {
    ComponentSpan& span = comps[c];
    if (span.type != ComponentType::Premise) continue;
    if (n == 1) {
      // Nothing to link to: the lone premise becomes a claim.
      span.type = ComponentType::Claim;
      span.stance = span.stance == Stance::Attack ? Stance::Against : Stance::For;
      span.distance.reset();
      continue;
    }
    const long last = static_cast<long>(n) - 1;
    long target = static_cast<long>(c) + *span.distance;
    target = std::clamp(target, 0L, last);
    if (target == static_cast<long>(c)) target = c > 0 ? target - 1 : target + 1;
    span.distance = static_cast<int>(target - static_cast<long>(c));
  }

  return labels_from_components(comps, work.size());
}

std::vector<ComponentSpan> rel_to_abs_links(std::vector<ComponentSpan> components) {
  const long n = static_cast<long>(components.size());
  for (long c = 0; c < n; ++c) {
    auto& span = components[static_cast<std::size_t>(c)];
    if (!span.distance) {
      span.target.reset();
      continue;
    }
    const long target = c + *span.distance;
    if (target < 0 || target >= n || target == c) {
      throw DataError("component " + std::to_string(c) + " links to " + std::to_string(target) +
                      ", outside the document; apply am_postprocess first");
    }
    span.target = static_cast<std::size_t>(target);
  }
  return components;
}

std::vector<ComponentSpan> abs_to_rel_links(std::vector<ComponentSpan> components) {
  for (std::size_t c = 0; c < components.size(); ++c) {
    auto& span = components[c];
    if (span.target) {
      span.distance = static_cast<int>(*span.target) - static_cast<int>(c);
    } else {
      span.distance.reset();
    }
  }
  return components;
}

std::vector<std::string> validate_am_structure(std::span<const AmLabel> labels) {
  std::vector<std::string> problems;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (auto v = am_invariant_violation(labels[k])) {
      problems.push_back("token " + std::to_string(k) + ": " + *v);
    }
  }
  std::vector<ComponentSpan> comps;
  try {
    comps = components_from_labels(labels);
  } catch (const DataError& e) {
    problems.emplace_back(e.what());
    return problems;
  }
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (!comps[c].distance) continue;
    const long target = static_cast<long>(c) + *comps[c].distance;
    if (target < 0 || target >= static_cast<long>(comps.size()) ||
        target == static_cast<long>(c)) {
      problems.push_back("component " + std::to_string(c) + " links outside the document");
    }
  }
  return problems;
}

// ---------------------------------------------------------------------- s2s

std::vector<std::string> alignment_phonemes(std::span<const std::string> predicted,
                                            std::string_view empty_symbol,
                                            std::string_view join_symbol) {
  std::vector<std::string> out;
  for (const auto& label : predicted) {
    if (label == empty_symbol) continue;
    std::string_view rest = label;
    if (join_symbol.empty()) {
      if (!rest.empty()) out.emplace_back(rest);
      continue;
    }
    while (true) {
      const auto pos = rest.find(join_symbol);
      const auto piece = rest.substr(0, pos);
      if (!piece.empty() && piece != empty_symbol) out.emplace_back(piece);
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + join_symbol.size());
    }
  }
  return out;
}

std::string strip_alignment_symbols(std::span<const std::string> predicted,
                                    std::string_view empty_symbol, std::string_view join_symbol) {
  std::string out;
  for (const auto& p : alignment_phonemes(predicted, empty_symbol, join_symbol)) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

}  // namespace mtltag
