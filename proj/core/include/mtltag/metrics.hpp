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

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "mtltag/am_labels.hpp"
#include "mtltag/corpus_io.hpp"

namespace mtltag {

struct ResultToken {
  std::string surface;
  std::string gold;
  std::string predicted;

  bool operator==(const ResultToken&) const = default;
};

/// Gold and predicted labels per token, one inner vector per document.
struct ResultList {
  std::vector<std::vector<ResultToken>> sentences;

  std::vector<std::vector<std::string>> gold() const;
  std::vector<std::vector<std::string>> predicted() const;
  std::size_t token_count() const noexcept;
};

/// Pairs the gold labels of `task` in `corpus` with per-sentence predictions.
ResultList make_results(const Corpus& corpus, std::string_view task,
                        std::span<const std::vector<std::string>> predictions);

// ------------------------------------------------------------- token level

struct TokenScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-label P/R/F1 macro-averaged over `inventory`; an empty inventory
/// means the union of gold and predicted labels.
TokenScores token_prf(std::span<const std::vector<std::string>> gold,
                      std::span<const std::vector<std::string>> predicted,
                      std::span<const std::string> inventory = {});

// ---------------------------------------------------------- argumentation

enum class MatchLevel { Approximate, Exact };

/// Exact: identical spans. Approximate: the shared tokens cover at least
/// half of the gold span. Labels are compared by the caller.
bool am_match(const ComponentSpan& gold, const ComponentSpan& predicted, MatchLevel level);

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  /// 2TP / (2TP + FP + FN), and 0 when all counts are 0.
  double f1() const noexcept;
  MatchCounts& operator+=(const MatchCounts& other) noexcept;
  bool operator==(const MatchCounts&) const = default;
};

enum class AmTarget { Component, Relation };

/// Counts for one document. Components match on span and type; relations
/// match on the premise, its stance and the component it links to.
/// Throws DataError when either side has invalid structure.
MatchCounts am_counts(std::span<const AmLabel> gold, std::span<const AmLabel> predicted,
                      AmTarget target, MatchLevel level);

/// Counts summed over documents, then F1.
double am_f1(std::span<const std::vector<AmLabel>> gold,
             std::span<const std::vector<AmLabel>> predicted, AmTarget target, MatchLevel level);

// -------------------------------------------------------- sequence to sequence

/// Unit-cost Levenshtein distance between two sequences.
template <typename Seq>
  requires(!std::is_convertible_v<const Seq&, std::string_view>)
std::size_t edit_distance(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  std::size_t i = 0;
  for (const auto& x : a) {
    ++i;
    cur[0] = i;
    std::size_t j = 0;
    for (const auto& y : b) {
      ++j;
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x == y ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Character-level distance over UTF-8 code points.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Fraction of exactly matching strings; throws DataError on empty or
/// unequal lists.
double word_accuracy(std::span<const std::string> predicted, std::span<const std::string> gold);

enum class Aggregation { Mean, Median };
double aggregate(std::span<const double> values, Aggregation how);

struct S2sScores {
  double word_accuracy = 0.0;
  double ed_mean = 0.0;
  double ed_median = 0.0;
};

/// Each sentence is one word whose labels are aligned phoneme symbols.
S2sScores s2s_scores(const ResultList& results, std::string_view empty_symbol,
                     std::string_view join_symbol);

// ---------------------------------------------------------------- analysis

/// Population standard deviation over the mean; throws DataError for fewer
/// than two samples or a zero mean.
double coefficient_of_variation(std::span<const double> samples);

/// Half-open span [a, b) with a component-level label.
struct LabeledSpan {
  std::size_t a = 0;
  std::size_t b = 0;
  std::string label;
};

/// Components as half-open spans labelled "type:target:stance" with
/// absolute targets.
std::vector<LabeledSpan> labeled_spans(std::span<const ComponentSpan> components);

bool spans_overlap(std::size_t a, std::size_t b, std::size_t c, std::size_t d);
/// Overlap of gold [a, b) and predicted [c, d) by the five overlap cases.
std::size_t overlap_length(std::size_t a, std::size_t b, std::size_t c, std::size_t d);

struct OverlapPair {
  std::size_t length = 0;
  std::size_t overlap = 0;

  bool operator==(const OverlapPair&) const = default;
};

/// One (length, best same-label overlap) pair per gold span.
std::vector<OverlapPair> span_overlap_profile(std::span<const LabeledSpan> gold,
                                              std::span<const LabeledSpan> predicted);

// -------------------------------------------------------------- evaluation

enum class Postprocess { None, BioOutside, BioBegin, Am };
Postprocess parse_postprocess(std::string_view name);
std::string_view to_string(Postprocess p);

struct EvaluationOptions {
  Postprocess postprocess = Postprocess::None;
  std::string empty_symbol = "EMPTY";
  std::string join_symbol = "_MYJOIN_";
  AmAliases am_aliases = default_am_aliases();
  std::vector<std::string> label_inventory;
};

/// Applies BIO repair or AM post-processing to the predicted labels.
ResultList apply_postprocess(ResultList results, Postprocess postprocess,
                             const AmAliases& aliases = default_am_aliases());

const std::vector<std::string>& known_metrics();
/// Throws ConfigError for unknown names.
bool higher_is_better(std::string_view metric);

using MetricReport = std::vector<std::pair<std::string, double>>;

/// Post-processes as configured, then computes each named metric.
MetricReport evaluate(const ResultList& results, std::span<const std::string> metrics,
                      const EvaluationOptions& options);

}  // namespace mtltag
