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

#include "mtltag/metrics.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "mtltag/bio.hpp"
#include "mtltag/error.hpp"

namespace mtltag {

std::vector<std::vector<std::string>> ResultList::gold() const {
  std::vector<std::vector<std::string>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    auto& row = out.emplace_back();
    for (const auto& t : s) row.push_back(t.gold);
  }
  return out;
}

std::vector<std::vector<std::string>> ResultList::predicted() const {
  std::vector<std::vector<std::string>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    auto& row = out.emplace_back();
    for (const auto& t : s) row.push_back(t.predicted);
  }
  return out;
}

std::size_t ResultList::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

ResultList make_results(const Corpus& corpus, std::string_view task,
                        std::span<const std::vector<std::string>> predictions) {
  if (predictions.size() != corpus.sentences.size()) {
    throw DataError("predictions for " + std::to_string(predictions.size()) + " sentences, corpus has " +
                    std::to_string(corpus.sentences.size()));
  }
  ResultList out;
  for (std::size_t s = 0; s < predictions.size(); ++s) {
    const Sentence& sentence = corpus.sentences[s];
    if (predictions[s].size() != sentence.size()) {
      throw DataError("sentence " + std::to_string(s + 1) + ": prediction length differs from gold");
    }
    auto& row = out.sentences.emplace_back();
    for (std::size_t t = 0; t < sentence.size(); ++t) {
      const auto it = sentence[t].labels.find(std::string(task));
      if (it == sentence[t].labels.end()) {
        throw DataError("sentence " + std::to_string(s + 1) + " has no gold label for task '" +
                        std::string(task) + "'");
      }
      row.push_back({sentence[t].surface, it->second, predictions[s][t]});
    }
  }
  return out;
}

// ------------------------------------------------------------- token level

TokenScores token_prf(std::span<const std::vector<std::string>> gold,
                      std::span<const std::vector<std::string>> predicted,
                      std::span<const std::string> inventory) {
  if (gold.size() != predicted.size()) throw DataError("gold and predicted sentence counts differ");
  struct Tally {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Tally, std::less<>> tallies;
  std::size_t correct = 0, total = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != predicted[s].size()) {
      throw DataError("sentence " + std::to_string(s + 1) + ": gold and predicted lengths differ");
    }
    for (std::size_t t = 0; t < gold[s].size(); ++t) {
      const std::string& g = gold[s][t];
      const std::string& p = predicted[s][t];
      ++total;
      if (g == p) {
        ++correct;
        ++tallies[g].tp;
      } else {
        ++tallies[g].fn;
        ++tallies[p].fp;
      }
    }
  }
  if (total == 0) throw DataError("no tokens to evaluate");

  std::vector<std::string> labels(inventory.begin(), inventory.end());
  if (labels.empty()) {
    for (const auto& [label, tally] : tallies) labels.push_back(label);
  }
  TokenScores scores;
  scores.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  for (const std::string& label : labels) {
    const auto it = tallies.find(label);
    if (it == tallies.end()) continue;
    const Tally& c = it->second;
    const double p = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double r = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    scores.precision += p;
    scores.recall += r;
    scores.f1 += p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  const auto n = static_cast<double>(labels.size());
  scores.precision /= n;
  scores.recall /= n;
  scores.f1 /= n;
  return scores;
}

// ---------------------------------------------------------- argumentation

bool am_match(const ComponentSpan& gold, const ComponentSpan& predicted, MatchLevel level) {
  if (level == MatchLevel::Exact) return gold.start == predicted.start && gold.end == predicted.end;
  const std::size_t lo = std::max(gold.start, predicted.start);
  const std::size_t hi = std::min(gold.end, predicted.end);
  const std::size_t shared = lo <= hi ? hi - lo + 1 : 0;
  return 2 * shared >= gold.length();
}

double MatchCounts::f1() const noexcept {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

MatchCounts& MatchCounts::operator+=(const MatchCounts& other) noexcept {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

namespace {

std::vector<ComponentSpan> structured_components(std::span<const AmLabel> labels, const char* side) {
  const auto problems = validate_am_structure(labels);
  if (!problems.empty()) {
    throw DataError(std::string(side) + " labels have invalid AM structure (" + problems.front() +
                    "); run am_postprocess first");
  }
  return rel_to_abs_links(components_from_labels(labels));
}

// Each gold item takes the first unused predicted item that matches it.
template <typename Match>
MatchCounts greedy_counts(const std::vector<std::size_t>& gold_items,
                          const std::vector<std::size_t>& pred_items, Match match) {
  std::vector<bool> used(pred_items.size(), false);
  MatchCounts counts;
  for (std::size_t g : gold_items) {
    bool found = false;
    for (std::size_t k = 0; k < pred_items.size() && !found; ++k) {
      if (!used[k] && match(g, pred_items[k])) {
        used[k] = true;
        found = true;
      }
    }
    if (found) ++counts.tp;
  }
  counts.fn = gold_items.size() - counts.tp;
  counts.fp = pred_items.size() - counts.tp;
  return counts;
}

}  // namespace

MatchCounts am_counts(std::span<const AmLabel> gold, std::span<const AmLabel> predicted,
                      AmTarget target, MatchLevel level) {
  if (gold.size() != predicted.size()) throw DataError("gold and predicted lengths differ");
  const auto gc = structured_components(gold, "gold");
  const auto pc = structured_components(predicted, "predicted");

  std::vector<std::size_t> gi, pi;
  if (target == AmTarget::Component) {
    for (std::size_t i = 0; i < gc.size(); ++i) gi.push_back(i);
    for (std::size_t i = 0; i < pc.size(); ++i) pi.push_back(i);
    return greedy_counts(gi, pi, [&](std::size_t g, std::size_t p) {
      return gc[g].type == pc[p].type && am_match(gc[g], pc[p], level);
    });
  }
  for (std::size_t i = 0; i < gc.size(); ++i) {
    if (gc[i].target) gi.push_back(i);
  }
  for (std::size_t i = 0; i < pc.size(); ++i) {
    if (pc[i].target) pi.push_back(i);
  }
  return greedy_counts(gi, pi, [&](std::size_t g, std::size_t p) {
    const ComponentSpan& gt = gc[*gc[g].target];
    const ComponentSpan& pt = pc[*pc[p].target];
    return gc[g].type == pc[p].type && gc[g].stance == pc[p].stance && am_match(gc[g], pc[p], level) &&
           gt.type == pt.type && am_match(gt, pt, level);
  });
}

double am_f1(std::span<const std::vector<AmLabel>> gold,
             std::span<const std::vector<AmLabel>> predicted, AmTarget target, MatchLevel level) {
  if (gold.size() != predicted.size()) throw DataError("gold and predicted document counts differ");
  MatchCounts total;
  for (std::size_t d = 0; d < gold.size(); ++d) total += am_counts(gold[d], predicted[d], target, level);
  return total.f1();
}

// -------------------------------------------------------- sequence to sequence

std::size_t edit_distance(std::string_view a, std::string_view b) {
  return edit_distance(utf8_chars(a), utf8_chars(b));
}

double word_accuracy(std::span<const std::string> predicted, std::span<const std::string> gold) {
  if (predicted.size() != gold.size()) throw DataError("word lists differ in length");
  if (gold.empty()) throw DataError("word accuracy of an empty list");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += predicted[i] == gold[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double aggregate(std::span<const double> values, Aggregation how) {
  if (values.empty()) throw DataError("aggregate of an empty list");
  if (how == Aggregation::Mean) {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  return sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
}

S2sScores s2s_scores(const ResultList& results, std::string_view empty_symbol,
                     std::string_view join_symbol) {
  std::vector<std::string> gold_words, pred_words;
  std::vector<double> distances;
  for (const auto& sentence : results.sentences) {
    std::vector<std::string> gold, pred;
    for (const auto& t : sentence) {
      gold.push_back(t.gold);
      pred.push_back(t.predicted);
    }
    const auto gp = alignment_phonemes(gold, empty_symbol, join_symbol);
    const auto pp = alignment_phonemes(pred, empty_symbol, join_symbol);
    distances.push_back(static_cast<double>(edit_distance(pp, gp)));
    gold_words.push_back(strip_alignment_symbols(gold, empty_symbol, join_symbol));
    pred_words.push_back(strip_alignment_symbols(pred, empty_symbol, join_symbol));
  }
  S2sScores scores;
  scores.word_accuracy = word_accuracy(pred_words, gold_words);
  scores.ed_mean = aggregate(distances, Aggregation::Mean);
  scores.ed_median = aggregate(distances, Aggregation::Median);
  return scores;
}

// ---------------------------------------------------------------- analysis

double coefficient_of_variation(std::span<const double> samples) {
  if (samples.size() < 2) throw DataError("coefficient of variation needs at least two samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (mean == 0.0) throw DataError("coefficient of variation undefined for zero mean");
  double m2 = 0.0;
  for (double x : samples) m2 += (x - mean) * (x - mean);
  return std::sqrt(m2 / n) / mean;
}

std::vector<LabeledSpan> labeled_spans(std::span<const ComponentSpan> components) {
  std::vector<LabeledSpan> out;
  out.reserve(components.size());
  for (const ComponentSpan& c : components) {
    std::string label(to_string(c.type));
    label += ':';
    label += c.target ? std::to_string(*c.target) : std::string(kBottom);
    label += ':';
    label += to_string(c.stance);
    out.push_back({c.start, c.end + 1, std::move(label)});
  }
  return out;
}

namespace {

enum class OverlapCase { None, Same, Left, Right, Inside, Covers };

OverlapCase overlap_case(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  if (a == c && b == d) return OverlapCase::Same;
  if (a >= c && b >= d && a <= d) return OverlapCase::Left;
  if (a <= c && b <= d && b >= c) return OverlapCase::Right;
  if (a > c && b < d) return OverlapCase::Inside;
  if (a < c && b > d) return OverlapCase::Covers;
  return OverlapCase::None;
}

}  // namespace

bool spans_overlap(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return overlap_case(a, b, c, d) != OverlapCase::None;
}

std::size_t overlap_length(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  switch (overlap_case(a, b, c, d)) {
    case OverlapCase::Same: return b - a;
    case OverlapCase::Left: return d - a;
    case OverlapCase::Right: return b - c;
    case OverlapCase::Inside: return b - a;
    case OverlapCase::Covers: return d - c;
    case OverlapCase::None: return 0;
  }
  return 0;
}

std::vector<OverlapPair> span_overlap_profile(std::span<const LabeledSpan> gold,
                                              std::span<const LabeledSpan> predicted) {
  auto check = [](const LabeledSpan& s) {
    if (s.a >= s.b) {
      throw DataError("malformed span [" + std::to_string(s.a) + ", " + std::to_string(s.b) + ")");
    }
  };
  for (const auto& p : predicted) check(p);
  std::vector<OverlapPair> out;
  out.reserve(gold.size());
  for (const auto& g : gold) {
    check(g);
    std::size_t best = 0;
    for (const auto& p : predicted) {
      if (p.label != g.label || !spans_overlap(g.a, g.b, p.a, p.b)) continue;
      best = std::max(best, overlap_length(g.a, g.b, p.a, p.b));
    }
    out.push_back({overlap_length(g.a, g.b, g.a, g.b), best});
  }
  return out;
}

// -------------------------------------------------------------- evaluation

Postprocess parse_postprocess(std::string_view name) {
  if (name == "none") return Postprocess::None;
  if (name == "bio-o") return Postprocess::BioOutside;
  if (name == "bio-b") return Postprocess::BioBegin;
  if (name == "am") return Postprocess::Am;
  throw ConfigError("unknown post-processing '" + std::string(name) + "' (expected none, bio-o, bio-b or am)");
}

std::string_view to_string(Postprocess p) {
  switch (p) {
    case Postprocess::None: return "none";
    case Postprocess::BioOutside: return "bio-o";
    case Postprocess::BioBegin: return "bio-b";
    case Postprocess::Am: return "am";
  }
  return "none";
}

ResultList apply_postprocess(ResultList results, Postprocess postprocess, const AmAliases& aliases) {
  if (postprocess == Postprocess::None) return results;
  for (auto& sentence : results.sentences) {
    std::vector<std::string> pred;
    pred.reserve(sentence.size());
    for (const auto& t : sentence) pred.push_back(t.predicted);
    std::vector<std::string> fixed;
    if (postprocess == Postprocess::Am) {
      const auto labels = parse_am_sequence(pred, aliases);
      fixed = render_am_sequence(am_postprocess(labels));
    } else {
      fixed = correct_bio(std::span<const std::string>(pred),
                          postprocess == Postprocess::BioOutside ? BioRepair::ToOutside : BioRepair::ToBegin);
    }
    for (std::size_t i = 0; i < sentence.size(); ++i) sentence[i].predicted = std::move(fixed[i]);
  }
  return results;
}

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = {
      "accuracy", "precision", "recall", "f1", "c_f1_50", "c_f1_100", "r_f1_50", "r_f1_100",
      "wacc",     "ed_mean",   "ed_median"};
  return names;
}

bool higher_is_better(std::string_view metric) {
  const auto& names = known_metrics();
  if (std::find(names.begin(), names.end(), metric) == names.end()) {
    throw ConfigError("unknown metric '" + std::string(metric) + "'");
  }
  return metric != "ed_mean" && metric != "ed_median";
}

MetricReport evaluate(const ResultList& input, std::span<const std::string> metrics,
                      const EvaluationOptions& options) {
  for (const auto& m : metrics) higher_is_better(m);
  const ResultList results = apply_postprocess(input, options.postprocess, options.am_aliases);

  std::optional<TokenScores> token;
  std::optional<S2sScores> s2s;
  std::vector<std::vector<AmLabel>> am_gold, am_pred;
  auto am_ready = [&] {
    if (!am_gold.empty() || results.sentences.empty()) return;
    for (const auto& seq : results.gold()) am_gold.push_back(parse_am_sequence(seq, options.am_aliases));
    for (const auto& seq : results.predicted()) am_pred.push_back(parse_am_sequence(seq, options.am_aliases));
  };

  MetricReport report;
  for (const std::string& m : metrics) {
    double value = 0.0;
    if (m == "accuracy" || m == "precision" || m == "recall" || m == "f1") {
      if (!token) token = token_prf(results.gold(), results.predicted(), options.label_inventory);
      value = m == "accuracy" ? token->accuracy
              : m == "precision" ? token->precision
              : m == "recall"    ? token->recall
                                 : token->f1;
    } else if (m == "wacc" || m == "ed_mean" || m == "ed_median") {
      if (!s2s) s2s = s2s_scores(results, options.empty_symbol, options.join_symbol);
      value = m == "wacc" ? s2s->word_accuracy : m == "ed_mean" ? s2s->ed_mean : s2s->ed_median;
    } else {
      am_ready();
      const AmTarget target = m[0] == 'c' ? AmTarget::Component : AmTarget::Relation;
      const MatchLevel level = m.ends_with("_100") ? MatchLevel::Exact : MatchLevel::Approximate;
      value = am_f1(am_gold, am_pred, target, level);
    }
    report.emplace_back(m, value);
  }
  return report;
}

}  // namespace mtltag
