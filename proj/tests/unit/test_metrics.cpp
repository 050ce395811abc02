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


#include <doctest.h>

#include <cmath>
#include <random>

#include "mtltag/corpus_io.hpp"
#include "mtltag/error.hpp"
#include "mtltag/metrics.hpp"
#include "support/test_support.hpp"

using namespace mtltag;

namespace {

using Seqs = std::vector<std::vector<std::string>>;

std::vector<AmLabel> essay_document() {
  ColumnSpec spec;
  spec.label_columns["am"] = 1;
  const Corpus c = read_conll_file(testing::data_dir() / "am_essay.conll", spec);
  std::vector<std::string> labels;
  for (const auto& s : c.sentences)
    for (const auto& t : s) labels.push_back(t.labels.at("am"));
  return parse_am_sequence(labels);
}

ComponentSpan span(std::size_t a, std::size_t b) {
  ComponentSpan s;
  s.start = a;
  s.end = b;
  s.type = ComponentType::Premise;
  return s;
}

}  // namespace

TEST_CASE("token scores") {
  const Seqs gold{{"B-X", "I-X", "O"}, {"O"}};
  const auto perfect = token_prf(gold, gold);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const Seqs pred{{"B-X", "O", "O"}, {"O"}};
  const auto s = token_prf(gold, pred);
  CHECK(s.accuracy == doctest::Approx(0.75));
  // B-X: p=r=1; I-X: p=r=0; O: p=2/3, r=1.
  CHECK(s.precision == doctest::Approx((1.0 + 0.0 + 2.0 / 3.0) / 3.0));
  CHECK(s.recall == doctest::Approx((1.0 + 0.0 + 1.0) / 3.0));
  CHECK(s.f1 == doctest::Approx((1.0 + 0.0 + 0.8) / 3.0));

  const Seqs other{{"a", "a", "a"}, {"a"}};
  CHECK(token_prf(gold, other).f1 == 0.0);
  CHECK_THROWS_AS(token_prf(gold, Seqs{{"O"}}), DataError);
  CHECK_THROWS_AS(token_prf(Seqs{{}}, Seqs{{}}), DataError);
}

TEST_CASE("inventory labels absent from the data count as zero") {
  const Seqs gold{{"A", "B"}};
  const std::vector<std::string> inventory{"A", "B", "C", "D"};
  CHECK(token_prf(gold, gold, inventory).f1 == doctest::Approx(0.5));
}

TEST_CASE("majority baseline over a 17 label inventory") {
  std::vector<std::string> inventory{"I-EG"};
  for (int k = 0; k < 16; ++k) inventory.push_back("L" + std::to_string(k));
  Seqs gold(1), pred(1);
  for (int i = 0; i < 7437; ++i) {
    gold[0].push_back(i < 2636 ? "I-EG" : inventory[1 + i % 16]);
    pred[0].push_back("I-EG");
  }
  const double p = 2636.0 / 7437.0;
  const double expected = 2.0 * p / (p + 1.0) / 17.0;
  const double f1 = token_prf(gold, pred, inventory).f1;
  CHECK(f1 == doctest::Approx(expected).epsilon(1e-14));
  CHECK(std::abs(100.0 * f1 - 3.079) < 0.001);
}

TEST_CASE("accuracy is one exactly when F1 is one") {
  std::mt19937_64 gen(4);
  const std::vector<std::string> pool{"O", "B-X", "I-X", "B-Y"};
  for (int trial = 0; trial < 500; ++trial) {
    Seqs gold(1), pred(1);
    for (std::size_t i = 1 + gen() % 6; i > 0; --i) {
      gold[0].push_back(pool[gen() % 4]);
      pred[0].push_back(gen() % 3 == 0 ? pool[gen() % 4] : gold[0].back());
    }
    const auto s = token_prf(gold, pred);
    CHECK((s.accuracy == 1.0) == (s.f1 == 1.0));
  }
}

TEST_CASE("component matching levels") {
  const auto gold = span(10, 14);
  CHECK(am_match(gold, span(10, 14), MatchLevel::Exact));
  CHECK(am_match(gold, span(10, 14), MatchLevel::Approximate));
  CHECK(am_match(gold, span(12, 16), MatchLevel::Approximate));  // 3 of 5
  CHECK_FALSE(am_match(gold, span(12, 16), MatchLevel::Exact));
  CHECK_FALSE(am_match(gold, span(13, 16), MatchLevel::Approximate));  // 2 of 5
  CHECK(am_match(span(0, 3), span(2, 9), MatchLevel::Approximate));  // half of an even length
}

TEST_CASE("match counts") {
  CHECK(MatchCounts{}.f1() == 0.0);
  CHECK((MatchCounts{2, 1, 1}.f1()) == doctest::Approx(4.0 / 6.0));
  MatchCounts a{1, 2, 3};
  a += MatchCounts{1, 1, 1};
  CHECK(a == MatchCounts{2, 3, 4});
}

TEST_CASE("essay document against itself and perturbations") {
  const auto gold = essay_document();
  const std::vector<std::vector<AmLabel>> g{gold};
  for (auto target : {AmTarget::Component, AmTarget::Relation}) {
    for (auto level : {MatchLevel::Approximate, MatchLevel::Exact}) {
      CHECK(am_f1(g, g, target, level) == 1.0);
    }
  }

  // Shrink one five-token premise to three of its tokens.
  const auto comps = components_from_labels(gold);
  std::size_t victim = comps.size();
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (comps[c].type == ComponentType::Premise && comps[c].length() == 5) victim = c;
  }
  REQUIRE(victim < comps.size());
  auto shrunk = gold;
  shrunk[comps[victim].start + 3] = AmLabel::outside();
  shrunk[comps[victim].start + 4] = AmLabel::outside();
  const auto approx = am_counts(gold, shrunk, AmTarget::Component, MatchLevel::Approximate);
  const auto exact = am_counts(gold, shrunk, AmTarget::Component, MatchLevel::Exact);
  CHECK(approx == MatchCounts{comps.size(), 0, 0});
  CHECK(exact == MatchCounts{comps.size() - 1, 1, 1});

  // Every link pointed somewhere wrong: components untouched, relations all lost.
  auto relinked = gold;
  const std::size_t n = comps.size();
  std::size_t c = 0;
  for (auto& l : relinked) {
    if (l.bio == BioPrefix::B) ++c;
    if (l.distance) {
      const long k = static_cast<long>(c) - 1;
      const long right = k + *l.distance;
      long wrong = (right + 1) % static_cast<long>(n);
      if (wrong == k) wrong = (wrong + 1) % static_cast<long>(n);
      l.distance = static_cast<int>(wrong - k);
    }
  }
  const std::vector<std::vector<AmLabel>> r{relinked};
  CHECK(am_f1(g, r, AmTarget::Component, MatchLevel::Exact) == 1.0);
  CHECK(am_f1(g, r, AmTarget::Relation, MatchLevel::Approximate) == 0.0);
  CHECK(am_f1(g, r, AmTarget::Relation, MatchLevel::Exact) == 0.0);
}

TEST_CASE("invalid structure must be post-processed first") {
  const std::vector<AmLabel> gold{parse_am_label("B:C:⊥:For"), parse_am_label("O")};
  const std::vector<AmLabel> bad{parse_am_label("O"), parse_am_label("I:C:⊥:For")};
  try {
    am_counts(gold, bad, AmTarget::Component, MatchLevel::Exact);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("am_postprocess") != std::string::npos);
  }
}

TEST_CASE("AM counts agree with the maximum matching oracle") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto gold = testing::random_am_document(gen, 8);
    const auto pred = testing::perturb_am_document(gold, gen);
    REQUIRE(validate_am_structure(pred).empty());
    for (bool relations : {false, true}) {
      for (bool exact : {false, true}) {
        const auto mine = am_counts(gold, pred, relations ? AmTarget::Relation : AmTarget::Component,
                                    exact ? MatchLevel::Exact : MatchLevel::Approximate);
        const auto oracle = testing::oracle_am_counts(gold, pred, relations, exact);
        CHECK(mine.tp == oracle.tp);
        CHECK(mine.fp == oracle.fp);
        CHECK(mine.fn == oracle.fn);
      }
    }
    CHECK(am_counts(gold, pred, AmTarget::Component, MatchLevel::Exact).f1() <=
          am_counts(gold, pred, AmTarget::Component, MatchLevel::Approximate).f1());
  }
}

TEST_CASE("edit distance") {
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(edit_distance("abc", "abc") == 0);
  CHECK(edit_distance("über", "uber") == 1);  // counts code points, not bytes
  std::mt19937_64 gen(12);
  auto word = [&] {
    std::vector<std::string> w(gen() % 6);
    for (auto& ch : w) ch = std::string(1, static_cast<char>('a' + gen() % 3));
    return w;
  };
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = word(), b = word(), c = word();
    const auto ab = edit_distance(a, b);
    CHECK(ab == testing::reference_edit_distance(a, b));
    CHECK(ab == edit_distance(b, a));
    CHECK((ab == 0) == (a == b));
    CHECK(edit_distance(a, c) <= ab + edit_distance(b, c));
  }
}

TEST_CASE("word accuracy and aggregation") {
  const std::vector<std::string> gold{"a b", "c"};
  CHECK(word_accuracy(gold, gold) == 1.0);
  CHECK(word_accuracy(std::vector<std::string>{"a b", "d"}, gold) == 0.5);
  CHECK_THROWS_AS(word_accuracy(std::vector<std::string>{}, std::vector<std::string>{}), DataError);
  CHECK_THROWS_AS(word_accuracy(std::vector<std::string>{"x"}, gold), DataError);
  const std::vector<double> v{3, 1, 2, 10};
  CHECK(aggregate(v, Aggregation::Mean) == 4.0);
  CHECK(aggregate(v, Aggregation::Median) == 2.5);
  CHECK(aggregate(std::vector<double>{5, 1, 3}, Aggregation::Median) == 3.0);
  CHECK_THROWS_AS(aggregate(std::vector<double>{}, Aggregation::Mean), DataError);
}

TEST_CASE("sequence-to-sequence scores strip alignment symbols") {
  ResultList r;
  // Gold "E g z @ t I N"; the prediction aligns differently but spells the same word.
  const std::vector<std::string> g{"E", "g_z", "@", "t", "I", "ε", "N"};
  const std::vector<std::string> p{"E", "g", "z", "@", "t", "I", "N"};
  auto& s = r.sentences.emplace_back();
  for (std::size_t i = 0; i < g.size(); ++i) s.push_back({"x", g[i], p[i]});
  auto& t = r.sentences.emplace_back();
  t.push_back({"y", "a_b", "a"});
  const auto scores = s2s_scores(r, "ε", "_");
  CHECK(scores.word_accuracy == 0.5);
  CHECK(scores.ed_mean == 0.5);
  CHECK(scores.ed_median == 0.5);
}

TEST_CASE("coefficient of variation") {
  CHECK(coefficient_of_variation(std::vector<double>{2, 2, 2}) == 0.0);
  CHECK(coefficient_of_variation(std::vector<double>{1, 2, 3}) == doctest::Approx(std::sqrt(2.0 / 3.0) / 2.0));
  CHECK_THROWS_AS(coefficient_of_variation(std::vector<double>{1, -1}), DataError);
  CHECK_THROWS_AS(coefficient_of_variation(std::vector<double>{1}), DataError);
}

TEST_CASE("overlap lengths for each case") {
  CHECK(overlap_length(2, 5, 2, 5) == 3);  // identical
  CHECK(overlap_length(4, 8, 2, 6) == 2);  // prediction starts first
  CHECK(overlap_length(2, 5, 4, 8) == 1);  // prediction ends later
  CHECK(overlap_length(3, 5, 2, 8) == 2);  // gold inside prediction
  CHECK(overlap_length(2, 8, 3, 5) == 2);  // prediction inside gold
  CHECK(overlap_length(2, 4, 5, 7) == 0);
  CHECK_FALSE(spans_overlap(2, 4, 5, 7));
  CHECK(spans_overlap(3, 5, 2, 8));
}

TEST_CASE("overlap profile") {
  const std::vector<LabeledSpan> gold{{2, 5, "P"}, {7, 9, "C"}, {11, 14, "P"}};
  const std::vector<LabeledSpan> pred{{2, 5, "C"}, {4, 8, "P"}, {7, 9, "C"}, {8, 9, "C"}};
  const auto profile = span_overlap_profile(gold, pred);
  CHECK(profile == std::vector<OverlapPair>{{3, 1}, {2, 2}, {3, 0}});
  CHECK(span_overlap_profile(gold, gold) == std::vector<OverlapPair>{{3, 3}, {2, 2}, {3, 3}});
  const std::vector<LabeledSpan> bad{{3, 3, "P"}};
  CHECK_THROWS_AS(span_overlap_profile(bad, pred), DataError);

  // Component spans turn into half-open labelled spans with absolute targets.
  const auto comps = rel_to_abs_links(components_from_labels(essay_document()));
  const auto spans = labeled_spans(comps);
  REQUIRE(spans.size() == comps.size());
  CHECK(spans[0].b == comps[0].end + 1);
  const auto self = span_overlap_profile(spans, spans);
  for (const auto& pair : self) CHECK(pair.overlap == pair.length);
}

TEST_CASE("evaluation report") {
  ResultList r;
  auto& s = r.sentences.emplace_back();
  s.push_back({"a", "B-X", "I-X"});
  s.push_back({"b", "I-X", "I-X"});
  s.push_back({"c", "O", "O"});
  EvaluationOptions opts;
  const std::vector<std::string> names{"accuracy", "f1"};
  const auto raw = evaluate(r, names, opts);
  CHECK(raw[0].first == "accuracy");
  CHECK(raw[0].second == doctest::Approx(2.0 / 3.0));
  opts.postprocess = Postprocess::BioBegin;
  CHECK(evaluate(r, names, opts)[0].second == 1.0);
  opts.postprocess = Postprocess::BioOutside;
  CHECK(evaluate(r, names, opts)[0].second == doctest::Approx(1.0 / 3.0));
  const std::vector<std::string> unknown{"bleu"};
  CHECK_THROWS_AS(evaluate(r, unknown, opts), ConfigError);
  CHECK(higher_is_better("f1"));
  CHECK_FALSE(higher_is_better("ed_mean"));
  CHECK(parse_postprocess("am") == Postprocess::Am);
  CHECK_THROWS_AS(parse_postprocess("x"), ConfigError);
}

TEST_CASE("AM metrics through the report") {
  const auto doc = essay_document();
  ResultList r;
  auto& s = r.sentences.emplace_back();
  for (const auto& l : doc) s.push_back({"w", l.str(), l.str()});
  EvaluationOptions opts;
  opts.postprocess = Postprocess::Am;
  const std::vector<std::string> names{"c_f1_50", "c_f1_100", "r_f1_50", "r_f1_100"};
  for (const auto& [name, value] : evaluate(r, names, opts)) CHECK(value == 1.0);
}

TEST_CASE("results from a corpus") {
  const Corpus c = testing::synthetic_bio_corpus(3, 2);
  std::vector<std::vector<std::string>> pred;
  for (const auto& s : c.sentences) pred.emplace_back(s.size(), "O");
  const auto r = make_results(c, "ner", pred);
  CHECK(r.sentences.size() == 3);
  CHECK(r.sentences[0][0].predicted == "O");
  pred.pop_back();
  CHECK_THROWS_AS(make_results(c, "ner", pred), DataError);
}
