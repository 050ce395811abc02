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


// Acceptance suite. One PASS/FAIL line per criterion; the exit status is
// non-zero if any criterion fails. Criteria can be selected by number on
// the command line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mtltag/am_labels.hpp"
#include "mtltag/bio.hpp"
#include "mtltag/checkpoint.hpp"
#include "mtltag/crf.hpp"
#include "mtltag/error.hpp"
#include "mtltag/hyperopt.hpp"
#include "mtltag/label_stats.hpp"
#include "mtltag/metrics.hpp"
#include "mtltag/training.hpp"
#include "support/reference_network.hpp"
#include "support/test_support.hpp"

#ifdef MTLTAG_WITH_CLI
#include "commands.hpp"
#endif

using namespace mtltag;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Collects failed checks so a criterion can report the first few.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (ok) return;
    ++failed_;
    if (failures_.size() < 3) failures_.push_back(what);
  }
  bool ok() const { return failed_ == 0; }
  Verdict verdict(std::string summary) const {
    if (ok()) return {true, std::move(summary)};
    std::string d = summary + "; " + std::to_string(failed_) + "/" + std::to_string(count_) + " checks failed:";
    for (const auto& f : failures_) d += " [" + f + "]";
    return {false, d};
  }

 private:
  std::size_t count_ = 0, failed_ = 0;
  std::vector<std::string> failures_;
};

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& gen, bool integral) {
  std::uniform_real_distribution<double> real(-3.0, 3.0);
  std::uniform_int_distribution<int> whole(-1, 1);
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = integral ? whole(gen) : real(gen);
  return t;
}

double token_accuracy(const Model& m, std::size_t task, const Corpus& c, const std::string& name) {
  std::size_t right = 0, total = 0;
  for (const auto& s : c.sentences) {
    const auto p = m.predict_labels(task, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      right += p[i] == s[i].labels.at(name) ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(right) / static_cast<double>(total);
}

NetworkConfig one_task_tagger(std::size_t hidden) {
  NetworkConfig c;
  c.cell = CellKind::Lstm;
  c.shared_layers = {hidden};
  c.word_dim = 8;
  TaskSpec ner;
  ner.name = "ner";
  ner.termination_layer = 1;
  c.tasks = {ner};
  return c;
}

TrainConfig adam(std::size_t epochs, double rate, std::uint64_t seed) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 4;
  t.optimizer.learning_rate = rate;
  t.seed = seed;
  return t;
}

std::string checkpoint_bytes(const Model& m) {
  std::ostringstream out;
  save_model(m, out);
  return out.str();
}

// ----------------------------------------------------------------------- 1

Verdict gradients() {
  const auto start = Clock::now();
  Checks checks;
  double worst = 0.0, gap = 0.0;
  std::size_t configs = 0, entries = 0;
  for (CellKind cell : {CellKind::Simple, CellKind::Lstm, CellKind::Gru}) {
    for (HeadKind head : {HeadKind::Softmax, HeadKind::Crf}) {
      for (int variant = 0; variant < 8; ++variant) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
          NetworkConfig c;
          c.cell = cell;
          c.shared_layers = {3, 2};
          c.word_dim = 3;
          c.shortcuts = (variant & 1) != 0;
          c.chars = {(variant & 2) != 0, 2, 2};
          // The main task ends on the top layer with the head under test;
          // the auxiliary one ends below it with the other head.
          TaskSpec main;
          main.name = "ner";
          main.termination_layer = 2;
          main.head = head;
          if (variant & 4) main.private_layers = {{3, Activation::Tanh}, {2, Activation::Sigmoid}};
          TaskSpec aux;
          aux.name = "seg";
          aux.termination_layer = 1;
          aux.head = head == HeadKind::Crf ? HeadKind::Softmax : HeadKind::Crf;
          c.tasks = {main, aux};

          auto corpus = testing::with_segmentation_task(testing::synthetic_bio_corpus(6, seed), "ner", "seg");
          corpus.sentences[0].resize(3);
          corpus.sentences[1].resize(3);
          const Corpus* corpora[] = {&corpus, &corpus};
          const auto vocab = build_vocabularies(c, corpora, nullptr);
          Rng rng(seed);
          Model model = Model::initialize(c, vocab, nullptr, rng);
          std::vector<testing::TaskExample> examples;
          for (std::size_t k = 0; k < 2; ++k) {
            examples.push_back({k, model.encode(corpus.sentences[k]), model.encode_labels(corpus.sentences[k], k)});
          }
          const auto report = testing::reference_gradient_check(model, examples, 1e-5);
          ++configs;
          entries += report.checked;
          worst = std::max(worst, report.max_relative_error);
          gap = std::max(gap, report.forward_gap);
          checks.expect(report.max_relative_error <= 1e-6,
                        fmt("cell %d head %d variant %d seed %d: %.3g at %s", static_cast<int>(cell),
                            static_cast<int>(head), variant, static_cast<int>(seed), report.max_relative_error,
                            report.worst_parameter.c_str()));
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  checks.expect(elapsed < 120.0, fmt("runtime %.1f s", elapsed));
  return checks.verdict(fmt("%zu configs, %zu entries, max rel err %.2e (tol 1e-6), forward gap %.1e, %.1f s (limit 120 s)",
                            configs, entries, worst, gap, elapsed));
}

// ----------------------------------------------------------------------- 2

Verdict crf_exactness() {
  std::mt19937_64 gen(2024);
  Checks checks;
  double worst_z = 0.0, worst_sum = 0.0;
  std::size_t ties = 0;
  for (int draw = 0; draw < 200; ++draw) {
    const std::size_t steps = 1 + gen() % 5, labels = 1 + gen() % 4;
    // Every fourth draw uses scores in {-1, 0, 1} so that ties are common.
    const bool integral = draw % 4 == 0;
    const Tensor e = random_tensor(steps, labels, gen, integral);
    const Tensor tr = random_tensor(labels, labels, gen, integral);
    const Tensor b = random_tensor(1, labels, gen, integral);
    const Tensor en = random_tensor(1, labels, gen, integral);
    const auto brute = testing::brute_force_crf(e, tr, b, en);
    const double log_z = crf::log_partition(e, tr, b, en);
    worst_z = std::max(worst_z, std::abs(log_z - brute.log_z));
    checks.expect(std::abs(log_z - brute.log_z) <= 1e-10, fmt("draw %d: log Z off by %.3g", draw, log_z - brute.log_z));
    checks.expect(crf::viterbi(e, tr, b, en) == brute.best, fmt("draw %d: Viterbi path differs", draw));
    double sum = 0.0;
    for (double s : brute.all_scores) sum += std::exp(s - log_z);
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    checks.expect(std::abs(sum - 1.0) <= 1e-10, fmt("draw %d: probabilities sum to %.17g", draw, sum));
    ties += std::count(brute.all_scores.begin(), brute.all_scores.end(), brute.best_score) > 1 ? 1 : 0;
  }
  return checks.verdict(fmt("200 draws (%zu with tied optima), max |log Z err| %.1e (tol 1e-10), max |sum p - 1| %.1e (tol 1e-10)",
                            ties, worst_z, worst_sum));
}

// ----------------------------------------------------------------------- 3

std::vector<AmLabel> essay_document() {
  ColumnSpec spec;
  spec.label_columns["am"] = 1;
  const Corpus c = read_conll_file(testing::data_dir() / "am_essay.conll", spec);
  std::vector<std::string> labels;
  for (const auto& s : c.sentences) {
    for (const auto& t : s) labels.push_back(t.labels.at("am"));
  }
  return parse_am_sequence(labels);
}

Verdict am_oracle() {
  Checks checks;
  const auto doc = essay_document();
  const std::vector<std::vector<AmLabel>> docs{doc};
  for (AmTarget target : {AmTarget::Component, AmTarget::Relation}) {
    for (MatchLevel level : {MatchLevel::Approximate, MatchLevel::Exact}) {
      checks.expect(am_f1(docs, docs, target, level) == 1.0, "essay fixture below 1.0");
    }
  }
  std::mt19937_64 gen(500);
  std::size_t components = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto gold = testing::random_am_document(gen, 12);
    const auto pred = testing::perturb_am_document(gold, gen);
    components += components_from_labels(gold).size();
    for (AmTarget target : {AmTarget::Component, AmTarget::Relation}) {
      const bool rel = target == AmTarget::Relation;
      double f1[2] = {0.0, 0.0};
      for (MatchLevel level : {MatchLevel::Approximate, MatchLevel::Exact}) {
        const bool exact = level == MatchLevel::Exact;
        const auto mine = am_counts(gold, pred, target, level);
        const auto oracle = testing::oracle_am_counts(gold, pred, rel, exact);
        checks.expect(mine.tp == oracle.tp && mine.fp == oracle.fp && mine.fn == oracle.fn,
                      fmt("doc %d %s %s: tp/fp/fn %zu/%zu/%zu vs oracle %zu/%zu/%zu", trial, rel ? "R" : "C",
                          exact ? "100" : "50", mine.tp, mine.fp, mine.fn, oracle.tp, oracle.fp, oracle.fn));
        f1[exact ? 1 : 0] = mine.f1();
      }
      checks.expect(f1[1] <= f1[0], fmt("doc %d: F1(100%%) > F1(50%%)", trial));
    }
  }
  return checks.verdict(fmt("essay fixture 1.0 on C/R-F1 50/100; 500 random docs (%zu gold components) agree exactly with the matching oracle",
                            components));
}

// ----------------------------------------------------------------------- 4

Verdict majority_baseline() {
  std::vector<std::string> inventory{"I-EG"};
  for (int k = 0; k < 16; ++k) inventory.push_back("L" + std::to_string(k));
  std::vector<std::vector<std::string>> gold(1), pred(1);
  for (int i = 0; i < 7437; ++i) {
    gold[0].push_back(i < 2636 ? "I-EG" : inventory[1 + i % 16]);
    pred[0].push_back("I-EG");
  }
  const double f1 = 100.0 * token_prf(gold, pred, inventory).f1;
  const bool ok = std::abs(f1 - 3.079) <= 0.001;
  return {ok, fmt("macro F1 of constant I-EG = %.6f%% (target 3.079 +- 0.001)", f1)};
}

// ----------------------------------------------------------------------- 5

Verdict clipping() {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), expo(-4.0, 4.0);
  Checks checks;
  double worst_excess = -1.0, worst_cos = 0.0;
  std::size_t below = 0;
  for (int set = 0; set < 10000; ++set) {
    ParameterStore params;
    std::vector<ParamId> ids;
    for (std::size_t k = 1 + gen() % 4; k > 0; --k) {
      ids.push_back(params.add("p" + std::to_string(ids.size()), Tensor(1 + gen() % 5, 1 + gen() % 5)));
    }
    GradientSet grads(params);
    const double scale = std::pow(10.0, expo(gen));
    for (ParamId id : ids) {
      Tensor& g = grads.at(id);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * unit(gen);
    }
    const GradientSet before = grads;
    const double threshold = std::pow(10.0, expo(gen));
    const double pre = clip_global_norm(grads, threshold);

    long double pre_ref = 0, post_sq = 0, dot = 0;
    for (ParamId id : ids) {
      for (std::size_t i = 0; i < grads.at(id).size(); ++i) {
        const long double a = before.find(id)->operator[](i), b = grads.at(id)[i];
        pre_ref += a * a;
        post_sq += b * b;
        dot += a * b;
      }
    }
    const double post = static_cast<double>(std::sqrt(post_sq));
    checks.expect(std::abs(pre - static_cast<double>(std::sqrt(pre_ref))) <= 1e-12 * pre,
                  fmt("set %d: reported norm %.17g", set, pre));
    // Relative to the threshold, which spans eight orders of magnitude.
    const double excess = (post - threshold) / threshold;
    worst_excess = std::max(worst_excess, excess);
    checks.expect(post <= threshold * (1.0 + 1e-12), fmt("set %d: post-clip norm %.17g over %.17g", set, post, threshold));
    const double cosine = static_cast<double>(dot / (std::sqrt(pre_ref) * std::sqrt(post_sq)));
    worst_cos = std::max(worst_cos, std::abs(cosine - 1.0));
    checks.expect(std::abs(cosine - 1.0) <= 1e-12, fmt("set %d: cosine %.17g", set, cosine));
    if (pre < threshold) {
      ++below;
      bool same = true;
      for (ParamId id : ids) same = same && grads.at(id) == *before.find(id);
      checks.expect(same, fmt("set %d: gradients changed below the threshold", set));
    }
  }
  return checks.verdict(fmt("10000 sets (%zu below threshold, left bitwise unchanged), max (post-thr)/thr %.1e (tol 1e-12), max |cos-1| %.1e (tol 1e-12)",
                            below, worst_excess, worst_cos));
}

// ----------------------------------------------------------------------- 6

// Any per-token label a tagger could emit, without regard to its neighbours.
AmLabel random_token_label(std::mt19937_64& gen) {
  AmLabel l;
  const auto roll = gen() % 10;
  if (roll < 2) return l;
  l.bio = gen() % 2 == 0 ? BioPrefix::B : BioPrefix::I;
  if (roll < 6) {
    l.type = ComponentType::Premise;
    int d = static_cast<int>(gen() % 11) - 5;
    l.distance = d == 0 ? 1 : d;
    l.stance = gen() % 2 == 0 ? Stance::Support : Stance::Attack;
  } else if (roll < 9) {
    l.type = ComponentType::Claim;
    l.stance = gen() % 2 == 0 ? Stance::For : Stance::Against;
  } else {
    l.type = ComponentType::MajorClaim;
  }
  return l;
}

Verdict postprocess_totality() {
  std::mt19937_64 gen(6);
  Checks checks;
  const std::vector<std::string> bio_pool{"O", "B-X", "I-X", "B-Y", "I-Y"};
  for (int n = 0; n < 10000; ++n) {
    const std::size_t len = 1 + gen() % 25;
    std::vector<AmLabel> raw;
    for (std::size_t i = 0; i < len; ++i) raw.push_back(random_token_label(gen));
    const auto fixed = am_postprocess(raw);
    bool labels_ok = fixed.size() == raw.size();
    for (const auto& l : fixed) labels_ok = labels_ok && !am_invariant_violation(l);
    checks.expect(labels_ok, fmt("sequence %d: a label violates an invariant", n));
    const auto problems = validate_am_structure(fixed);
    checks.expect(problems.empty(), fmt("sequence %d: %s", n, problems.empty() ? "" : problems.front().c_str()));
    if (problems.empty()) {
      // Links in range: the absolute target is a component other than the source.
      const auto comps = components_from_labels(fixed);
      for (std::size_t c = 0; c < comps.size(); ++c) {
        if (!comps[c].distance) continue;
        const long target = static_cast<long>(c) + *comps[c].distance;
        checks.expect(target >= 0 && target < static_cast<long>(comps.size()) && target != static_cast<long>(c),
                      fmt("sequence %d: component %zu links to %ld of %zu", n, c, target, comps.size()));
      }
    }
    checks.expect(am_postprocess(fixed) == fixed, fmt("sequence %d: AM repair is not idempotent", n));

    std::vector<std::string> bio;
    for (std::size_t i = 0; i < len; ++i) bio.push_back(bio_pool[gen() % bio_pool.size()]);
    for (BioRepair variant : {BioRepair::ToOutside, BioRepair::ToBegin}) {
      const auto repaired = correct_bio(bio, variant);
      checks.expect(validate_bio(repaired).empty(), fmt("sequence %d: repaired BIO is invalid", n));
      checks.expect(correct_bio(repaired, variant) == repaired, fmt("sequence %d: BIO repair is not idempotent", n));
    }
  }
  return checks.verdict("10000 random AM and BIO sequences: repaired output valid, links in range, repairs idempotent");
}

// ----------------------------------------------------------------------- 7

#ifdef MTLTAG_WITH_CLI
// The same single-task run through the command-line configuration path.
bool cli_run_matches(const Corpus& corpus, const NetworkConfig& net, const TrainConfig& cfg, std::string& note) {
  const auto dir = testing::scratch_dir("acceptance-stl");
  {
    std::ofstream out(dir / "train.conll");
    const std::string tasks[] = {"ner"};
    write_conll(out, corpus, tasks);
  }
  std::ofstream(dir / "run.yaml") << fmt(
      "network: {cell: lstm, shared_layers: [%zu]}\n"
      "embeddings: {dim: %zu}\n"
      "tasks:\n  - {name: ner, train: train.conll, label_column: 1}\n"
      "training: {epochs: %zu, batch_size: %zu, optimizer: adam, learning_rate: %.17g, seed: %llu}\n",
      net.shared_layers[0], net.word_dim, cfg.epochs, cfg.batch_size, cfg.optimizer.learning_rate,
      static_cast<unsigned long long>(cfg.seed));
  const auto via_cli = cli::run_training(cli::load_run_config(dir / "run.yaml"), dir / "out");
  const TaskData data[] = {{&corpus, nullptr}};
  const auto direct = train(net, data, cfg);
  bool same = via_cli.result.log.size() == direct.log.size();
  for (std::size_t e = 0; same && e < direct.log.size(); ++e) same = via_cli.result.log[e].task_loss == direct.log[e].task_loss;
  same = same && checkpoint_bytes(via_cli.result.model) == checkpoint_bytes(direct.model);
  note = "configuration-file run equals library run bitwise";
  return same;
}
#endif

Verdict overfit_and_mtl() {
  const auto start = Clock::now();
  Checks checks;
  const Corpus corpus = testing::synthetic_bio_corpus(50, 77);
  std::set<std::string> labels;
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s) labels.insert(t.labels.at("ner"));
  }
  checks.expect(labels.size() == 3, "corpus does not have 3 labels");

  // Single task. Train accuracy is the dev score; a perfect score cannot be
  // beaten, so early stopping ends the run soon after reaching it.
  const TaskData stl[] = {{&corpus, nullptr}};
  TrainConfig cfg = adam(200, 0.01, 11);
  cfg.early_stopping = EarlyStoppingConfig{"ner", "accuracy", 5};
  std::optional<std::size_t> reached;
  TrainHooks hooks;
  hooks.dev_score = [&](std::size_t epoch, const Model& m) {
    const double acc = token_accuracy(m, 0, corpus, "ner");
    if (!reached && acc >= 0.99) reached = epoch;
    return acc;
  };
  const auto result = train(one_task_tagger(16), stl, cfg, nullptr, hooks);
  const double final_acc = token_accuracy(result.model, 0, corpus, "ner");
  checks.expect(reached.has_value(), "99% train accuracy not reached in 200 epochs");
  checks.expect(final_acc >= 0.99, fmt("restored model accuracy %.4f", final_acc));
  const double stl_seconds = seconds_since(start);

  // Multi-task with the segmentation projection of the same labels.
  const Corpus both = testing::with_segmentation_task(corpus, "ner", "seg");
  NetworkConfig mtl = one_task_tagger(16);
  TaskSpec seg;
  seg.name = "seg";
  seg.termination_layer = 1;
  mtl.tasks.push_back(seg);
  const TaskData mtl_data[] = {{&both, nullptr}, {&both, nullptr}};
  const auto joint = train(mtl, mtl_data, adam(30, 0.01, 12));
  bool finite = true;
  for (const auto& r : joint.log) {
    for (double l : r.task_loss) finite = finite && std::isfinite(l);
  }
  checks.expect(finite, "non-finite MTL loss");
  for (std::size_t t = 0; t < 2; ++t) {
    checks.expect(joint.log.back().task_loss[t] < 0.5 * joint.log.front().task_loss[t],
                  fmt("MTL task %zu loss %.4g -> %.4g", t, joint.log.front().task_loss[t], joint.log.back().task_loss[t]));
  }
  const double mtl_acc = token_accuracy(joint.model, 0, both, "ner");

  // A multi-task setup holding one task is single-task learning.
  std::string note = "one-task MTL run equals STL run bitwise";
  const TrainConfig small = adam(5, 0.01, 13);
#ifdef MTLTAG_WITH_CLI
  checks.expect(cli_run_matches(corpus, one_task_tagger(8), small, note), "CLI single-task run differs");
#endif
  {
    const auto a = train(one_task_tagger(8), stl, small);
    const auto b = train(one_task_tagger(8), stl, small);
    checks.expect(checkpoint_bytes(a.model) == checkpoint_bytes(b.model), "repeat single-task runs differ");
  }
  const double elapsed = seconds_since(start);
  checks.expect(elapsed < 300.0, fmt("runtime %.1f s", elapsed));
  return checks.verdict(fmt("STL reached >= 99%% train accuracy at epoch %zu (limit 200, final %.4f) in %.1f s; MTL losses finite and falling, ner accuracy %.4f; %s; total %.1f s (limit 300 s)",
                            reached.value_or(0), final_acc, stl_seconds, mtl_acc, note.c_str(), elapsed));
}

// ----------------------------------------------------------------------- 8

// Expected (best epoch, epochs run) for a scripted curve, written
// independently of EarlyStopping.
std::pair<std::size_t, std::size_t> expected_stop(const std::vector<double>& curve, std::size_t patience) {
  std::size_t best = 0;
  for (std::size_t e = 1; e <= curve.size(); ++e) {
    if (best == 0 || curve[e - 1] > curve[best - 1]) best = e;
    if (e - best >= patience) return {best, e};
  }
  return {best, curve.size()};
}

Verdict early_stopping_and_determinism() {
  Checks checks;
  const Corpus tiny = testing::synthetic_bio_corpus(4, 8);
  const TaskData data[] = {{&tiny, nullptr}};
  std::mt19937_64 gen(8);
  std::size_t stopped_early = 0;
  for (int run = 0; run < 100; ++run) {
    const std::size_t epochs = 4 + gen() % 12, patience = 1 + gen() % 5;
    std::vector<double> curve(epochs);
    // Coarse values so that ties with the best score happen.
    for (auto& v : curve) v = static_cast<double>(gen() % 6) / 5.0;
    TrainConfig cfg = adam(epochs, 0.01, 1 + run);
    cfg.early_stopping = EarlyStoppingConfig{"ner", "f1", patience};
    std::vector<std::size_t> stored;
    TrainHooks hooks;
    hooks.dev_score = [&](std::size_t epoch, const Model&) { return curve.at(epoch - 1); };
    hooks.on_checkpoint = [&](const Model&, std::size_t epoch) { stored.push_back(epoch); };
    const auto result = train(one_task_tagger(2), data, cfg, nullptr, hooks);
    const auto [best, ran] = expected_stop(curve, patience);
    stopped_early += ran < epochs ? 1 : 0;
    checks.expect(result.best_epoch == best && result.log.size() == ran,
                  fmt("run %d: best %zu ran %zu, expected best %zu ran %zu", run, result.best_epoch,
                      result.log.size(), best, ran));
    checks.expect(!stored.empty() && stored.back() == best, fmt("run %d: last checkpoint not at the best epoch", run));
    if (ran < epochs) checks.expect(ran == best + patience, fmt("run %d: stopped %zu epochs after the best", run, ran - best));
  }

  // Determinism with dropout, clipping and two tasks.
  const Corpus corpus = testing::with_segmentation_task(testing::synthetic_bio_corpus(20, 18), "ner", "seg");
  NetworkConfig net = one_task_tagger(6);
  net.dropout = {0.2, 0.2, 0.2, 0.2, true};
  TaskSpec seg;
  seg.name = "seg";
  seg.termination_layer = 1;
  seg.head = HeadKind::Crf;
  net.tasks.push_back(seg);
  const TaskData two[] = {{&corpus, &corpus}, {&corpus, nullptr, 0.5}};
  TrainConfig cfg = adam(6, 0.01, 21);
  cfg.clip_threshold = 1.0;
  cfg.early_stopping = EarlyStoppingConfig{"ner", "f1", 2};
  std::vector<std::string> ckpt[2];
  std::vector<TrainResult> runs;
  for (int k = 0; k < 2; ++k) {
    TrainHooks hooks;
    hooks.on_checkpoint = [&, k](const Model& m, std::size_t) { ckpt[k].push_back(checkpoint_bytes(m)); };
    runs.push_back(train(net, two, cfg, nullptr, hooks));
  }
  double worst = 0.0;
  checks.expect(runs[0].log.size() == runs[1].log.size(), "equal-seed runs differ in length");
  for (std::size_t e = 0; e < std::min(runs[0].log.size(), runs[1].log.size()); ++e) {
    for (std::size_t t = 0; t < 2; ++t) worst = std::max(worst, std::abs(runs[0].log[e].task_loss[t] - runs[1].log[e].task_loss[t]));
  }
  checks.expect(worst <= 1e-12, fmt("per-epoch losses differ by %.3g", worst));
  checks.expect(ckpt[0] == ckpt[1] && !ckpt[0].empty(), "checkpoints differ");
  checks.expect(checkpoint_bytes(runs[0].model) == checkpoint_bytes(runs[1].model), "final models differ");
  return checks.verdict(fmt("100 scripted curves (%zu stopped early) match the stopping rule; equal seeds: max loss diff %.1e (tol 1e-12), %zu identical checkpoints",
                            stopped_early, worst, ckpt[0].size()));
}

// ----------------------------------------------------------------------- 9

Verdict s2s_metrics() {
  Checks checks;
  const auto chars = [](const std::string& s) {
    std::vector<std::string> v;
    for (char c : s) v.emplace_back(1, c);
    return v;
  };
  const std::size_t kitten = edit_distance("kitten", "sitting");
  checks.expect(kitten == 3 && testing::reference_edit_distance(chars("kitten"), chars("sitting")) == 3,
                fmt("kitten/sitting = %zu", kitten));

  std::mt19937_64 gen(9);
  auto word = [&] {
    std::vector<std::string> w(gen() % 7);
    for (auto& ch : w) ch = std::string(1, static_cast<char>('a' + gen() % 3));
    return w;
  };
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = word(), b = word(), c = word();
    const std::size_t ab = edit_distance(a, b);
    checks.expect(ab == testing::reference_edit_distance(a, b), fmt("trial %d: differs from the DP oracle", trial));
    checks.expect(ab == edit_distance(b, a), fmt("trial %d: not symmetric", trial));
    checks.expect((ab == 0) == (a == b), fmt("trial %d: identity of indiscernibles", trial));
    checks.expect(edit_distance(a, c) <= ab + edit_distance(b, c), fmt("trial %d: triangle inequality", trial));
  }

  // Aligned rows for "exiting": Celex and Combilex, then CMU.
  const std::vector<std::pair<std::vector<std::string>, std::string>> rows{
      {{"E", "g_z", "@", "t", "I", "ε", "N"}, "E g z @ t I N"},
      {{"EH", "G_Z", "AH", "T", "IH", "NG", "ε"}, "EH G Z AH T IH NG"},
  };
  for (const auto& [aligned, unaligned] : rows) {
    const auto stripped = strip_alignment_symbols(aligned, "ε", "_");
    checks.expect(stripped == unaligned, "exiting: '" + stripped + "'");
  }

  // Word accuracy is the share of words at edit distance zero.
  ResultList results;
  std::size_t exact = 0;
  std::vector<double> distances;
  for (int w = 0; w < 200; ++w) {
    const auto gold = word(), noisy = word();
    const auto pred = gen() % 2 == 0 ? gold : noisy;
    if (gold.empty()) continue;
    auto& s = results.sentences.emplace_back();
    for (std::size_t i = 0; i < gold.size(); ++i) s.push_back({"x", gold[i], i < pred.size() ? pred[i] : "ε"});
    std::vector<std::string> p;
    for (const auto& t : s) {
      if (t.predicted != "ε") p.push_back(t.predicted);
    }
    const std::size_t d = testing::reference_edit_distance(p, gold);
    exact += d == 0 ? 1 : 0;
    distances.push_back(static_cast<double>(d));
  }
  const auto scores = s2s_scores(results, "ε", "_");
  const double n = static_cast<double>(distances.size());
  const double mean = std::accumulate(distances.begin(), distances.end(), 0.0) / n;
  checks.expect(scores.word_accuracy == static_cast<double>(exact) / n, fmt("WACC %.17g", scores.word_accuracy));
  checks.expect(std::abs(scores.ed_mean - mean) <= 1e-12, fmt("mean edit distance %.17g vs %.17g", scores.ed_mean, mean));
  ResultList perfect = results;
  for (auto& s : perfect.sentences) {
    for (auto& t : s) t.predicted = t.gold;
  }
  const auto best = s2s_scores(perfect, "ε", "_");
  checks.expect(best.word_accuracy == 1.0 && best.ed_mean == 0.0, "perfect prediction does not score WACC 1");
  return checks.verdict(fmt("kitten/sitting = 3; 2000 axiom triples hold; 'exiting' rows strip exactly; WACC %.3f = %zu/%zu exact words",
                            scores.word_accuracy, exact, distances.size()));
}

// ---------------------------------------------------------------------- 10

Verdict hyperopt_protocol() {
  const auto start = Clock::now();
  Checks checks;
  const Corpus train_set = testing::synthetic_bio_corpus(24, 101);
  const Corpus dev_set = testing::synthetic_bio_corpus(10, 102);

  SearchSpace space;
  space.variables["cell"] = Interval::list({"lstm", "gru", "simple"});
  space.variables["units"] = Interval::discrete(2, 8);
  space.variables["rate"] = Interval::continuous(0.0005, 0.02);
  const std::string text = "cell: ${cell}\nunits: ${units}\nrate: ${rate}\n";
  const std::size_t failing_trial = 6;

  std::size_t executed = 0;
  const TrialRunner runner = [&](const std::string& rendered, std::uint64_t seed, std::size_t trial,
                                 std::size_t seed_index) {
    ++executed;
    std::istringstream in(rendered);
    std::string key, cell;
    std::size_t units = 0;
    double rate = 0.0;
    in >> key >> cell >> key >> units >> key >> rate;
    NetworkConfig net = one_task_tagger(units);
    net.cell = parse_cell_kind(cell);
    const TaskData data[] = {{&train_set, nullptr}};
    const auto result = train(net, data, adam(1, rate, seed));
    if (trial == failing_trial && seed_index == 2) throw NumericError("injected failure");
    const auto scored = make_results(dev_set, "ner", predict_corpus(result.model, 0, dev_set));
    const std::string metric[] = {"f1"};
    return evaluate(scored, metric, {}).front().second;
  };

  SearchConfig cfg;
  cfg.trials = 10;
  cfg.seeds_per_trial = 3;
  cfg.master_seed = 2017;
  const auto a = run_search(text, space, cfg, runner);
  const std::size_t first_executed = executed;
  const auto b = run_search(text, space, cfg, runner);

  checks.expect(a.runs == 30 && first_executed == 30, fmt("%zu runs reported, %zu executed", a.runs, first_executed));
  checks.expect(a.trials[failing_trial].failure.has_value(), "injected failure not recorded");
  std::vector<std::size_t> expected;
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    if (!a.trials[t].failure) expected.push_back(t);
  }
  const auto mean = [&](std::size_t t) {
    return std::accumulate(a.trials[t].scores.begin(), a.trials[t].scores.end(), 0.0) / 3.0;
  };
  std::stable_sort(expected.begin(), expected.end(), [&](std::size_t x, std::size_t y) { return mean(x) > mean(y); });
  checks.expect(a.ranking == expected, "ranking is not by mean dev score");
  const double spread = expected.empty() ? 0.0 : mean(expected.front()) - mean(expected.back());
  checks.expect(a.winner && *a.winner == expected.front(), "winner is not the best mean");

  bool same = a.ranking == b.ranking && a.runs == b.runs && a.winner == b.winner;
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    same = same && a.trials[t].assignment == b.trials[t].assignment && a.trials[t].seeds == b.trials[t].seeds &&
           a.trials[t].scores == b.trials[t].scores && a.trials[t].failure == b.trials[t].failure;
  }
  checks.expect(same, "second search differs");
  std::ostringstream ra, rb;
  write_search_report(ra, a);
  write_search_report(rb, b);
  checks.expect(ra.str() == rb.str(), "reports differ");
  const double elapsed = seconds_since(start);
  checks.expect(elapsed < 900.0, fmt("runtime %.1f s", elapsed));
  return checks.verdict(fmt("10 trials x 3 seeds = %zu runs, trial %zu failed and was skipped, winner trial %zu (mean %.4f, spread %.4f), bit-identical rerun; %.1f s for both searches (limit 900 s)",
                            a.runs, failing_trial, a.winner.value_or(0), a.winner ? mean(*a.winner) : 0.0, spread, elapsed));
}

// ---------------------------------------------------------------------- 11

Verdict statistics() {
  Checks checks;
  LabelDistribution uniform;
  for (const char* l : {"a", "b", "c", "d"}) uniform.add(l, 25);
  const double entropy = label_entropy(uniform);
  checks.expect(entropy == 2.0, fmt("uniform-4 entropy %.17g", entropy));

  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> sample(100000);
  for (auto& x : sample) x = normal(gen);
  const double k = kurtosis(sample);
  checks.expect(std::abs(k - 3.0) <= 0.1, fmt("normal kurtosis %.4f", k));

  const double cv = coefficient_of_variation(std::vector<double>{1, 2, 3});
  checks.expect(std::abs(cv - 0.4082) <= 1e-4, fmt("cv %.6f", cv));

  // Gold [a, b) against predicted [c, d), one instance per case, with the
  // overlap counted by hand.
  struct Case {
    const char* name;
    std::size_t a, b, c, d, overlap;
  };
  const Case cases[] = {
      {"same", 2, 6, 2, 6, 4},    // b - a
      {"left", 4, 9, 1, 6, 2},    // d - a
      {"right", 1, 6, 4, 9, 2},   // b - c
      {"inside", 3, 5, 1, 9, 2},  // b - a
      {"covers", 1, 9, 3, 6, 3},  // d - c
  };
  for (const auto& c : cases) {
    const std::size_t got = overlap_length(c.a, c.b, c.c, c.d);
    checks.expect(got == c.overlap, fmt("%s: %zu, expected %zu", c.name, got, c.overlap));
  }
  return checks.verdict(fmt("entropy %.1f; kurtosis %.4f (3 +- 0.1); cv %.6f (0.4082 +- 1e-4); 5 overlap cases exact", entropy,
                            k, cv));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradients},
      {"CRF exactness", crf_exactness},
      {"AM metric oracle", am_oracle},
      {"majority baseline", majority_baseline},
      {"norm clipping", clipping},
      {"post-processing totality", postprocess_totality},
      {"overfit, MTL smoke and STL equality", overfit_and_mtl},
      {"early stopping and determinism", early_stopping_and_determinism},
      {"S2S metrics", s2s_metrics},
      {"hyperopt protocol", hyperopt_protocol},
      {"statistics", statistics},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::strtoul(argv[i], nullptr, 10));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << ": " << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
