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


#include <benchmark/benchmark.h>

#include <random>

#include "mtltag/network.hpp"

using namespace mtltag;

namespace {

// One sentence of `length` distinct tokens with BIO-like labels.
Corpus sentence_corpus(std::size_t length) {
  Corpus c;
  Sentence s;
  for (std::size_t i = 0; i < length; ++i) {
    s.push_back({"w" + std::to_string(i), {{"ner", i % 3 == 0 ? "B-X" : i % 3 == 1 ? "I-X" : "O"}}});
  }
  c.sentences.push_back(std::move(s));
  return c;
}

Model make_model(const Corpus& corpus, CellKind cell, HeadKind head, std::size_t hidden, bool chars) {
  NetworkConfig c;
  c.cell = cell;
  c.shared_layers = {hidden, hidden};
  c.word_dim = 50;
  c.chars = {chars, 16, 16};
  TaskSpec t;
  t.name = "ner";
  t.termination_layer = 2;
  t.head = head;
  c.tasks = {t};
  const Corpus* corpora[] = {&corpus};
  const auto vocab = build_vocabularies(c, corpora, nullptr);
  Rng rng(1);
  return Model::initialize(c, vocab, nullptr, rng);
}

struct Setup {
  Corpus corpus;
  Model model;
  EncodedSentence sentence;
  std::vector<int> gold;

  Setup(CellKind cell, HeadKind head, std::size_t hidden, std::size_t length, bool chars)
      : corpus(sentence_corpus(length)),
        model(make_model(corpus, cell, head, hidden, chars)),
        sentence(model.encode(corpus.sentences[0])),
        gold(model.encode_labels(corpus.sentences[0], 0)) {}
};

// Args: hidden units, sentence length.
template <CellKind Cell, HeadKind Head>
void BM_LossForward(benchmark::State& state) {
  Setup s(Cell, Head, state.range(0), state.range(1), false);
  for (auto _ : state) {
    Graph g(s.model.parameters());
    RunContext ctx;
    benchmark::DoNotOptimize(g.value(s.model.task_loss(g, 0, s.sentence, s.gold, ctx))[0]);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

template <CellKind Cell, HeadKind Head>
void BM_LossForwardBackward(benchmark::State& state) {
  Setup s(Cell, Head, state.range(0), state.range(1), false);
  GradientSet grads(s.model.parameters());
  for (auto _ : state) {
    Graph g(s.model.parameters());
    RunContext ctx;
    g.backward(s.model.task_loss(g, 0, s.sentence, s.gold, ctx), &grads);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_PredictWithChars(benchmark::State& state) {
  Setup s(CellKind::Lstm, HeadKind::Crf, state.range(0), state.range(1), true);
  for (auto _ : state) benchmark::DoNotOptimize(s.model.predict(0, s.sentence));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

BENCHMARK(BM_LossForward<CellKind::Lstm, HeadKind::Softmax>)->ArgsProduct({{32, 100}, {20}});
BENCHMARK(BM_LossForward<CellKind::Lstm, HeadKind::Crf>)->ArgsProduct({{32, 100}, {20}});
BENCHMARK(BM_LossForwardBackward<CellKind::Lstm, HeadKind::Softmax>)->ArgsProduct({{32, 100}, {20}});
BENCHMARK(BM_LossForwardBackward<CellKind::Lstm, HeadKind::Crf>)->ArgsProduct({{32, 100}, {20}});
BENCHMARK(BM_LossForwardBackward<CellKind::Gru, HeadKind::Crf>)->ArgsProduct({{32, 100}, {20}});
BENCHMARK(BM_LossForwardBackward<CellKind::Simple, HeadKind::Crf>)->ArgsProduct({{32, 100}, {20}});
BENCHMARK(BM_PredictWithChars)->ArgsProduct({{32}, {20}});
