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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtltag/autodiff.hpp"
#include "mtltag/corpus_io.hpp"
#include "mtltag/embeddings.hpp"
#include "mtltag/rng.hpp"

namespace mtltag {

enum class CellKind { Simple, Lstm, Gru };
enum class HeadKind { Softmax, Crf };

std::string_view to_string(CellKind kind);
std::string_view to_string(HeadKind kind);
CellKind parse_cell_kind(std::string_view text);
HeadKind parse_head_kind(std::string_view text);

struct PrivateLayerSpec {
  std::size_t units = 0;
  Activation activation = Activation::Tanh;

  bool operator==(const PrivateLayerSpec&) const = default;
};

struct TaskSpec {
  std::string name;
  std::vector<std::string> labels;
  /// 1-based index of the shared layer feeding this task.
  std::size_t termination_layer = 1;
  std::vector<PrivateLayerSpec> private_layers;
  HeadKind head = HeadKind::Softmax;
  /// Dropout on the projection output.
  double dropout = 0.0;

  bool operator==(const TaskSpec&) const = default;
};

struct CharFeatureConfig {
  bool enabled = false;
  std::size_t embedding_dim = 16;
  std::size_t hidden_dim = 16;

  bool operator==(const CharFeatureConfig&) const = default;
};

struct DropoutConfig {
  double word = 0.0;
  double rnn_input = 0.0;
  double rnn_state = 0.0;
  double rnn_output = 0.0;
  bool variational = false;

  bool operator==(const DropoutConfig&) const = default;
};

struct NetworkConfig {
  CellKind cell = CellKind::Lstm;
  /// Hidden units per direction, one entry per shared layer.
  std::vector<std::size_t> shared_layers;
  bool shortcuts = false;
  CharFeatureConfig chars;
  DropoutConfig dropout;
  std::vector<TaskSpec> tasks;
  /// Word vector width when no pre-trained embeddings are given.
  std::size_t word_dim = 50;
  bool train_embeddings = true;

  /// Throws ConfigError on the first violated constraint.
  void validate() const;
  std::size_t task_index(std::string_view name) const;

  bool operator==(const NetworkConfig&) const = default;
};

struct Vocabularies {
  Vocabulary words = Vocabulary::with_specials();
  Vocabulary chars = Vocabulary::with_specials();
  std::vector<Vocabulary> labels;  // parallel to NetworkConfig::tasks

  bool operator==(const Vocabularies&) const = default;
};

/// Word vocabulary from the embeddings when given, else from the training
/// corpora; characters and labels from the corpora. Fills TaskSpec::labels
/// for tasks that declare none.
Vocabularies build_vocabularies(NetworkConfig& config,
                                std::span<const Corpus* const> corpora_per_task,
                                const EmbeddingSet* pretrained);

struct EncodedSentence {
  std::vector<int> words;
  std::vector<std::vector<int>> chars;

  std::size_t size() const noexcept { return words.size(); }
};

enum class Mode { Train, Eval };

/// Mode plus the random stream that draws dropout masks in training.
struct RunContext {
  Mode mode = Mode::Eval;
  Rng* rng = nullptr;

  bool training() const noexcept { return mode == Mode::Train; }
};

/// Inverted dropout mask (kept entries scaled by 1/(1-p)); draws nothing
/// and returns nullopt when p is zero or the context is not training.
std::optional<Tensor> dropout_mask(std::size_t rows, std::size_t cols, double p, RunContext& ctx);

// ---------------------------------------------------------------- recurrent

struct CellParams {
  CellKind kind = CellKind::Lstm;
  std::size_t hidden = 0;
  ParamId input = 0;      // k x (gates * hidden)
  ParamId recurrent = 0;  // hidden x (gates * hidden); GRU: update and reset gates only
  ParamId bias = 0;       // 1 x (gates * hidden)
  std::optional<ParamId> recurrent_candidate;  // GRU: hidden x hidden

  static std::size_t gates(CellKind kind);
};

struct CellState {
  NodeId h = 0;
  std::optional<NodeId> c;
};

/// Registers the weights of one cell under `prefix` with Glorot-uniform
/// weights, zero biases and an LSTM forget-gate bias of one.
CellParams add_cell_params(ParameterStore& params, const std::string& prefix, CellKind kind,
                           std::size_t input_width, std::size_t hidden, Rng& rng);

CellState initial_state(Graph& g, const CellParams& cell);

/// One step given the precomputed input term x W + b (1 x gates*hidden).
/// state_mask, when present, multiplies h before the recurrent product.
///   simple: h' = tanh(xW + b + hU)
///   LSTM:   i, f, o = sigmoid(.), g = tanh(.), c' = f*c + i*g, h' = o*tanh(c')
///   GRU:    z, r = sigmoid(.), n = tanh(xW_n + b_n + (r*h)U_n), h' = (1-z)*h + z*n
CellState cell_step(Graph& g, const CellParams& cell, NodeId input_term, const CellState& prev,
                    const std::optional<Tensor>& state_mask = std::nullopt);

/// Convenience form taking the raw 1 x k input row.
CellState cell_step_input(Graph& g, const CellParams& cell, NodeId x, const CellState& prev);

struct LayerDropout {
  double input = 0.0;
  double state = 0.0;
  double output = 0.0;
  bool variational = false;
};

/// Masks drawn by one bidirectional layer, for inspection in tests.
struct DropoutTrace {
  std::vector<Tensor> forward_state;
  std::vector<Tensor> backward_state;
};

/// Runs fwd left to right and bwd right to left over the rows of `inputs`
/// and concatenates both states per step: T x (2 * hidden).
NodeId bidirectional_layer(Graph& g, NodeId inputs, const CellParams& fwd, const CellParams& bwd,
                           const LayerDropout& dropout, RunContext& ctx,
                           DropoutTrace* trace = nullptr);

/// Final forward and final backward states of a bidirectional pass over a
/// character sequence (1 x 2*hidden); zeros for an empty word.
NodeId char_features(Graph& g, ParamId char_table, const CellParams& fwd, const CellParams& bwd,
                     std::span<const int> chars);

// -------------------------------------------------------------------- model

/// Parameters, vocabularies and configuration of a multi-task tagger.
class Model {
 public:
  static Model initialize(NetworkConfig config, Vocabularies vocab,
                          const EmbeddingSet* pretrained, Rng& rng);
  /// Wraps existing parameters; throws DataError unless every expected
  /// tensor is present with the expected shape.
  static Model from_parameters(NetworkConfig config, Vocabularies vocab, ParameterStore params);

  const NetworkConfig& config() const noexcept { return config_; }
  const Vocabularies& vocabularies() const noexcept { return vocab_; }
  const ParameterStore& parameters() const noexcept { return params_; }
  ParameterStore& parameters() noexcept { return params_; }

  EncodedSentence encode(const Sentence& sentence) const;
  /// Throws DataError for labels outside the task inventory.
  std::vector<int> encode_labels(const Sentence& sentence, std::size_t task) const;

  /// T x (word_dim [+ 2 * char hidden]) token representations.
  NodeId embed(Graph& g, const EncodedSentence& sentence, RunContext& ctx) const;
  /// Outputs of every shared layer, bottom first.
  std::vector<NodeId> shared_stack(Graph& g, NodeId embedded, RunContext& ctx) const;
  NodeId task_logits(Graph& g, std::size_t task, std::span<const NodeId> layers,
                     RunContext& ctx) const;
  NodeId task_loss(Graph& g, std::size_t task, const EncodedSentence& sentence,
                   std::span<const int> gold, RunContext& ctx) const;

  std::vector<int> predict(std::size_t task, const EncodedSentence& sentence) const;
  std::vector<std::string> predict_labels(std::size_t task, const Sentence& sentence) const;

  std::size_t embedding_width() const;
  /// Parameter ids used only by `task`.
  std::vector<ParamId> task_parameters(std::size_t task) const;

 private:
  struct TaskParams {
    std::vector<ParamId> private_layers;
    ParamId projection_w = 0;
    ParamId projection_b = 0;
    std::optional<ParamId> transitions, begin, end;
  };

  Model(NetworkConfig config, Vocabularies vocab) : config_(std::move(config)), vocab_(std::move(vocab)) {}
  void register_parameters(const EmbeddingSet* pretrained, Rng& rng);

  NetworkConfig config_;
  Vocabularies vocab_;
  ParameterStore params_;
  ParamId word_table_ = 0;
  std::optional<ParamId> char_table_;
  std::optional<CellParams> char_fwd_, char_bwd_;
  std::vector<std::pair<CellParams, CellParams>> shared_;
  std::vector<TaskParams> tasks_;
};

}  // namespace mtltag
