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

#include "mtltag/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mtltag/crf.hpp"
#include "mtltag/error.hpp"

namespace mtltag {

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::Simple: return "simple";
    case CellKind::Lstm: return "lstm";
    case CellKind::Gru: return "gru";
  }
  return "?";
}

std::string_view to_string(HeadKind kind) {
  return kind == HeadKind::Crf ? "crf" : "softmax";
}

CellKind parse_cell_kind(std::string_view text) {
  if (text == "simple" || text == "rnn") return CellKind::Simple;
  if (text == "lstm") return CellKind::Lstm;
  if (text == "gru") return CellKind::Gru;
  throw ConfigError("unknown cell type '" + std::string(text) + "' (expected simple, lstm or gru)");
}

HeadKind parse_head_kind(std::string_view text) {
  if (text == "softmax") return HeadKind::Softmax;
  if (text == "crf") return HeadKind::Crf;
  throw ConfigError("unknown head '" + std::string(text) + "' (expected softmax or crf)");
}

namespace {

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError(what + " must lie in [0, 1), got " + std::to_string(p));
  }
}

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

// Row mask drawn once and repeated over all rows.
std::optional<Tensor> tiled_mask(std::size_t rows, std::size_t cols, double p, RunContext& ctx) {
  auto one = dropout_mask(1, cols, p, ctx);
  if (!one) return std::nullopt;
  Tensor out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(one->values().begin(), one->values().end(), out.row_span(r).begin());
  }
  return out;
}

NodeId apply_mask(Graph& g, NodeId x, std::optional<Tensor> mask) {
  return mask ? g.mul_const(x, std::move(*mask)) : x;
}

}  // namespace

void NetworkConfig::validate() const {
  if (shared_layers.empty()) throw ConfigError("network needs at least one shared layer");
  for (std::size_t l = 0; l < shared_layers.size(); ++l) {
    if (shared_layers[l] == 0) {
      throw ConfigError("shared layer " + std::to_string(l + 1) + " has zero units");
    }
  }
  if (tasks.empty()) throw ConfigError("no tasks configured");
  if (word_dim == 0) throw ConfigError("word embedding dimension must be positive");
  if (chars.enabled && (chars.embedding_dim == 0 || chars.hidden_dim == 0)) {
    throw ConfigError("character features need positive dimensions");
  }
  check_probability(dropout.word, "word dropout");
  check_probability(dropout.rnn_input, "rnn input dropout");
  check_probability(dropout.rnn_state, "rnn state dropout");
  check_probability(dropout.rnn_output, "rnn output dropout");

  std::set<std::string, std::less<>> names;
  std::size_t deepest = 0;
  for (const TaskSpec& task : tasks) {
    if (task.name.empty()) throw ConfigError("task without a name");
    if (!names.insert(task.name).second) throw ConfigError("duplicate task '" + task.name + "'");
    if (task.termination_layer < 1 || task.termination_layer > shared_layers.size()) {
      throw ConfigError("task '" + task.name + "': termination layer " +
                        std::to_string(task.termination_layer) + " outside 1.." +
                        std::to_string(shared_layers.size()));
    }
    deepest = std::max(deepest, task.termination_layer);
    for (const PrivateLayerSpec& layer : task.private_layers) {
      if (layer.units == 0) throw ConfigError("task '" + task.name + "': private layer with zero units");
    }
    check_probability(task.dropout, "task '" + task.name + "' dropout");
  }
  if (deepest != shared_layers.size()) {
    throw ConfigError("shared stack has " + std::to_string(shared_layers.size()) +
                      " layers but the deepest task terminates at layer " + std::to_string(deepest));
  }
}

std::size_t NetworkConfig::task_index(std::string_view name) const {
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].name == name) return i;
  }
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

Vocabularies build_vocabularies(NetworkConfig& config,
                                std::span<const Corpus* const> corpora_per_task,
                                const EmbeddingSet* pretrained) {
  if (corpora_per_task.size() != config.tasks.size()) {
    throw std::invalid_argument("one training corpus per task expected");
  }
  Vocabularies vocab;
  if (pretrained != nullptr) {
    for (const auto& [word, vec] : pretrained->vectors) vocab.words.add(word);
  }
  for (std::size_t t = 0; t < config.tasks.size(); ++t) {
    TaskSpec& task = config.tasks[t];
    Vocabulary labels;
    for (const std::string& label : task.labels) labels.add(label);
    const bool collect = task.labels.empty();
    for (const Sentence& sentence : corpora_per_task[t]->sentences) {
      for (const Token& token : sentence) {
        if (pretrained == nullptr) vocab.words.add(token.surface);
        for (const std::string& ch : utf8_chars(token.surface)) vocab.chars.add(ch);
        if (collect) {
          const auto it = token.labels.find(task.name);
          if (it == token.labels.end()) {
            throw DataError("token '" + token.surface + "' has no label for task '" + task.name + "'");
          }
          labels.add(it->second);
        }
      }
    }
    if (labels.size() == 0) throw DataError("task '" + task.name + "' has no labels");
    if (collect) task.labels = labels.entries();
    vocab.labels.push_back(std::move(labels));
  }
  if (pretrained != nullptr) config.word_dim = pretrained->dim;
  return vocab;
}

std::optional<Tensor> dropout_mask(std::size_t rows, std::size_t cols, double p, RunContext& ctx) {
  if (p <= 0.0 || !ctx.training()) return std::nullopt;
  if (ctx.rng == nullptr) throw std::logic_error("training context without a random stream");
  Tensor mask(rows, cols);
  const double kept = 1.0 / (1.0 - p);
  for (auto& v : mask.values()) v = ctx.rng->keep(p) ? kept : 0.0;
  return mask;
}

// ---------------------------------------------------------------- recurrent

std::size_t CellParams::gates(CellKind kind) {
  switch (kind) {
    case CellKind::Simple: return 1;
    case CellKind::Lstm: return 4;
    case CellKind::Gru: return 3;
  }
  return 1;
}

CellParams add_cell_params(ParameterStore& params, const std::string& prefix, CellKind kind,
                           std::size_t input_width, std::size_t hidden, Rng& rng) {
  const std::size_t width = CellParams::gates(kind) * hidden;
  CellParams cell;
  cell.kind = kind;
  cell.hidden = hidden;
  cell.input = params.add(prefix + "/W", glorot(input_width, width, rng));
  if (kind == CellKind::Gru) {
    cell.recurrent = params.add(prefix + "/U", glorot(hidden, 2 * hidden, rng));
    cell.recurrent_candidate = params.add(prefix + "/Un", glorot(hidden, hidden, rng));
  } else {
    cell.recurrent = params.add(prefix + "/U", glorot(hidden, width, rng));
  }
  Tensor bias(1, width);
  if (kind == CellKind::Lstm) {
    for (std::size_t j = hidden; j < 2 * hidden; ++j) bias(0, j) = 1.0;
  }
  cell.bias = params.add(prefix + "/b", std::move(bias));
  return cell;
}

CellState initial_state(Graph& g, const CellParams& cell) {
  CellState state;
  state.h = g.constant(Tensor(1, cell.hidden));
  if (cell.kind == CellKind::Lstm) state.c = g.constant(Tensor(1, cell.hidden));
  return state;
}

CellState cell_step(Graph& g, const CellParams& cell, NodeId input_term, const CellState& prev,
                    const std::optional<Tensor>& state_mask) {
  const std::size_t h = cell.hidden;
  const NodeId h_in = state_mask ? g.mul_const(prev.h, *state_mask) : prev.h;
  CellState next;
  switch (cell.kind) {
    case CellKind::Simple:
      next.h = g.tanh(g.add(input_term, g.matmul(h_in, g.param(cell.recurrent))));
      break;
    case CellKind::Lstm: {
      if (!prev.c) throw std::logic_error("LSTM step without a cell state");
      const NodeId z = g.add(input_term, g.matmul(h_in, g.param(cell.recurrent)));
      const NodeId i = g.sigmoid(g.slice_cols(z, 0, h));
      const NodeId f = g.sigmoid(g.slice_cols(z, h, h));
      const NodeId o = g.sigmoid(g.slice_cols(z, 2 * h, h));
      const NodeId cand = g.tanh(g.slice_cols(z, 3 * h, h));
      next.c = g.add(g.mul(f, *prev.c), g.mul(i, cand));
      next.h = g.mul(o, g.tanh(*next.c));
      break;
    }
    case CellKind::Gru: {
      const NodeId zr =
          g.sigmoid(g.add(g.slice_cols(input_term, 0, 2 * h), g.matmul(h_in, g.param(cell.recurrent))));
      const NodeId z = g.slice_cols(zr, 0, h);
      const NodeId r = g.slice_cols(zr, h, h);
      const NodeId n = g.tanh(g.add(g.slice_cols(input_term, 2 * h, h),
                                    g.matmul(g.mul(r, h_in), g.param(*cell.recurrent_candidate))));
      next.h = g.add(prev.h, g.mul(z, g.sub(n, prev.h)));
      break;
    }
  }
  return next;
}

CellState cell_step_input(Graph& g, const CellParams& cell, NodeId x, const CellState& prev) {
  const NodeId term = g.add(g.matmul(x, g.param(cell.input)), g.param(cell.bias));
  return cell_step(g, cell, term, prev);
}

namespace {

std::vector<NodeId> run_direction(Graph& g, NodeId inputs, const CellParams& cell, bool reverse,
                                  const LayerDropout& dropout, RunContext& ctx,
                                  std::vector<Tensor>* trace) {
  const std::size_t steps = g.value(inputs).rows();
  const std::size_t width = g.value(inputs).cols();
  const NodeId x = apply_mask(g, inputs,
                              dropout.variational ? tiled_mask(steps, width, dropout.input, ctx)
                                                  : dropout_mask(steps, width, dropout.input, ctx));
  const NodeId terms = g.add(g.matmul(x, g.param(cell.input)), g.param(cell.bias));
  const std::optional<Tensor> shared_state_mask =
      dropout.variational ? dropout_mask(1, cell.hidden, dropout.state, ctx) : std::nullopt;

  std::vector<NodeId> hs(steps);
  CellState state = initial_state(g, cell);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    const std::optional<Tensor> mask =
        dropout.variational ? shared_state_mask : dropout_mask(1, cell.hidden, dropout.state, ctx);
    if (trace != nullptr && mask) trace->push_back(*mask);
    state = cell_step(g, cell, g.row(terms, t), state, mask);
    hs[t] = state.h;
  }
  return hs;
}

}  // namespace

NodeId bidirectional_layer(Graph& g, NodeId inputs, const CellParams& fwd, const CellParams& bwd,
                           const LayerDropout& dropout, RunContext& ctx, DropoutTrace* trace) {
  const auto forward = run_direction(g, inputs, fwd, false, dropout, ctx,
                                     trace ? &trace->forward_state : nullptr);
  const auto backward = run_direction(g, inputs, bwd, true, dropout, ctx,
                                      trace ? &trace->backward_state : nullptr);
  const NodeId parts[] = {g.stack_rows(forward), g.stack_rows(backward)};
  const NodeId out = g.concat_cols(parts);
  const std::size_t steps = g.value(out).rows();
  const std::size_t width = g.value(out).cols();
  return apply_mask(g, out,
                    dropout.variational ? tiled_mask(steps, width, dropout.output, ctx)
                                        : dropout_mask(steps, width, dropout.output, ctx));
}

NodeId char_features(Graph& g, ParamId char_table, const CellParams& fwd, const CellParams& bwd,
                     std::span<const int> chars) {
  if (chars.empty()) return g.constant(Tensor(1, fwd.hidden + bwd.hidden));
  const NodeId embedded = g.gather(char_table, chars);
  auto final_state = [&](const CellParams& cell, bool reverse) {
    const NodeId terms = g.add(g.matmul(embedded, g.param(cell.input)), g.param(cell.bias));
    CellState state = initial_state(g, cell);
    for (std::size_t s = 0; s < chars.size(); ++s) {
      const std::size_t t = reverse ? chars.size() - 1 - s : s;
      state = cell_step(g, cell, g.row(terms, t), state);
    }
    return state.h;
  };
  const NodeId parts[] = {final_state(fwd, false), final_state(bwd, true)};
  return g.concat_cols(parts);
}

// -------------------------------------------------------------------- model

Model Model::initialize(NetworkConfig config, Vocabularies vocab, const EmbeddingSet* pretrained,
                        Rng& rng) {
  if (pretrained != nullptr) config.word_dim = pretrained->dim;
  config.validate();
  if (vocab.labels.size() != config.tasks.size()) {
    throw ConfigError("label vocabularies do not match the task list");
  }
  Model model(std::move(config), std::move(vocab));
  model.register_parameters(pretrained, rng);
  return model;
}

Model Model::from_parameters(NetworkConfig config, Vocabularies vocab, ParameterStore params) {
  config.validate();
  if (vocab.labels.size() != config.tasks.size()) {
    throw DataError("label vocabularies do not match the task list");
  }
  Model model(std::move(config), std::move(vocab));
  Rng scratch(0);
  model.register_parameters(nullptr, scratch);
  if (params.size() != model.params_.size()) {
    throw DataError("expected " + std::to_string(model.params_.size()) + " tensors, found " +
                    std::to_string(params.size()));
  }
  for (ParamId id = 0; id < model.params_.size(); ++id) {
    const std::string& name = model.params_.name(id);
    const auto source = params.find(name);
    if (!source) throw DataError("missing tensor '" + name + "'");
    const Tensor& value = params.value(*source);
    if (!value.same_shape(model.params_.value(id))) {
      throw DataError("tensor '" + name + "' has shape " + value.shape_string() + ", expected " +
                      model.params_.value(id).shape_string());
    }
    model.params_.value(id) = value;
    model.params_.set_trainable(id, params.trainable(*source));
  }
  return model;
}

void Model::register_parameters(const EmbeddingSet* pretrained, Rng& rng) {
  const std::size_t dim = config_.word_dim;
  Tensor words(vocab_.words.size(), dim);
  const double random_limit = std::sqrt(3.0 / static_cast<double>(dim));
  for (std::size_t r = 0; r < vocab_.words.size(); ++r) {
    auto row = words.row_span(r);
    if (r == static_cast<std::size_t>(Vocabulary::kPad) && vocab_.words.has_specials()) continue;
    if (r == static_cast<std::size_t>(Vocabulary::kUnk) && vocab_.words.has_specials()) {
      for (auto& v : row) v = rng.uniform(-0.05, 0.05);
      continue;
    }
    const std::vector<double>* vec =
        pretrained != nullptr ? pretrained->find(vocab_.words.at(static_cast<int>(r))) : nullptr;
    if (vec != nullptr) {
      std::copy(vec->begin(), vec->end(), row.begin());
    } else {
      for (auto& v : row) v = rng.uniform(-random_limit, random_limit);
    }
  }
  word_table_ = params_.add("embedding/words", std::move(words), config_.train_embeddings);

  if (config_.chars.enabled) {
    const auto& cc = config_.chars;
    char_table_ = params_.add("chars/embedding", glorot(vocab_.chars.size(), cc.embedding_dim, rng));
    char_fwd_ = add_cell_params(params_, "chars/fwd", CellKind::Lstm, cc.embedding_dim, cc.hidden_dim, rng);
    char_bwd_ = add_cell_params(params_, "chars/bwd", CellKind::Lstm, cc.embedding_dim, cc.hidden_dim, rng);
  }

  const std::size_t base = embedding_width();
  std::size_t below = base;
  for (std::size_t l = 0; l < config_.shared_layers.size(); ++l) {
    const std::size_t hidden = config_.shared_layers[l];
    const std::size_t in = l == 0 ? base : below + (config_.shortcuts ? base : 0);
    const std::string prefix = "shared/" + std::to_string(l + 1);
    auto fwd = add_cell_params(params_, prefix + "/fwd", config_.cell, in, hidden, rng);
    auto bwd = add_cell_params(params_, prefix + "/bwd", config_.cell, in, hidden, rng);
    shared_.emplace_back(fwd, bwd);
    below = 2 * hidden;
  }

  for (std::size_t t = 0; t < config_.tasks.size(); ++t) {
    const TaskSpec& task = config_.tasks[t];
    const std::string prefix = "task/" + task.name;
    TaskParams tp;
    std::size_t width = 2 * config_.shared_layers[task.termination_layer - 1];
    for (std::size_t i = 0; i < task.private_layers.size(); ++i) {
      const std::size_t units = task.private_layers[i].units;
      tp.private_layers.push_back(
          params_.add(prefix + "/private/" + std::to_string(i + 1) + "/W", glorot(width, units, rng)));
      width = units;
    }
    const std::size_t labels = vocab_.labels[t].size();
    tp.projection_w = params_.add(prefix + "/projection/W", glorot(width, labels, rng));
    tp.projection_b = params_.add(prefix + "/projection/b", Tensor(1, labels));
    if (task.head == HeadKind::Crf) {
      tp.transitions = params_.add(prefix + "/crf/transitions", Tensor(labels, labels));
      tp.begin = params_.add(prefix + "/crf/begin", Tensor(1, labels));
      tp.end = params_.add(prefix + "/crf/end", Tensor(1, labels));
    }
    tasks_.push_back(std::move(tp));
  }
}

std::size_t Model::embedding_width() const {
  return config_.word_dim + (config_.chars.enabled ? 2 * config_.chars.hidden_dim : 0);
}

EncodedSentence Model::encode(const Sentence& sentence) const {
  EncodedSentence out;
  out.words.reserve(sentence.size());
  for (const Token& token : sentence) {
    out.words.push_back(vocab_.words.lookup(token.surface));
    if (config_.chars.enabled) {
      std::vector<int> chars;
      for (const std::string& ch : utf8_chars(token.surface)) {
        chars.push_back(vocab_.chars.find(ch).value_or(Vocabulary::kUnk));
      }
      out.chars.push_back(std::move(chars));
    }
  }
  return out;
}

std::vector<int> Model::encode_labels(const Sentence& sentence, std::size_t task) const {
  const std::string& name = config_.tasks.at(task).name;
  std::vector<int> out;
  out.reserve(sentence.size());
  for (const Token& token : sentence) {
    const auto it = token.labels.find(name);
    if (it == token.labels.end()) {
      throw DataError("token '" + token.surface + "' has no label for task '" + name + "'");
    }
    const auto index = vocab_.labels[task].find(it->second);
    if (!index) throw DataError("label '" + it->second + "' is not in the inventory of task '" + name + "'");
    out.push_back(*index);
  }
  return out;
}

NodeId Model::embed(Graph& g, const EncodedSentence& sentence, RunContext& ctx) const {
  const std::size_t steps = sentence.size();
  NodeId words = g.gather(word_table_, sentence.words);
  if (auto rows = dropout_mask(steps, 1, config_.dropout.word, ctx)) {
    // Whole word vectors are zeroed; kept ones are not rescaled.
    Tensor mask(steps, config_.word_dim);
    for (std::size_t r = 0; r < steps; ++r) {
      if ((*rows)(r, 0) != 0.0) std::fill(mask.row_span(r).begin(), mask.row_span(r).end(), 1.0);
    }
    words = g.mul_const(words, std::move(mask));
  }
  if (!config_.chars.enabled) return words;
  std::vector<NodeId> chars;
  chars.reserve(steps);
  for (const auto& word : sentence.chars) {
    chars.push_back(char_features(g, *char_table_, *char_fwd_, *char_bwd_, word));
  }
  const NodeId parts[] = {words, g.stack_rows(chars)};
  return g.concat_cols(parts);
}

std::vector<NodeId> Model::shared_stack(Graph& g, NodeId embedded, RunContext& ctx) const {
  const LayerDropout dropout{config_.dropout.rnn_input, config_.dropout.rnn_state,
                             config_.dropout.rnn_output, config_.dropout.variational};
  std::vector<NodeId> outputs;
  outputs.reserve(shared_.size());
  NodeId input = embedded;
  for (const auto& [fwd, bwd] : shared_) {
    if (!outputs.empty()) {
      input = outputs.back();
      if (config_.shortcuts) {
        const NodeId parts[] = {outputs.back(), embedded};
        input = g.concat_cols(parts);
      }
    }
    outputs.push_back(bidirectional_layer(g, input, fwd, bwd, dropout, ctx));
  }
  return outputs;
}

NodeId Model::task_logits(Graph& g, std::size_t task, std::span<const NodeId> layers,
                          RunContext& ctx) const {
  const TaskSpec& spec = config_.tasks.at(task);
  const TaskParams& tp = tasks_.at(task);
  NodeId h = layers[spec.termination_layer - 1];
  for (std::size_t i = 0; i < tp.private_layers.size(); ++i) {
    h = g.activation(g.matmul(h, g.param(tp.private_layers[i])), spec.private_layers[i].activation);
  }
  const NodeId logits = g.add(g.matmul(h, g.param(tp.projection_w)), g.param(tp.projection_b));
  const Tensor& v = g.value(logits);
  return apply_mask(g, logits, dropout_mask(v.rows(), v.cols(), spec.dropout, ctx));
}

NodeId Model::task_loss(Graph& g, std::size_t task, const EncodedSentence& sentence,
                        std::span<const int> gold, RunContext& ctx) const {
  const NodeId embedded = embed(g, sentence, ctx);
  const auto layers = shared_stack(g, embedded, ctx);
  const NodeId logits = task_logits(g, task, layers, ctx);
  const TaskParams& tp = tasks_.at(task);
  if (config_.tasks[task].head == HeadKind::Crf) {
    return g.crf_nll(logits, g.param(*tp.transitions), g.param(*tp.begin), g.param(*tp.end), gold);
  }
  return g.softmax_nll(logits, gold);
}

std::vector<int> Model::predict(std::size_t task, const EncodedSentence& sentence) const {
  if (sentence.size() == 0) return {};
  Graph g(params_);
  RunContext ctx;
  const NodeId embedded = embed(g, sentence, ctx);
  const auto layers = shared_stack(g, embedded, ctx);
  const Tensor& logits = g.value(task_logits(g, task, layers, ctx));
  const TaskParams& tp = tasks_.at(task);
  if (config_.tasks[task].head == HeadKind::Crf) {
    return crf::viterbi(logits, params_.value(*tp.transitions), params_.value(*tp.begin),
                        params_.value(*tp.end));
  }
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row_span(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<std::string> Model::predict_labels(std::size_t task, const Sentence& sentence) const {
  const auto ids = predict(task, encode(sentence));
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(vocab_.labels.at(task).at(id));
  return out;
}

std::vector<ParamId> Model::task_parameters(std::size_t task) const {
  const TaskParams& tp = tasks_.at(task);
  std::vector<ParamId> out = tp.private_layers;
  out.push_back(tp.projection_w);
  out.push_back(tp.projection_b);
  for (const auto& p : {tp.transitions, tp.begin, tp.end}) {
    if (p) out.push_back(*p);
  }
  return out;
}

}  // namespace mtltag
