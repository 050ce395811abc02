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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mtltag/tensor.hpp"

namespace mtltag {

using NodeId = std::size_t;
using ParamId = std::size_t;

enum class Activation { Identity, Sigmoid, Tanh, Relu };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

/// Named parameter tensors in registration order.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor value, bool trainable = true);

  std::optional<ParamId> find(std::string_view name) const;
  ParamId id(std::string_view name) const;

  const Tensor& value(ParamId id) const { return entries_.at(id).value; }
  Tensor& value(ParamId id) { return entries_.at(id).value; }
  const std::string& name(ParamId id) const { return entries_.at(id).name; }
  bool trainable(ParamId id) const { return entries_.at(id).trainable; }
  void set_trainable(ParamId id, bool trainable) { entries_.at(id).trainable = trainable; }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const noexcept;

 private:
  struct Entry {
    std::string name;
    Tensor value;
    bool trainable = true;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, ParamId> index_;
};

/// Per-parameter gradients. Tensors are allocated on first touch; untouched
/// parameters are reported as such so optimizers can leave them alone.
class GradientSet {
 public:
  GradientSet() = default;
  explicit GradientSet(const ParameterStore& params);

  Tensor& at(ParamId id);
  const Tensor* find(ParamId id) const;
  bool touched(ParamId id) const { return id < touched_.size() && touched_[id]; }
  std::size_t size() const noexcept { return grads_.size(); }

  /// sqrt of the sum of squared norms over all touched gradients.
  double global_norm() const;
  void scale(double factor);
  void clear();

 private:
  const ParameterStore* params_ = nullptr;
  std::vector<Tensor> grads_;
  std::vector<bool> touched_;
};

/// Define-by-run reverse-mode tape. Every operation is evaluated as soon as
/// it is recorded, so node ids are already in topological order and the
/// backward sweep is a reverse scan.
class Graph {
 public:
  Graph() = default;
  explicit Graph(const ParameterStore& params) : params_(&params) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  NodeId constant(Tensor value);
  NodeId param(ParamId id);
  /// Row lookup in a parameter table; gradients are scattered straight into
  /// the table's gradient, without materialising a table-sized adjoint.
  NodeId gather(ParamId table, std::span<const int> rows);

  NodeId matmul(NodeId a, NodeId b);
  /// Equal shapes, or b a single row broadcast over the rows of a.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  /// Elementwise product with a fixed tensor (dropout masks).
  NodeId mul_const(NodeId a, Tensor mask);
  NodeId scale(NodeId a, double alpha);
  /// alpha * a + beta
  NodeId affine(NodeId a, double alpha, double beta);

  NodeId sigmoid(NodeId a);
  NodeId tanh(NodeId a);
  NodeId relu(NodeId a);
  NodeId activation(NodeId a, Activation kind);

  NodeId concat_cols(std::span<const NodeId> parts);
  NodeId slice_cols(NodeId a, std::size_t begin, std::size_t count);
  NodeId row(NodeId a, std::size_t r);
  NodeId stack_rows(std::span<const NodeId> rows);

  NodeId softmax(NodeId a);
  NodeId log_softmax(NodeId a);
  /// Row-wise log-sum-exp with max subtraction; result is rows x 1.
  NodeId logsumexp(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);

  /// Mean over rows of -log softmax(logits)[gold].
  NodeId softmax_nll(NodeId logits, std::span<const int> gold);
  /// log Z - score(gold) of a first-order linear-chain CRF.
  NodeId crf_nll(NodeId emissions, NodeId transitions, NodeId begin, NodeId end,
                 std::span<const int> gold);

  /// The reference is invalidated by the next node added to the graph.
  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  /// Zero-shaped if the node received no adjoint.
  const Tensor& adjoint(NodeId id) const { return nodes_.at(id).adjoint; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool backward_done() const noexcept { return backward_done_; }

  /// Propagates d(loss)/d(node) through the tape. Parameter adjoints are
  /// accumulated into grads when given. May run once per graph.
  void backward(NodeId loss, GradientSet* grads = nullptr);

 private:
  using Backprop = std::function<void(Graph&, NodeId)>;

  struct Node {
    Tensor value;
    Tensor adjoint;
    Backprop backprop;
    std::optional<ParamId> param;
    const char* op = "";
  };

  NodeId push(const char* op, Tensor value, Backprop backprop = {});
  Tensor& adj(NodeId id);
  const Tensor& param_value(ParamId id) const;

  const ParameterStore* params_ = nullptr;
  std::vector<Node> nodes_;
  std::unordered_map<ParamId, NodeId> param_nodes_;
  GradientSet* sink_ = nullptr;
  bool backward_done_ = false;
};

}  // namespace mtltag
