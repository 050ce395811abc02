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

#include "mtltag/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mtltag/crf.hpp"
#include "mtltag/error.hpp"

namespace mtltag {
namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() +
                              " vs " + b.shape_string());
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::Identity:
      return "identity";
    case Activation::Sigmoid:
      return "sigmoid";
    case Activation::Tanh:
      return "tanh";
    case Activation::Relu:
      return "relu";
  }
  return "identity";
}

Activation parse_activation(std::string_view text) {
  if (text == "identity" || text == "linear") return Activation::Identity;
  if (text == "sigmoid") return Activation::Sigmoid;
  if (text == "tanh") return Activation::Tanh;
  if (text == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + std::string(text) + "'");
}

// ---------------------------------------------------------------- parameters

ParamId ParameterStore::add(std::string name, Tensor value, bool trainable) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  const ParamId id = entries_.size();
  index_.emplace(name, id);
  entries_.push_back({std::move(name), std::move(value), trainable});
  return id;
}

std::optional<ParamId> ParameterStore::find(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParamId ParameterStore::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw std::out_of_range("unknown parameter " + std::string(name));
}

std::size_t ParameterStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

GradientSet::GradientSet(const ParameterStore& params)
    : params_(&params), grads_(params.size()), touched_(params.size(), false) {}

Tensor& GradientSet::at(ParamId id) {
  if (params_ == nullptr || id >= grads_.size()) throw std::out_of_range("gradient id");
  if (!touched_[id]) {
    const Tensor& v = params_->value(id);
    if (!grads_[id].same_shape(v)) {
      grads_[id] = Tensor(v.rows(), v.cols());
    } else {
      grads_[id].fill(0.0);
    }
    touched_[id] = true;
  }
  return grads_[id];
}

const Tensor* GradientSet::find(ParamId id) const {
  return touched(id) ? &grads_[id] : nullptr;
}

double GradientSet::global_norm() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (touched_[i]) sum += grads_[i].squared_norm();
  }
  return std::sqrt(sum);
}

void GradientSet::scale(double factor) {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (touched_[i]) grads_[i] *= factor;
  }
}

void GradientSet::clear() { std::fill(touched_.begin(), touched_.end(), false); }

// --------------------------------------------------------------------- graph

NodeId Graph::push(const char* op, Tensor value, Backprop backprop) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
  nodes_.push_back({std::move(value), Tensor(), std::move(backprop), std::nullopt, op});
  return nodes_.size() - 1;
}

Tensor& Graph::adj(NodeId id) {
  Node& node = nodes_[id];
  if (!node.adjoint.same_shape(node.value) || node.adjoint.empty() != node.value.empty()) {
    node.adjoint = Tensor(node.value.rows(), node.value.cols());
  }
  return node.adjoint;
}

const Tensor& Graph::param_value(ParamId id) const {
  if (params_ == nullptr) throw std::logic_error("graph has no parameter store");
  return params_->value(id);
}

NodeId Graph::constant(Tensor value) { return push("constant", std::move(value)); }

NodeId Graph::param(ParamId id) {
  if (auto it = param_nodes_.find(id); it != param_nodes_.end()) return it->second;
  const NodeId node = push("param", param_value(id));
  nodes_[node].param = id;
  param_nodes_.emplace(id, node);
  return node;
}

NodeId Graph::gather(ParamId table, std::span<const int> rows) {
  const Tensor& source = param_value(table);
  Tensor out(rows.size(), source.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = source.row_span(static_cast<std::size_t>(rows[r]));
    std::copy(src.begin(), src.end(), out.row_span(r).begin());
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return push("gather", std::move(out), [table, idx = std::move(idx)](Graph& g, NodeId self) {
    if (g.sink_ == nullptr || !g.params_->trainable(table)) return;
    Tensor& grad = g.sink_->at(table);
    const Tensor& up = g.nodes_[self].adjoint;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto dst = grad.row_span(static_cast<std::size_t>(idx[r]));
      const auto src = up.row_span(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  });
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.cols() != vb.rows()) shape_error("matmul", va, vb);
  Tensor out(va.rows(), vb.cols());
  matmul_accumulate(va, vb, out);
  return push("matmul", std::move(out), [a, b](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    matmul_a_bt_accumulate(up, g.nodes_[b].value, g.adj(a));
    matmul_at_b_accumulate(g.nodes_[a].value, up, g.adj(b));
  });
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  const bool broadcast = !va.same_shape(vb);
  if (broadcast && !(vb.rows() == 1 && vb.cols() == va.cols())) shape_error("add", va, vb);
  Tensor out = va;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row_span(r);
    const auto src = broadcast ? vb.row_span(0) : vb.row_span(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += src[c];
  }
  return push("add", std::move(out), [a, b, broadcast](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    g.adj(a) += up;
    Tensor& gb = g.adj(b);
    if (!broadcast) {
      gb += up;
      return;
    }
    for (std::size_t r = 0; r < up.rows(); ++r) {
      const auto src = up.row_span(r);
      for (std::size_t c = 0; c < src.size(); ++c) gb[c] += src[c];
    }
  });
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) shape_error("sub", va, vb);
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  return push("sub", std::move(out), [a, b](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    g.adj(a) += up;
    Tensor& gb = g.adj(b);
    for (std::size_t i = 0; i < up.size(); ++i) gb[i] -= up[i];
  });
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) shape_error("mul", va, vb);
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  return push("mul", std::move(out), [a, b](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    Tensor& ga = g.adj(a);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * g.nodes_[b].value[i];
    Tensor& gb = g.adj(b);
    for (std::size_t i = 0; i < up.size(); ++i) gb[i] += up[i] * g.nodes_[a].value[i];
  });
}

NodeId Graph::mul_const(NodeId a, Tensor mask) {
  const Tensor& va = value(a);
  if (!va.same_shape(mask)) shape_error("mul_const", va, mask);
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return push("mul_const", std::move(out), [a, mask = std::move(mask)](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    Tensor& ga = g.adj(a);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * mask[i];
  });
}

NodeId Graph::scale(NodeId a, double alpha) { return affine(a, alpha, 0.0); }

NodeId Graph::affine(NodeId a, double alpha, double beta) {
  Tensor out = value(a);
  for (double& v : out.values()) v = alpha * v + beta;
  return push("affine", std::move(out), [a, alpha](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    Tensor& ga = g.adj(a);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += alpha * up[i];
  });
}

NodeId Graph::sigmoid(NodeId a) {
  Tensor out = value(a);
  for (double& v : out.values()) v = sigmoid_scalar(v);
  return push("sigmoid", std::move(out), [a](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    const Tensor& y = g.nodes_[self].value;
    Tensor& ga = g.adj(a);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * y[i] * (1.0 - y[i]);
  });
}

NodeId Graph::tanh(NodeId a) {
  Tensor out = value(a);
  for (double& v : out.values()) v = std::tanh(v);
  return push("tanh", std::move(out), [a](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    const Tensor& y = g.nodes_[self].value;
    Tensor& ga = g.adj(a);
    for (std::size_t i = 0; i < up.size(); ++i) ga[i] += up[i] * (1.0 - y[i] * y[i]);
  });
}

NodeId Graph::relu(NodeId a) {
  Tensor out = value(a);
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return push("relu", std::move(out), [a](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    const Tensor& x = g.nodes_[a].value;
    Tensor& ga = g.adj(a);
    for (std::size_t i = 0; i < up.size(); ++i) {
      if (x[i] > 0.0) ga[i] += up[i];
    }
  });
}

NodeId Graph::activation(NodeId a, Activation kind) {
  switch (kind) {
    case Activation::Identity:
      return a;
    case Activation::Sigmoid:
      return sigmoid(a);
    case Activation::Tanh:
      return tanh(a);
    case Activation::Relu:
      return relu(a);
  }
  return a;
}

NodeId Graph::concat_cols(std::span<const NodeId> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t rows = value(parts.front()).rows();
  std::size_t cols = 0;
  for (NodeId p : parts) {
    if (value(p).rows() != rows) shape_error("concat_cols", value(parts.front()), value(p));
    cols += value(p).cols();
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const Tensor& v = value(p);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row_span(r).begin(), v.row_span(r).end(), out.row_span(r).begin() + offset);
    }
    offsets.push_back(offset);
    offset += v.cols();
  }
  std::vector<NodeId> ids(parts.begin(), parts.end());
  return push("concat_cols", std::move(out),
              [ids = std::move(ids), offsets = std::move(offsets)](Graph& g, NodeId self) {
                const Tensor& up = g.nodes_[self].adjoint;
                for (std::size_t k = 0; k < ids.size(); ++k) {
                  Tensor& gp = g.adj(ids[k]);
                  for (std::size_t r = 0; r < gp.rows(); ++r) {
                    auto dst = gp.row_span(r);
                    const auto src = up.row_span(r).subspan(offsets[k], dst.size());
                    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
                  }
                }
              });
}

NodeId Graph::slice_cols(NodeId a, std::size_t begin, std::size_t count) {
  const Tensor& va = value(a);
  if (begin + count > va.cols()) throw std::invalid_argument("slice_cols out of range");
  Tensor out(va.rows(), count);
  for (std::size_t r = 0; r < va.rows(); ++r) {
    const auto src = va.row_span(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row_span(r).begin());
  }
  return push("slice_cols", std::move(out), [a, begin](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    Tensor& ga = g.adj(a);
    for (std::size_t r = 0; r < up.rows(); ++r) {
      auto dst = ga.row_span(r).subspan(begin, up.cols());
      const auto src = up.row_span(r);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

NodeId Graph::row(NodeId a, std::size_t r) {
  const Tensor& va = value(a);
  if (r >= va.rows()) throw std::invalid_argument("row index out of range");
  Tensor out(1, va.cols());
  std::copy(va.row_span(r).begin(), va.row_span(r).end(), out.row_span(0).begin());
  return push("row", std::move(out), [a, r](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    auto dst = g.adj(a).row_span(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += up[c];
  });
}

NodeId Graph::stack_rows(std::span<const NodeId> rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no inputs");
  const std::size_t cols = value(rows.front()).cols();
  Tensor out(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tensor& v = value(rows[r]);
    if (v.rows() != 1 || v.cols() != cols) shape_error("stack_rows", value(rows.front()), v);
    std::copy(v.row_span(0).begin(), v.row_span(0).end(), out.row_span(r).begin());
  }
  std::vector<NodeId> ids(rows.begin(), rows.end());
  return push("stack_rows", std::move(out), [ids = std::move(ids)](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    for (std::size_t r = 0; r < ids.size(); ++r) {
      Tensor& gr = g.adj(ids[r]);
      const auto src = up.row_span(r);
      for (std::size_t c = 0; c < src.size(); ++c) gr[c] += src[c];
    }
  });
}

NodeId Graph::softmax(NodeId a) {
  Tensor out = value(a);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row_span(r);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) sum += (v = std::exp(v - top));
    for (double& v : row) v /= sum;
  }
  return push("softmax", std::move(out), [a](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    const Tensor& y = g.nodes_[self].value;
    Tensor& ga = g.adj(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const auto yr = y.row_span(r);
      const auto ur = up.row_span(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < yr.size(); ++c) dot += yr[c] * ur[c];
      auto gr = ga.row_span(r);
      for (std::size_t c = 0; c < yr.size(); ++c) gr[c] += yr[c] * (ur[c] - dot);
    }
  });
}

NodeId Graph::log_softmax(NodeId a) {
  Tensor out = value(a);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row_span(r);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - top);
    const double lse = top + std::log(sum);
    for (double& v : row) v -= lse;
  }
  return push("log_softmax", std::move(out), [a](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    const Tensor& y = g.nodes_[self].value;
    Tensor& ga = g.adj(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const auto yr = y.row_span(r);
      const auto ur = up.row_span(r);
      double total = 0.0;
      for (double u : ur) total += u;
      auto gr = ga.row_span(r);
      for (std::size_t c = 0; c < yr.size(); ++c) gr[c] += ur[c] - std::exp(yr[c]) * total;
    }
  });
}

NodeId Graph::logsumexp(NodeId a) {
  const Tensor& va = value(a);
  Tensor out(va.rows(), 1);
  for (std::size_t r = 0; r < va.rows(); ++r) {
    const auto row = va.row_span(r);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - top);
    out(r, 0) = top + std::log(sum);
  }
  return push("logsumexp", std::move(out), [a](Graph& g, NodeId self) {
    const Tensor& up = g.nodes_[self].adjoint;
    const Tensor& lse = g.nodes_[self].value;
    const Tensor& x = g.nodes_[a].value;
    Tensor& ga = g.adj(a);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto xr = x.row_span(r);
      auto gr = ga.row_span(r);
      for (std::size_t c = 0; c < xr.size(); ++c) {
        gr[c] += up(r, 0) * std::exp(xr[c] - lse(r, 0));
      }
    }
  });
}

NodeId Graph::sum(NodeId a) {
  double total = 0.0;
  for (double v : value(a).values()) total += v;
  return push("sum", Tensor(1, 1, total), [a](Graph& g, NodeId self) {
    const double up = g.nodes_[self].adjoint[0];
    for (double& v : g.adj(a).values()) v += up;
  });
}

NodeId Graph::mean(NodeId a) {
  const std::size_t n = value(a).size();
  if (n == 0) throw std::invalid_argument("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

NodeId Graph::softmax_nll(NodeId logits, std::span<const int> gold) {
  const Tensor& x = value(logits);
  if (gold.size() != x.rows() || x.rows() == 0) {
    throw std::invalid_argument("softmax_nll: gold length does not match logits");
  }
  Tensor probs = x;
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = probs.row_span(r);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) sum += (v = std::exp(v - top));
    const double lse = top + std::log(sum);
    for (double& v : row) v /= sum;
    const auto g = static_cast<std::size_t>(gold[r]);
    if (g >= x.cols()) throw std::invalid_argument("softmax_nll: gold index out of range");
    loss += lse - x(r, g);
  }
  const double steps = static_cast<double>(x.rows());
  std::vector<int> labels(gold.begin(), gold.end());
  return push("softmax_nll", Tensor(1, 1, loss / steps),
              [logits, probs = std::move(probs), labels = std::move(labels), steps](
                  Graph& g, NodeId self) {
                const double up = g.nodes_[self].adjoint[0] / steps;
                Tensor& ga = g.adj(logits);
                for (std::size_t r = 0; r < probs.rows(); ++r) {
                  auto gr = ga.row_span(r);
                  const auto pr = probs.row_span(r);
                  for (std::size_t c = 0; c < pr.size(); ++c) gr[c] += up * pr[c];
                  gr[static_cast<std::size_t>(labels[r])] -= up;
                }
              });
}

NodeId Graph::crf_nll(NodeId emissions, NodeId transitions, NodeId begin, NodeId end,
                      std::span<const int> gold) {
  const Tensor& em = value(emissions);
  if (gold.size() != em.rows() || em.rows() == 0) {
    throw std::invalid_argument("crf_nll: gold length does not match emissions");
  }
  for (int label : gold) {
    if (label < 0 || static_cast<std::size_t>(label) >= em.cols()) {
      throw std::invalid_argument("crf_nll: gold index out of range");
    }
  }
  crf::Marginals m = crf::marginals(em, value(transitions), value(begin), value(end));
  const double score = crf::path_score(em, value(transitions), value(begin), value(end), gold);
  std::vector<int> labels(gold.begin(), gold.end());
  return push(
      "crf_nll", Tensor(1, 1, m.log_z - score),
      [emissions, transitions, begin, end, m = std::move(m), labels = std::move(labels)](
          Graph& g, NodeId self) {
        const double up = g.nodes_[self].adjoint[0];
        const std::size_t steps = m.unary.rows();
        Tensor& gem = g.adj(emissions);
        for (std::size_t i = 0; i < gem.size(); ++i) gem[i] += up * m.unary[i];
        for (std::size_t t = 0; t < steps; ++t) {
          gem(t, static_cast<std::size_t>(labels[t])) -= up;
        }
        Tensor& gtr = g.adj(transitions);
        for (std::size_t i = 0; i < gtr.size(); ++i) gtr[i] += up * m.pairwise[i];
        for (std::size_t t = 1; t < steps; ++t) {
          gtr(static_cast<std::size_t>(labels[t - 1]), static_cast<std::size_t>(labels[t])) -= up;
        }
        Tensor& gb = g.adj(begin);
        Tensor& ge = g.adj(end);
        for (std::size_t j = 0; j < gb.size(); ++j) {
          gb[j] += up * m.unary(0, j);
          ge[j] += up * m.unary(steps - 1, j);
        }
        gb[static_cast<std::size_t>(labels.front())] -= up;
        ge[static_cast<std::size_t>(labels.back())] -= up;
      });
}

void Graph::backward(NodeId loss, GradientSet* grads) {
  if (backward_done_) throw std::logic_error("backward already ran on this graph");
  if (loss >= nodes_.size()) throw std::out_of_range("loss node");
  if (nodes_[loss].value.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got " +
                                nodes_[loss].value.shape_string());
  }
  backward_done_ = true;
  sink_ = grads;
  adj(loss)[0] = 1.0;
  for (NodeId id = loss + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.adjoint.empty()) continue;
    if (!node.adjoint.all_finite()) {
      throw NumericError(std::string("non-finite adjoint at ") + node.op);
    }
    if (node.backprop) node.backprop(*this, id);
    if (node.param && grads != nullptr && params_->trainable(*node.param)) {
      grads->at(*node.param) += nodes_[id].adjoint;
    }
  }
  sink_ = nullptr;
}

}  // namespace mtltag
