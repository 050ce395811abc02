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

// Extended-precision re-implementation of the tagger's loss, written from
// the model equations rather than from the library code. Used as the
// finite-difference oracle for end-to-end gradient checks: central
// differences in double carry roughly 1e-11 of roundoff, which is more
// than a 1e-6 relative bound with a 1e-8 floor can absorb. Long double
// still leaves about 3e-14, so entries with small gradients use __float128.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <quadmath.h>

#include "mtltag/autodiff.hpp"
#include "mtltag/network.hpp"

namespace mtltag::testing {

using Quad = __float128;

inline long double rexp(long double x) { return std::exp(x); }
inline long double rlog(long double x) { return std::log(x); }
inline long double rtanh(long double x) { return std::tanh(x); }
inline Quad rexp(Quad x) { return expq(x); }
inline Quad rlog(Quad x) { return logq(x); }
inline Quad rtanh(Quad x) { return tanhq(x); }

template <typename Real>
struct RMat {
  std::size_t rows = 0, cols = 0;
  std::vector<Real> v;
  RMat() = default;
  RMat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, Real(0)) {}
  Real& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

template <typename Real>
RMat<Real> rmul(const RMat<Real>& a, const RMat<Real>& b) {
  RMat<Real> out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k)
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += a(i, k) * b(k, j);
  return out;
}

template <typename Real>
Real rsigmoid(Real x) { return Real(1) / (Real(1) + rexp(-x)); }

template <typename Real>
Real ractivate(Real x, Activation kind) {
  switch (kind) {
    case Activation::Identity:
      return x;
    case Activation::Sigmoid:
      return rsigmoid(x);
    case Activation::Tanh:
      return rtanh(x);
    case Activation::Relu:
      return x > 0 ? x : Real(0);
  }
  return x;
}

template <typename Real>
struct Perturbation {
  ParamId id = 0;
  std::size_t index = 0;
  Real delta = 0;
};

template <typename Real>
class ReferenceNetwork {
 public:
  using Mat = RMat<Real>;

  ReferenceNetwork(const Model& model, std::optional<Perturbation<Real>> perturbation)
      : model_(model), perturbation_(perturbation) {}

  Real loss(std::size_t task, const EncodedSentence& sentence, const std::vector<int>& gold) const {
    const NetworkConfig& config = model_.config();
    const std::size_t steps = sentence.size();
    // Token representations.
    const Mat table = param("embedding/words");
    std::size_t width = config.word_dim + (config.chars.enabled ? 2 * config.chars.hidden_dim : 0);
    Mat embedded(steps, width);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t j = 0; j < config.word_dim; ++j) {
        embedded(t, j) = table(static_cast<std::size_t>(sentence.words[t]), j);
      }
      if (config.chars.enabled) {
        const auto& chars = sentence.chars[t];
        if (chars.empty()) continue;
        const Mat char_table = param("chars/embedding");
        Mat x(chars.size(), char_table.cols);
        for (std::size_t i = 0; i < chars.size(); ++i) {
          for (std::size_t j = 0; j < char_table.cols; ++j) {
            x(i, j) = char_table(static_cast<std::size_t>(chars[i]), j);
          }
        }
        const Mat fwd = run(CellKind::Lstm, "chars/fwd", x, false);
        const Mat bwd = run(CellKind::Lstm, "chars/bwd", x, true);
        const std::size_t h = config.chars.hidden_dim;
        for (std::size_t j = 0; j < h; ++j) {
          embedded(t, config.word_dim + j) = fwd(chars.size() - 1, j);
          embedded(t, config.word_dim + h + j) = bwd(0, j);
        }
      }
    }
    // Shared layers.
    std::vector<Mat> layers;
    for (std::size_t l = 0; l < config.shared_layers.size(); ++l) {
      Mat input = embedded;
      if (l > 0) {
        const Mat& below = layers.back();
        input = Mat(steps, below.cols + (config.shortcuts ? embedded.cols : 0));
        for (std::size_t t = 0; t < steps; ++t) {
          for (std::size_t j = 0; j < below.cols; ++j) input(t, j) = below(t, j);
          if (config.shortcuts) {
            for (std::size_t j = 0; j < embedded.cols; ++j) input(t, below.cols + j) = embedded(t, j);
          }
        }
      }
      const std::string prefix = "shared/" + std::to_string(l + 1);
      const Mat fwd = run(config.cell, prefix + "/fwd", input, false);
      const Mat bwd = run(config.cell, prefix + "/bwd", input, true);
      Mat out(steps, fwd.cols + bwd.cols);
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < fwd.cols; ++j) out(t, j) = fwd(t, j);
        for (std::size_t j = 0; j < bwd.cols; ++j) out(t, fwd.cols + j) = bwd(t, j);
      }
      layers.push_back(std::move(out));
    }
    // Task head.
    const TaskSpec& spec = config.tasks.at(task);
    const std::string prefix = "task/" + spec.name;
    Mat h = layers.at(spec.termination_layer - 1);
    for (std::size_t i = 0; i < spec.private_layers.size(); ++i) {
      h = rmul(h, param(prefix + "/private/" + std::to_string(i + 1) + "/W"));
      for (Real& x : h.v) x = ractivate(x, spec.private_layers[i].activation);
    }
    Mat logits = rmul(h, param(prefix + "/projection/W"));
    const Mat bias = param(prefix + "/projection/b");
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t j = 0; j < logits.cols; ++j) logits(t, j) += bias(0, j);

    const std::size_t labels = logits.cols;
    if (spec.head == HeadKind::Softmax) {
      Real total = 0;
      for (std::size_t t = 0; t < steps; ++t) {
        Real m = logits(t, 0);
        for (std::size_t j = 1; j < labels; ++j) m = std::max(m, logits(t, j));
        Real s = 0;
        for (std::size_t j = 0; j < labels; ++j) s += rexp(logits(t, j) - m);
        total += m + rlog(s) - logits(t, static_cast<std::size_t>(gold[t]));
      }
      return total / Real(static_cast<double>(steps));
    }
    const Mat trans = param(prefix + "/crf/transitions");
    const Mat begin = param(prefix + "/crf/begin");
    const Mat end = param(prefix + "/crf/end");
    std::vector<Real> alpha(labels);
    for (std::size_t j = 0; j < labels; ++j) alpha[j] = begin(0, j) + logits(0, j);
    for (std::size_t t = 1; t < steps; ++t) {
      std::vector<Real> next(labels);
      for (std::size_t j = 0; j < labels; ++j) {
        Real m = Real(-INFINITY);
        for (std::size_t i = 0; i < labels; ++i) m = std::max(m, alpha[i] + trans(i, j));
        Real s = 0;
        for (std::size_t i = 0; i < labels; ++i) s += rexp(alpha[i] + trans(i, j) - m);
        next[j] = m + rlog(s) + logits(t, j);
      }
      alpha = std::move(next);
    }
    Real m = Real(-INFINITY);
    for (std::size_t j = 0; j < labels; ++j) m = std::max(m, alpha[j] + end(0, j));
    Real s = 0;
    for (std::size_t j = 0; j < labels; ++j) s += rexp(alpha[j] + end(0, j) - m);
    const Real log_z = m + rlog(s);
    const auto y = [&](std::size_t t) { return static_cast<std::size_t>(gold[t]); };
    Real score = begin(0, y(0)) + end(0, y(steps - 1));
    for (std::size_t t = 0; t < steps; ++t) {
      score += logits(t, y(t));
      if (t > 0) score += trans(y(t - 1), y(t));
    }
    return log_z - score;
  }

 private:
  Mat param(const std::string& name) const {
    const ParameterStore& store = model_.parameters();
    const ParamId id = store.id(name);
    const Tensor& t = store.value(id);
    Mat out(t.rows(), t.cols());
    for (std::size_t i = 0; i < t.size(); ++i) out.v[i] = Real(t[i]);
    if (perturbation_ && perturbation_->id == id) out.v[perturbation_->index] += perturbation_->delta;
    return out;
  }

  /// One direction of a recurrent layer; row t of the result is the state
  /// after reading token t.
  Mat run(CellKind kind, const std::string& prefix, const Mat& x, bool reverse) const {
    const Mat w = param(prefix + "/W");
    const Mat u = param(prefix + "/U");
    const Mat b = param(prefix + "/b");
    const std::size_t hidden = u.rows;
    Mat in = rmul(x, w);
    for (std::size_t t = 0; t < in.rows; ++t)
      for (std::size_t j = 0; j < in.cols; ++j) in(t, j) += b(0, j);
    std::optional<Mat> un;
    if (kind == CellKind::Gru) un = param(prefix + "/Un");

    Mat out(x.rows, hidden);
    Mat h(1, hidden), c(1, hidden);
    for (std::size_t s = 0; s < x.rows; ++s) {
      const std::size_t t = reverse ? x.rows - 1 - s : s;
      const Mat rec = rmul(h, u);
      Mat next(1, hidden);
      for (std::size_t j = 0; j < hidden; ++j) {
        switch (kind) {
          case CellKind::Simple:
            next(0, j) = rtanh(in(t, j) + rec(0, j));
            break;
          case CellKind::Lstm: {
            const Real ig = rsigmoid(in(t, j) + rec(0, j));
            const Real fg = rsigmoid(in(t, hidden + j) + rec(0, hidden + j));
            const Real og = rsigmoid(in(t, 2 * hidden + j) + rec(0, 2 * hidden + j));
            const Real cand = rtanh(in(t, 3 * hidden + j) + rec(0, 3 * hidden + j));
            c(0, j) = fg * c(0, j) + ig * cand;
            next(0, j) = og * rtanh(c(0, j));
            break;
          }
          case CellKind::Gru:
            break;
        }
      }
      if (kind == CellKind::Gru) {
        Mat reset(1, hidden);
        std::vector<Real> update(hidden);
        for (std::size_t j = 0; j < hidden; ++j) {
          update[j] = rsigmoid(in(t, j) + rec(0, j));
          reset(0, j) = rsigmoid(in(t, hidden + j) + rec(0, hidden + j)) * h(0, j);
        }
        const Mat cand_rec = rmul(reset, *un);
        for (std::size_t j = 0; j < hidden; ++j) {
          const Real n = rtanh(in(t, 2 * hidden + j) + cand_rec(0, j));
          next(0, j) = (Real(1) - update[j]) * h(0, j) + update[j] * n;
        }
      }
      h = next;
      for (std::size_t j = 0; j < hidden; ++j) out(t, j) = h(0, j);
    }
    return out;
  }

  const Model& model_;
  std::optional<Perturbation<Real>> perturbation_;
};

struct TaskExample {
  std::size_t task = 0;
  EncodedSentence sentence;
  std::vector<int> gold;
};

struct ReferenceCheck {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  /// Largest |library loss - reference loss| seen at the unperturbed point.
  double forward_gap = 0.0;
};

inline constexpr double kQuadBelow = 1e-5;

/// Library gradients of the summed example losses against central
/// differences of the extended-precision reference.
inline ReferenceCheck reference_gradient_check(Model& model, const std::vector<TaskExample>& examples,
                                               double eps = 1e-5) {
  ParameterStore& params = model.parameters();
  GradientSet analytic(params);
  double library_loss = 0.0;
  {
    Graph g(params);
    RunContext ctx;
    std::optional<NodeId> total;
    for (const auto& ex : examples) {
      const NodeId l = model.task_loss(g, ex.task, ex.sentence, ex.gold, ctx);
      total = total ? g.add(*total, l) : l;
    }
    library_loss = g.value(*total)[0];
    g.backward(*total, &analytic);
  }
  auto reference = [&]<typename Real>(std::optional<Perturbation<Real>> p) {
    ReferenceNetwork<Real> net(model, p);
    Real sum = 0;
    for (const auto& ex : examples) sum += net.loss(ex.task, ex.sentence, ex.gold);
    return sum;
  };
  // Fourth-order central stencil with step eps; the two-point rule leaves
  // truncation error near 1e-6 relative on some entries.
  auto numeric = [&]<typename Real>(ParamId id, std::size_t i) {
    const Real e = Real(eps);
    auto at = [&](Real delta) { return reference(std::optional(Perturbation<Real>{id, i, delta})); };
    const Real near = at(e) - at(-e);
    const Real far = at(Real(2) * e) - at(Real(-2) * e);
    return static_cast<double>((Real(8) * near - far) / (Real(12) * e));
  };
  ReferenceCheck report;
  report.forward_gap =
      std::abs(library_loss - static_cast<double>(reference(std::optional<Perturbation<long double>>{})));
  for (ParamId id = 0; id < params.size(); ++id) {
    if (!params.trainable(id)) continue;
    const Tensor* grad = analytic.find(id);
    for (std::size_t i = 0; i < params.value(id).size(); ++i) {
      const double exact = grad != nullptr ? (*grad)[i] : 0.0;
      // Precision is chosen from the analytic value alone. Exact zeros come
      // from parameters the loss never reads, where every precision gives 0.
      const bool small = exact != 0.0 && std::abs(exact) < kQuadBelow;
      const double n = small ? numeric.template operator()<Quad>(id, i)
                                                    : numeric.template operator()<long double>(id, i);
      const double denom = std::max({std::abs(exact), std::abs(n), 1e-8});
      const double err = std::abs(exact - n) / denom;
      ++report.checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = params.name(id);
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace mtltag::testing
