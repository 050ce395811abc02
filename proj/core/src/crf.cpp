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

#include "mtltag/crf.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mtltag::crf {
namespace {

double log_sum_exp(std::span<const double> xs) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : xs) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - top);
  return top + std::log(sum);
}

void check_shapes(const Tensor& emissions, const Tensor& transitions, const Tensor& begin,
                  const Tensor& end) {
  const std::size_t labels = emissions.cols();
  if (emissions.rows() == 0) throw std::invalid_argument("crf: empty sequence");
  if (transitions.rows() != labels || transitions.cols() != labels ||
      begin.size() != labels || end.size() != labels) {
    throw std::invalid_argument("crf: score table shapes disagree");
  }
}

Tensor forward_table(const Tensor& em, const Tensor& trans, const Tensor& begin) {
  const std::size_t steps = em.rows(), labels = em.cols();
  Tensor alpha(steps, labels);
  for (std::size_t j = 0; j < labels; ++j) alpha(0, j) = begin[j] + em(0, j);
  std::vector<double> scratch(labels);
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < labels; ++j) {
      for (std::size_t i = 0; i < labels; ++i) scratch[i] = alpha(t - 1, i) + trans(i, j);
      alpha(t, j) = em(t, j) + log_sum_exp(scratch);
    }
  }
  return alpha;
}

}  // namespace

double path_score(const Tensor& emissions, const Tensor& transitions, const Tensor& begin,
                  const Tensor& end, std::span<const int> labels) {
  check_shapes(emissions, transitions, begin, end);
  if (labels.size() != emissions.rows()) throw std::invalid_argument("crf: path length");
  double score = begin[labels.front()] + end[labels.back()];
  for (std::size_t t = 0; t < labels.size(); ++t) {
    score += emissions(t, labels[t]);
    if (t > 0) score += transitions(labels[t - 1], labels[t]);
  }
  return score;
}

double log_partition(const Tensor& emissions, const Tensor& transitions, const Tensor& begin,
                     const Tensor& end) {
  check_shapes(emissions, transitions, begin, end);
  const Tensor alpha = forward_table(emissions, transitions, begin);
  const std::size_t last = emissions.rows() - 1;
  std::vector<double> scratch(emissions.cols());
  for (std::size_t j = 0; j < scratch.size(); ++j) scratch[j] = alpha(last, j) + end[j];
  return log_sum_exp(scratch);
}

std::vector<int> viterbi(const Tensor& emissions, const Tensor& transitions,
                         const Tensor& begin, const Tensor& end) {
  check_shapes(emissions, transitions, begin, end);
  const std::size_t steps = emissions.rows(), labels = emissions.cols();
  Tensor delta(steps, labels);
  std::vector<int> backpointer(steps * labels, 0);
  for (std::size_t j = 0; j < labels; ++j) delta(0, j) = begin[j] + emissions(0, j);
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < labels; ++j) {
      std::size_t best = 0;
      double best_score = delta(t - 1, 0) + transitions(0, j);
      for (std::size_t i = 1; i < labels; ++i) {
        const double s = delta(t - 1, i) + transitions(i, j);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      delta(t, j) = best_score + emissions(t, j);
      backpointer[t * labels + j] = static_cast<int>(best);
    }
  }
  std::size_t best = 0;
  double best_score = delta(steps - 1, 0) + end[0];
  for (std::size_t j = 1; j < labels; ++j) {
    const double s = delta(steps - 1, j) + end[j];
    if (s > best_score) {
      best_score = s;
      best = j;
    }
  }
  std::vector<int> path(steps);
  path[steps - 1] = static_cast<int>(best);
  for (std::size_t t = steps - 1; t > 0; --t) {
    path[t - 1] = backpointer[t * labels + static_cast<std::size_t>(path[t])];
  }
  return path;
}

Marginals marginals(const Tensor& emissions, const Tensor& transitions, const Tensor& begin,
                    const Tensor& end) {
  check_shapes(emissions, transitions, begin, end);
  const std::size_t steps = emissions.rows(), labels = emissions.cols();
  const Tensor alpha = forward_table(emissions, transitions, begin);

  Tensor beta(steps, labels);
  for (std::size_t i = 0; i < labels; ++i) beta(steps - 1, i) = end[i];
  std::vector<double> scratch(labels);
  for (std::size_t t = steps - 1; t > 0; --t) {
    for (std::size_t i = 0; i < labels; ++i) {
      for (std::size_t j = 0; j < labels; ++j) {
        scratch[j] = transitions(i, j) + emissions(t, j) + beta(t, j);
      }
      beta(t - 1, i) = log_sum_exp(scratch);
    }
  }

  for (std::size_t j = 0; j < labels; ++j) scratch[j] = alpha(steps - 1, j) + end[j];
  Marginals out;
  out.log_z = log_sum_exp(scratch);
  out.unary = Tensor(steps, labels);
  out.pairwise = Tensor(labels, labels);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < labels; ++j) {
      out.unary(t, j) = std::exp(alpha(t, j) + beta(t, j) - out.log_z);
    }
  }
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t i = 0; i < labels; ++i) {
      for (std::size_t j = 0; j < labels; ++j) {
        out.pairwise(i, j) += std::exp(alpha(t - 1, i) + transitions(i, j) + emissions(t, j) +
                                       beta(t, j) - out.log_z);
      }
    }
  }
  return out;
}

}  // namespace mtltag::crf
