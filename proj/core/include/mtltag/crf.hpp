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

#include <span>
#include <vector>

#include "mtltag/tensor.hpp"

namespace mtltag::crf {

// Emissions are T x L; transitions[i][j] scores moving from label i to j;
// begin and end are 1 x L boundary scores.

double path_score(const Tensor& emissions, const Tensor& transitions, const Tensor& begin,
                  const Tensor& end, std::span<const int> labels);

/// log of the sum over all L^T paths of exp(score), via the forward algorithm.
double log_partition(const Tensor& emissions, const Tensor& transitions, const Tensor& begin,
                     const Tensor& end);

/// Highest-scoring path. At every step the lowest label index wins ties.
std::vector<int> viterbi(const Tensor& emissions, const Tensor& transitions,
                         const Tensor& begin, const Tensor& end);

struct Marginals {
  Tensor unary;     // T x L, P(y_t = j)
  Tensor pairwise;  // L x L, sum_t P(y_{t-1} = i, y_t = j)
  double log_z = 0.0;
};

/// Forward-backward posterior marginals.
Marginals marginals(const Tensor& emissions, const Tensor& transitions, const Tensor& begin,
                    const Tensor& end);

}  // namespace mtltag::crf
