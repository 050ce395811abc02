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

#include <functional>
#include <string>

#include "mtltag/autodiff.hpp"

namespace mtltag {

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Builds a scalar loss on a fresh graph over the given parameters.
using LossBuilder = std::function<NodeId(Graph&)>;

/// Compares reverse-mode gradients of every trainable parameter component
/// with central differences (f(x+eps) - f(x-eps)) / 2eps. The per-component
/// error is |a - n| / max(|a|, |n|, 1e-8); the maximum is reported.
GradientCheckReport check_gradients(ParameterStore& params, const LossBuilder& build,
                                    double eps = 1e-5);

/// Same comparison against a caller-supplied analytic gradient.
GradientCheckReport check_gradients_against(ParameterStore& params, const LossBuilder& build,
                                            const GradientSet& analytic, double eps = 1e-5);

}  // namespace mtltag
