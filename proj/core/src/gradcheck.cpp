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

#include "mtltag/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mtltag {
namespace {

double evaluate(const ParameterStore& params, const LossBuilder& build) {
  Graph g(params);
  const NodeId loss = build(g);
  return g.value(loss)[0];
}

}  // namespace

GradientCheckReport check_gradients(ParameterStore& params, const LossBuilder& build,
                                    double eps) {
  GradientSet analytic(params);
  Graph g(params);
  g.backward(build(g), &analytic);
  return check_gradients_against(params, build, analytic, eps);
}

GradientCheckReport check_gradients_against(ParameterStore& params, const LossBuilder& build,
                                            const GradientSet& analytic, double eps) {
  GradientCheckReport report;
  for (ParamId id = 0; id < params.size(); ++id) {
    if (!params.trainable(id)) continue;
    const Tensor* grad = analytic.find(id);
    Tensor& value = params.value(id);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + eps;
      const double plus = evaluate(params, build);
      value[i] = saved - eps;
      const double minus = evaluate(params, build);
      value[i] = saved;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double exact = grad != nullptr ? (*grad)[i] : 0.0;
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double err = std::abs(exact - numeric) / denom;
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

}  // namespace mtltag
