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


#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mtltag/tensor.hpp"

using mtltag::Tensor;

TEST_CASE("tensor literals are row major") {
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 0) == 4.0);
  CHECK(m[4] == 5.0);
  CHECK(m.shape_string() == "[2x3]");
  CHECK_THROWS_AS(Tensor::matrix({{1, 2}, {3}}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor(2, 2, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("finite check and norms") {
  Tensor t = Tensor::row({3, 4});
  CHECK(t.all_finite());
  CHECK(t.squared_norm() == 25.0);
  t[0] = std::nan("");
  CHECK_FALSE(t.all_finite());
  t[0] = INFINITY;
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("in-place arithmetic checks shapes") {
  Tensor a = Tensor::row({1, 2});
  a += Tensor::row({0.5, 0.5});
  a *= 2.0;
  CHECK(a == Tensor::row({3, 5}));
  CHECK_THROWS_AS(a += Tensor(2, 1), std::invalid_argument);
}

TEST_CASE("matmul variants agree with hand results") {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor b = Tensor::matrix({{5, 6}, {7, 8}});
  Tensor out(2, 2);
  mtltag::matmul_accumulate(a, b, out);
  CHECK(out == Tensor::matrix({{19, 22}, {43, 50}}));

  Tensor atb(2, 2);
  mtltag::matmul_at_b_accumulate(a, b, atb);  // a^T b
  CHECK(atb == Tensor::matrix({{26, 30}, {38, 44}}));

  Tensor abt(2, 2);
  mtltag::matmul_a_bt_accumulate(a, b, abt);  // a b^T
  CHECK(abt == Tensor::matrix({{17, 23}, {39, 53}}));

  // Accumulation adds to existing content.
  mtltag::matmul_accumulate(a, b, out);
  CHECK(out(0, 0) == 38.0);
}
