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

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace mtltag {

/// Seeded pseudo-random stream shared by initialization, shuffling and dropout.
///
/// All draws go through next(); the derived helpers are defined in terms of
/// raw 64-bit words so that a stream can be regenerated independently of the
/// standard library's distribution implementations:
///   uniform()   = (next() >> 11) * 2^-53
///   below(n)    = rejection sampling on next() against the largest multiple of n
///   keep(p)     = uniform() >= p
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Bernoulli draw that keeps a unit with probability 1 - drop_probability.
  bool keep(double drop_probability) { return uniform() >= drop_probability; }

  template <typename T>
  void shuffle(std::span<T> items) {
    // Fisher-Yates, back to front.
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent seeds from structured ids.
std::uint64_t mix_seed(std::uint64_t value);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

}  // namespace mtltag
