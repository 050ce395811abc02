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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtltag/corpus_io.hpp"

namespace mtltag {

class LabelDistribution {
 public:
  void add(std::string_view label, std::uint64_t count = 1);

  std::uint64_t total() const noexcept { return total_; }
  std::size_t label_count() const noexcept { return counts_.size(); }
  const std::map<std::string, std::uint64_t>& counts() const noexcept { return counts_; }
  /// Relative frequencies in label order.
  std::vector<double> frequencies() const;

 private:
  std::map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

LabelDistribution label_distribution(const Corpus& corpus, std::string_view task);

/// Shannon entropy in bits; zero-probability labels contribute nothing.
double label_entropy(const LabelDistribution& dist);

/// g2 = m4 / m2^2 with biased (1/n) central moments of the sample.
double kurtosis(std::span<const double> sample);

/// Kurtosis of the vector of per-label relative frequencies.
double label_kurtosis(const LabelDistribution& dist);

}  // namespace mtltag
