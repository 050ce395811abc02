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

#include "mtltag/label_stats.hpp"

#include <cmath>

#include "mtltag/error.hpp"

namespace mtltag {

void LabelDistribution::add(std::string_view label, std::uint64_t count) {
  counts_[std::string(label)] += count;
  total_ += count;
}

std::vector<double> LabelDistribution::frequencies() const {
  std::vector<double> out;
  out.reserve(counts_.size());
  for (const auto& [label, count] : counts_) {
    out.push_back(static_cast<double>(count) / static_cast<double>(total_));
  }
  return out;
}

LabelDistribution label_distribution(const Corpus& corpus, std::string_view task) {
  LabelDistribution dist;
  const std::string key(task);
  for (const auto& sentence : corpus.sentences) {
    for (const auto& token : sentence) {
      const auto it = token.labels.find(key);
      if (it == token.labels.end()) throw DataError("token without label for task " + key);
      dist.add(it->second);
    }
  }
  return dist;
}

double label_entropy(const LabelDistribution& dist) {
  if (dist.total() == 0) throw DataError("entropy of an empty label distribution");
  double h = 0.0;
  for (double p : dist.frequencies()) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double kurtosis(std::span<const double> sample) {
  if (sample.size() < 2) throw DataError("kurtosis needs at least two samples");
  const double n = static_cast<double>(sample.size());
  double mean = 0.0;
  for (double x : sample) mean += x;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : sample) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  // Rounding leaves a residue of order ulp(mean)^2 for constant samples.
  if (m2 <= 1e-24 * mean * mean) throw DataError("undefined kurtosis: second moment is zero");
  return m4 / (m2 * m2);
}

double label_kurtosis(const LabelDistribution& dist) {
  if (dist.label_count() < 2) throw DataError("undefined kurtosis: fewer than two labels");
  const auto freqs = dist.frequencies();
  return kurtosis(freqs);
}

}  // namespace mtltag
