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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mtltag/rng.hpp"

namespace mtltag {

struct Interval {
  enum class Kind { List, Discrete, Continuous };

  Kind kind = Kind::List;
  std::vector<std::string> values;  // List
  std::int64_t first = 0;           // Discrete, both ends inclusive
  std::int64_t last = 0;
  double lower = 0.0;  // Continuous, [lower, upper)
  double upper = 1.0;

  static Interval list(std::vector<std::string> values);
  static Interval discrete(std::int64_t first, std::int64_t last);
  static Interval continuous(double lower, double upper);

  /// Throws ConfigError naming `name` when the interval is empty.
  void validate(std::string_view name) const;
};

struct SearchSpace {
  std::map<std::string, Interval, std::less<>> variables;

  void validate() const;
};

using Assignment = std::map<std::string, std::string, std::less<>>;

/// One value drawn from the interval, rendered as text.
std::string sample_value(const Interval& interval, Rng& rng);
/// Draws every variable in name order.
Assignment sample_trial(const SearchSpace& space, Rng& rng);

/// Names of all ${name} placeholders in `text`.
std::set<std::string, std::less<>> template_variables(std::string_view text);
/// Replaces every placeholder; throws ConfigError for unbound names.
std::string render_template(std::string_view text, const Assignment& assignment);

struct SearchConfig {
  std::size_t trials = 10;
  std::size_t seeds_per_trial = 3;
  std::size_t final_seeds = 0;
  std::uint64_t master_seed = 1;
  bool higher_is_better = true;
};

/// Trains one model from a rendered configuration and returns its dev score.
using TrialRunner = std::function<double(const std::string& rendered_config, std::uint64_t seed,
                                         std::size_t trial, std::size_t seed_index)>;

struct TrialResult {
  std::size_t index = 0;
  Assignment assignment;
  std::string rendered;
  std::vector<std::uint64_t> seeds;
  std::vector<double> scores;
  std::optional<double> mean;
  std::optional<std::string> failure;
};

struct SearchReport {
  std::vector<TrialResult> trials;
  /// Successful trials, best first; ties keep the lower index first.
  std::vector<std::size_t> ranking;
  std::optional<std::size_t> winner;
  std::vector<std::uint64_t> final_seeds;
  std::vector<double> final_scores;
  std::size_t runs = 0;
};

/// Seed of run `seed_index` of trial `trial`.
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial, std::size_t seed_index);

/// Samples all trials up front, checks every placeholder is bound, then
/// runs each trial's seeds in order. A trial whose run throws or returns a
/// non-finite score is recorded as failed and left out of the ranking.
SearchReport run_search(std::string_view template_text, const SearchSpace& space,
                        const SearchConfig& config, const TrialRunner& runner);

/// Tab-separated table: one row per trial, ranked trials first.
void write_search_report(std::ostream& out, const SearchReport& report);

}  // namespace mtltag
