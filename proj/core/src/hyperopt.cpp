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

#include "mtltag/hyperopt.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "mtltag/error.hpp"

namespace mtltag {

Interval Interval::list(std::vector<std::string> values) {
  Interval i;
  i.kind = Kind::List;
  i.values = std::move(values);
  return i;
}

Interval Interval::discrete(std::int64_t first, std::int64_t last) {
  Interval i;
  i.kind = Kind::Discrete;
  i.first = first;
  i.last = last;
  return i;
}

Interval Interval::continuous(double lower, double upper) {
  Interval i;
  i.kind = Kind::Continuous;
  i.lower = lower;
  i.upper = upper;
  return i;
}

void Interval::validate(std::string_view name) const {
  const std::string where = "search variable '" + std::string(name) + "'";
  switch (kind) {
    case Kind::List:
      if (values.empty()) throw ConfigError(where + ": empty value list");
      break;
    case Kind::Discrete:
      if (first > last) throw ConfigError(where + ": discrete range start exceeds end");
      break;
    case Kind::Continuous:
      if (!(std::isfinite(lower) && std::isfinite(upper) && lower < upper)) {
        throw ConfigError(where + ": continuous range needs finite start < end");
      }
      break;
  }
}

void SearchSpace::validate() const {
  for (const auto& [name, interval] : variables) interval.validate(name);
}

std::string sample_value(const Interval& interval, Rng& rng) {
  switch (interval.kind) {
    case Interval::Kind::List:
      return interval.values[rng.below(interval.values.size())];
    case Interval::Kind::Discrete: {
      const auto span = static_cast<std::uint64_t>(interval.last - interval.first) + 1;
      return std::to_string(interval.first + static_cast<std::int64_t>(rng.below(span)));
    }
    case Interval::Kind::Continuous: {
      double x = rng.uniform(interval.lower, interval.upper);
      // Rounding in lo + (hi - lo) * u can land on hi.
      if (x >= interval.upper) x = std::nextafter(interval.upper, interval.lower);
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, x);
      std::string text(buf, res.ptr);
      if (text.find_first_of(".e") == std::string::npos) text += ".0";
      return text;
    }
  }
  return {};
}

Assignment sample_trial(const SearchSpace& space, Rng& rng) {
  Assignment out;
  for (const auto& [name, interval] : space.variables) out.emplace(name, sample_value(interval, rng));
  return out;
}

namespace {

template <typename OnText, typename OnVar>
void scan_template(std::string_view text, OnText on_text, OnVar on_var) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("${", pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find('}', open + 2);
    if (close == std::string_view::npos) throw ConfigError("unterminated ${ in configuration template");
    on_text(text.substr(pos, open - pos));
    const auto name = text.substr(open + 2, close - open - 2);
    if (name.empty()) throw ConfigError("empty ${} placeholder in configuration template");
    on_var(name);
    pos = close + 1;
  }
  on_text(text.substr(std::min(pos, text.size())));
}

}  // namespace

std::set<std::string, std::less<>> template_variables(std::string_view text) {
  std::set<std::string, std::less<>> out;
  scan_template(text, [](std::string_view) {}, [&](std::string_view name) { out.emplace(name); });
  return out;
}

std::string render_template(std::string_view text, const Assignment& assignment) {
  std::string out;
  scan_template(
      text, [&](std::string_view piece) { out += piece; },
      [&](std::string_view name) {
        const auto it = assignment.find(name);
        if (it == assignment.end()) {
          throw ConfigError("template variable '${" + std::string(name) + "}' has no search interval");
        }
        out += it->second;
      });
  return out;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial, std::size_t seed_index) {
  return derive_seed(master_seed, trial, seed_index);
}

SearchReport run_search(std::string_view template_text, const SearchSpace& space,
                        const SearchConfig& config, const TrialRunner& runner) {
  space.validate();
  if (config.trials == 0) throw ConfigError("search needs at least one trial");
  if (config.seeds_per_trial == 0) throw ConfigError("search needs at least one seed per trial");
  for (const auto& name : template_variables(template_text)) {
    if (!space.variables.contains(name)) {
      throw ConfigError("template variable '${" + name + "}' has no search interval");
    }
  }

  SearchReport report;
  Rng rng(config.master_seed);
  for (std::size_t t = 0; t < config.trials; ++t) {
    TrialResult trial;
    trial.index = t;
    trial.assignment = sample_trial(space, rng);
    trial.rendered = render_template(template_text, trial.assignment);
    report.trials.push_back(std::move(trial));
  }

  for (TrialResult& trial : report.trials) {
    for (std::size_t s = 0; s < config.seeds_per_trial && !trial.failure; ++s) {
      const std::uint64_t seed = trial_seed(config.master_seed, trial.index, s);
      trial.seeds.push_back(seed);
      ++report.runs;
      try {
        const double score = runner(trial.rendered, seed, trial.index, s);
        if (!std::isfinite(score)) {
          trial.failure = "seed " + std::to_string(s) + ": non-finite score";
        } else {
          trial.scores.push_back(score);
        }
      } catch (const std::exception& e) {
        trial.failure = "seed " + std::to_string(s) + ": " + e.what();
      }
    }
    if (!trial.failure) {
      trial.mean = std::accumulate(trial.scores.begin(), trial.scores.end(), 0.0) /
                   static_cast<double>(trial.scores.size());
      report.ranking.push_back(trial.index);
    }
  }

  std::stable_sort(report.ranking.begin(), report.ranking.end(), [&](std::size_t a, std::size_t b) {
    const double x = *report.trials[a].mean, y = *report.trials[b].mean;
    return config.higher_is_better ? x > y : x < y;
  });
  if (report.ranking.empty()) return report;
  report.winner = report.ranking.front();

  const TrialResult& best = report.trials[*report.winner];
  for (std::size_t k = 0; k < config.final_seeds; ++k) {
    const std::uint64_t seed = trial_seed(config.master_seed, best.index, config.seeds_per_trial + k);
    report.final_seeds.push_back(seed);
    ++report.runs;
    report.final_scores.push_back(runner(best.rendered, seed, best.index, config.seeds_per_trial + k));
  }
  return report;
}

void write_search_report(std::ostream& out, const SearchReport& report) {
  out << "rank\ttrial\tmean\tscores\tassignment\tstatus\n";
  auto row = [&](const TrialResult& t, std::string rank) {
    out << rank << '\t' << t.index << '\t';
    if (t.mean) {
      out << *t.mean;
    } else {
      out << "NA";
    }
    out << '\t';
    for (std::size_t i = 0; i < t.scores.size(); ++i) out << (i ? "," : "") << t.scores[i];
    out << '\t';
    bool first = true;
    for (const auto& [k, v] : t.assignment) {
      out << (first ? "" : ",") << k << '=' << v;
      first = false;
    }
    out << '\t' << (t.failure ? "failed: " + *t.failure : std::string("ok")) << '\n';
  };
  const auto precision = out.precision(10);
  for (std::size_t r = 0; r < report.ranking.size(); ++r) {
    row(report.trials[report.ranking[r]], std::to_string(r + 1));
  }
  for (const TrialResult& t : report.trials) {
    if (t.failure) row(t, "-");
  }
  out.precision(precision);
}

}  // namespace mtltag
