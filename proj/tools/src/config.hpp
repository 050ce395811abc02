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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "mtltag/corpus_io.hpp"
#include "mtltag/hyperopt.hpp"
#include "mtltag/metrics.hpp"
#include "mtltag/network.hpp"
#include "mtltag/training.hpp"

namespace mtltag::cli {

struct TaskFiles {
  std::filesystem::path train;
  std::optional<std::filesystem::path> dev;
  std::optional<std::filesystem::path> test;
  ColumnSpec columns;
  double train_fraction = 1.0;
  std::vector<std::string> metrics;
  EvaluationOptions evaluation;
};

struct SearchSettings {
  SearchSpace space;
  SearchConfig config;
};

struct RunConfig {
  NetworkConfig network;
  TrainConfig training;
  std::vector<TaskFiles> files;  // parallel to network.tasks
  std::optional<std::filesystem::path> cache_dir;
  std::vector<std::filesystem::path> embedding_files;
  std::filesystem::path output_dir;
  std::optional<SearchSettings> search;

  /// Task whose dev score drives early stopping and search ranking.
  std::size_t monitored_task() const;
  std::string monitored_metric() const;
};

/// Directory that relative output paths resolve against: the
/// MTLTAG_RESULTS_DIR environment variable, else "results".
std::filesystem::path results_root();

YAML::Node parse_yaml(std::string_view text, std::string_view source);

/// Applies "dotted.path=value"; numeric path parts index sequences.
void apply_override(YAML::Node& root, std::string_view assignment);

/// Parses a `search` section.
SearchSettings parse_search_section(const YAML::Node& node, std::string_view source);

/// Validates the tree (unknown keys are errors with their location) and
/// resolves relative input paths against base_dir.
RunConfig parse_run_config(const YAML::Node& root, const std::filesystem::path& base_dir,
                           std::string_view source);

/// Reads, overrides and parses a configuration file.
RunConfig load_run_config(const std::filesystem::path& path, std::span<const std::string> overrides = {});
/// Same for configuration text, e.g. a rendered search template.
RunConfig load_run_config_text(std::string_view text, const std::filesystem::path& base_dir,
                               std::string_view source, std::span<const std::string> overrides = {});

/// Parses text that may hold ${var} placeholders; each placeholder becomes
/// a plain token so it can sit anywhere a scalar can.
YAML::Node parse_template(std::string_view text, std::string_view source);

/// Applies the overrides to the raw text and re-emits it as YAML, keeping
/// ${var} placeholders intact.
std::string apply_overrides_to_text(std::string_view text, std::string_view source,
                                    std::span<const std::string> overrides);

}  // namespace mtltag::cli
