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
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "mtltag/embeddings.hpp"
#include "mtltag/training.hpp"

namespace mtltag::cli {

struct LoadedTask {
  Corpus train;
  std::optional<Corpus> dev;
  std::optional<Corpus> test;
};

std::vector<LoadedTask> load_task_data(const RunConfig& config);

/// Concatenated embeddings pruned to the words of all loaded corpora, or
/// nullopt when no files are configured.
std::optional<EmbeddingSet> load_embeddings(const RunConfig& config, const std::vector<LoadedTask>& data);

struct TrainOutcome {
  TrainResult result;
  /// Rows of (split, task, metric, value) for dev and test data.
  std::vector<std::vector<std::string>> report;
  /// Dev score of the monitored task and metric, when dev data exists.
  std::optional<double> monitored_dev;
};

/// Trains from a parsed configuration, writing model.ckpt, train.log and
/// metrics.tsv into out_dir. All input is read before anything is written.
TrainOutcome run_training(const RunConfig& config, const std::filesystem::path& out_dir,
                          std::ostream* progress = nullptr);

struct TrainOptions {
  std::filesystem::path config;
  std::vector<std::string> overrides;
  std::optional<std::filesystem::path> output;
  bool quiet = false;
};
int cmd_train(const TrainOptions& options, std::ostream& out);

struct PredictOptions {
  std::filesystem::path model;
  std::filesystem::path input;
  std::optional<std::string> task;
  std::size_t token_column = 0;
  std::string postprocess = "none";
  std::optional<std::filesystem::path> output;
};
int cmd_predict(const PredictOptions& options, std::ostream& out);

struct EvaluateOptions {
  std::filesystem::path input;
  std::optional<std::filesystem::path> model;
  std::optional<std::string> task;
  std::size_t token_column = 0;
  std::size_t gold_column = 1;
  std::optional<std::size_t> pred_column;
  std::vector<std::string> metrics = {"accuracy", "f1"};
  std::string postprocess = "none";
  std::string empty_symbol = "EMPTY";
  std::string join_symbol = "_MYJOIN_";
  std::optional<std::filesystem::path> overlap_profile;
};
int cmd_evaluate(const EvaluateOptions& options, std::ostream& out);

struct SearchOptions {
  std::filesystem::path config;
  std::vector<std::string> overrides;
  std::optional<std::filesystem::path> output;
  bool quiet = false;
};
int cmd_search(const SearchOptions& options, std::ostream& out);

struct StatsOptions {
  std::vector<std::filesystem::path> inputs;
  std::size_t token_column = 0;
  std::size_t label_column = 1;
};
int cmd_stats(const StatsOptions& options, std::ostream& out, std::ostream& err);

struct DeriveOptions {
  std::filesystem::path input;
  std::size_t label_column = 1;
  std::vector<std::string> subtasks;
  std::optional<std::filesystem::path> output;
};
int cmd_derive_subtasks(const DeriveOptions& options, std::ostream& out);

struct PostprocessOptions {
  std::filesystem::path input;
  std::size_t column = 1;
  std::string variant = "am";
  std::optional<std::filesystem::path> output;
};
int cmd_postprocess(const PostprocessOptions& options, std::ostream& out);

}  // namespace mtltag::cli
