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

#include <exception>
#include <iostream>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "commands.hpp"
#include "mtltag/error.hpp"


int main(int argc, char** argv) {
  using namespace mtltag::cli;
  CLI::App app{"mtltag: multi-task sequence tagger"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mtltag 0.1.0");

  TrainOptions train;
  std::string train_output;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a YAML configuration");
  train_cmd->add_option("config", train.config, "Configuration file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--set", train.overrides, "Override a configuration leaf: dotted.path=value");
  train_cmd->add_option("-o,--output", train_output, "Output directory (default: training.output_dir)");
  train_cmd->add_flag("-q,--quiet", train.quiet, "Do not print per-epoch progress");

  PredictOptions predict;
  std::string predict_task, predict_output;
  auto* predict_cmd = app.add_subcommand("predict", "Append predicted labels to a CoNLL file");
  predict_cmd->add_option("-m,--model", predict.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("-i,--input", predict.input, "CoNLL input")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("-t,--task", predict_task, "Task to predict (default: every task, one column each)");
  predict_cmd->add_option("--token-column", predict.token_column, "0-based token column")->capture_default_str();
  predict_cmd->add_option("--postprocess", predict.postprocess, "none, bio-o, bio-b or am")->capture_default_str();
  predict_cmd->add_option("-o,--output", predict_output, "Output file (default: stdout)");

  EvaluateOptions evaluate;
  std::string eval_model, eval_task, eval_profile;
  std::size_t eval_pred = 0;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions or a checkpoint against gold labels");
  evaluate_cmd->add_option("-i,--input", evaluate.input, "CoNLL file with gold labels")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("-m,--model", eval_model, "Checkpoint to predict with");
  evaluate_cmd->add_option("-t,--task", eval_task, "Task of the checkpoint to evaluate");
  evaluate_cmd->add_option("--token-column", evaluate.token_column, "0-based token column")->capture_default_str();
  evaluate_cmd->add_option("--gold-column", evaluate.gold_column, "0-based gold label column")->capture_default_str();
  auto* pred_opt = evaluate_cmd->add_option("--pred-column", eval_pred, "0-based predicted column (default: last)");
  evaluate_cmd->add_option("--metrics", evaluate.metrics, "Metric names")->delimiter(',')->capture_default_str();
  evaluate_cmd->add_option("--postprocess", evaluate.postprocess, "none, bio-o, bio-b or am")->capture_default_str();
  evaluate_cmd->add_option("--empty-symbol", evaluate.empty_symbol, "Alignment symbol for the empty string")->capture_default_str();
  evaluate_cmd->add_option("--join-symbol", evaluate.join_symbol, "Alignment symbol joining two phonemes")->capture_default_str();
  evaluate_cmd->add_option("--overlap-profile", eval_profile, "Write AM span-overlap pairs as CSV");

  SearchOptions search;
  std::string search_output;
  auto* search_cmd = app.add_subcommand("search", "Random hyper-parameter search over a templated configuration");
  search_cmd->add_option("config", search.config, "Configuration template with a search section")->required()->check(CLI::ExistingFile);
  search_cmd->add_option("--set", search.overrides, "Override a configuration leaf: dotted.path=value");
  search_cmd->add_option("-o,--output", search_output, "Results directory (default: training.output_dir)");
  search_cmd->add_flag("-q,--quiet", search.quiet, "Do not print per-run scores");

  StatsOptions stats;
  auto* stats_cmd = app.add_subcommand("stats", "Documents, tokens, labels, entropy and kurtosis per corpus");
  stats_cmd->add_option("inputs", stats.inputs, "CoNLL files")->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--token-column", stats.token_column, "0-based token column")->capture_default_str();
  stats_cmd->add_option("--label-column", stats.label_column, "0-based label column")->capture_default_str();

  DeriveOptions derive;
  std::string derive_output;
  auto* derive_cmd = app.add_subcommand("derive-subtasks", "Append ACS/ACI/ARS/ARI columns derived from AM labels");
  derive_cmd->add_option("-i,--input", derive.input, "CoNLL file with AM labels")->required()->check(CLI::ExistingFile);
  derive_cmd->add_option("--label-column", derive.label_column, "0-based AM label column")->capture_default_str();
  derive_cmd->add_option("--subtasks", derive.subtasks, "Subtasks to derive")->delimiter(',')->required();
  derive_cmd->add_option("-o,--output", derive_output, "Output file (default: stdout)");

  PostprocessOptions post;
  std::string post_output;
  auto* post_cmd = app.add_subcommand("postprocess", "Repair a BIO or AM label column");
  post_cmd->add_option("-i,--input", post.input, "CoNLL file")->required()->check(CLI::ExistingFile);
  post_cmd->add_option("--column", post.column, "0-based label column")->capture_default_str();
  post_cmd->add_option("--variant", post.variant, "bio-o, bio-b or am")->capture_default_str();
  post_cmd->add_option("-o,--output", post_output, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) {
      if (!train_output.empty()) train.output = train_output;
      return cmd_train(train, std::cout);
    }
    if (predict_cmd->parsed()) {
      if (!predict_task.empty()) predict.task = predict_task;
      if (!predict_output.empty()) predict.output = predict_output;
      return cmd_predict(predict, std::cout);
    }
    if (evaluate_cmd->parsed()) {
      if (!eval_model.empty()) evaluate.model = eval_model;
      if (!eval_task.empty()) evaluate.task = eval_task;
      if (pred_opt->count() > 0) evaluate.pred_column = eval_pred;
      if (!eval_profile.empty()) evaluate.overlap_profile = eval_profile;
      return cmd_evaluate(evaluate, std::cout);
    }
    if (search_cmd->parsed()) {
      if (!search_output.empty()) search.output = search_output;
      return cmd_search(search, std::cout);
    }
    if (stats_cmd->parsed()) return cmd_stats(stats, std::cout, std::cerr);
    if (derive_cmd->parsed()) {
      if (!derive_output.empty()) derive.output = derive_output;
      return cmd_derive_subtasks(derive, std::cout);
    }
    if (post_cmd->parsed()) {
      if (!post_output.empty()) post.output = post_output;
      return cmd_postprocess(post, std::cout);
    }
  } catch (const mtltag::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mtltag::exit_code(e.kind());
  } catch (const YAML::Exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
