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

#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "mtltag/am_labels.hpp"
#include "mtltag/bio.hpp"
#include "mtltag/checkpoint.hpp"
#include "mtltag/corpus_cache.hpp"
#include "mtltag/error.hpp"
#include "mtltag/hyperopt.hpp"
#include "mtltag/label_stats.hpp"
#include "mtltag/metrics.hpp"

namespace mtltag::cli {

namespace fs = std::filesystem;

namespace {

// Whitespace-separated rows; a blank line ends a document.
using Rows = std::vector<std::vector<std::string>>;

std::vector<Rows> read_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<Rows> docs(1);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> row;
    for (std::string f; fields >> f;) row.push_back(f);
    if (row.empty()) {
      if (!docs.back().empty()) docs.emplace_back();
    } else {
      docs.back().push_back(std::move(row));
    }
  }
  if (docs.back().empty()) docs.pop_back();
  return docs;
}

void write_rows(std::ostream& out, const std::vector<Rows>& docs) {
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (d > 0) out << '\n';
    for (const auto& row : docs[d]) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
      out << '\n';
    }
  }
}

const std::string& field(const std::vector<Rows>& docs, std::size_t d, std::size_t r, std::size_t col,
                         const fs::path& source) {
  const auto& row = docs[d][r];
  if (col >= row.size()) {
    throw DataError(source.string() + ": document " + std::to_string(d + 1) + ", row " + std::to_string(r + 1) +
                    ": expected at least " + std::to_string(col + 1) + " columns, found " + std::to_string(row.size()));
  }
  return row[col];
}

void emit(const std::optional<fs::path>& path, std::ostream& fallback, const std::function<void(std::ostream&)>& fn) {
  if (!path) {
    fn(fallback);
    return;
  }
  if (path->has_parent_path()) fs::create_directories(path->parent_path());
  std::ofstream out(*path);
  if (!out) throw DataError("cannot write " + path->string());
  fn(out);
}

std::vector<std::string> postprocess_sequence(const std::vector<std::string>& labels, Postprocess p) {
  ResultList r;
  auto& s = r.sentences.emplace_back();
  for (const auto& l : labels) s.push_back({"", l, l});
  r = apply_postprocess(std::move(r), p);
  std::vector<std::string> out;
  for (const auto& t : r.sentences.front()) out.push_back(t.predicted);
  return out;
}

Corpus load_split(const fs::path& path, const ColumnSpec& columns, const RunConfig& config) {
  if (!fs::exists(path)) throw DataError("input file not found: " + path.string());
  return load_corpus(path, columns, config.cache_dir);
}

}  // namespace

std::vector<LoadedTask> load_task_data(const RunConfig& config) {
  std::vector<LoadedTask> out;
  for (const TaskFiles& f : config.files) {
    LoadedTask t;
    t.train = load_split(f.train, f.columns, config);
    if (f.dev) t.dev = load_split(*f.dev, f.columns, config);
    if (f.test) t.test = load_split(*f.test, f.columns, config);
    out.push_back(std::move(t));
  }
  return out;
}

std::optional<EmbeddingSet> load_embeddings(const RunConfig& config, const std::vector<LoadedTask>& data) {
  if (config.embedding_files.empty()) return std::nullopt;
  const EmbeddingSet full = build_embedding_set(config.embedding_files);
  std::vector<const Corpus*> corpora;
  for (const auto& t : data) {
    corpora.push_back(&t.train);
    if (t.dev) corpora.push_back(&*t.dev);
    if (t.test) corpora.push_back(&*t.test);
  }
  return prune_embeddings(full, corpora);
}

TrainOutcome run_training(const RunConfig& config, const fs::path& out_dir, std::ostream* progress) {
  const auto data = load_task_data(config);
  const auto embeddings = load_embeddings(config, data);

  std::vector<TaskData> task_data;
  for (std::size_t t = 0; t < data.size(); ++t) {
    task_data.push_back({&data[t].train, data[t].dev ? &*data[t].dev : nullptr, config.files[t].train_fraction});
  }

  fs::create_directories(out_dir);
  std::ofstream log(out_dir / "train.log");
  if (!log) throw DataError("cannot write " + (out_dir / "train.log").string());
  log << epoch_log_header(config.network) << '\n';
  if (progress) *progress << epoch_log_header(config.network) << '\n';

  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    log << epoch_log_line(r) << '\n' << std::flush;
    if (progress) *progress << epoch_log_line(r) << '\n' << std::flush;
  };
  hooks.on_checkpoint = [&](const Model& model, std::size_t) { save_model(model, out_dir / "model.ckpt"); };

  TrainOutcome outcome{train(config.network, task_data, config.training, embeddings ? &*embeddings : nullptr, hooks),
                       {}, std::nullopt};
  const Model& model = outcome.result.model;

  for (std::size_t t = 0; t < data.size(); ++t) {
    const std::string& name = model.config().tasks[t].name;
    const auto score = [&](const Corpus& corpus, const std::vector<std::string>& metrics) {
      const auto results = make_results(corpus, name, predict_corpus(model, t, corpus));
      return evaluate(results, metrics, config.files[t].evaluation);
    };
    for (const auto& [split, corpus] : {std::pair{"dev", &data[t].dev}, std::pair{"test", &data[t].test}}) {
      if (!*corpus) continue;
      for (const auto& [metric, value] : score(**corpus, config.files[t].metrics)) {
        std::ostringstream v;
        v.precision(10);
        v << value;
        outcome.report.push_back({split, name, metric, v.str()});
      }
    }
    if (t == config.monitored_task() && data[t].dev) {
      if (config.training.early_stopping) {
        outcome.monitored_dev = outcome.result.best_dev;
      } else {
        outcome.monitored_dev = score(*data[t].dev, {config.monitored_metric()}).front().second;
      }
    }
  }

  std::ofstream metrics(out_dir / "metrics.tsv");
  metrics << "split\ttask\tmetric\tvalue\n";
  for (const auto& row : outcome.report) metrics << row[0] << '\t' << row[1] << '\t' << row[2] << '\t' << row[3] << '\n';
  return outcome;
}

int cmd_train(const TrainOptions& options, std::ostream& out) {
  const RunConfig config = load_run_config(options.config, options.overrides);
  if (config.search) {
    std::cerr << "note: the search section is ignored by 'train'\n";
  }
  const fs::path dir = options.output ? *options.output : config.output_dir;
  const auto outcome = run_training(config, dir, options.quiet ? nullptr : &std::cerr);
  out << "checkpoint\t" << (dir / "model.ckpt").string() << '\n';
  out << "best_epoch\t" << outcome.result.best_epoch << '\n';
  for (const auto& row : outcome.report) out << row[0] << '.' << row[1] << '.' << row[2] << '\t' << row[3] << '\n';
  return 0;
}

int cmd_predict(const PredictOptions& options, std::ostream& out) {
  const Postprocess post = parse_postprocess(options.postprocess);
  const Model model = load_model(options.model);
  std::vector<std::size_t> tasks;
  if (options.task) {
    tasks.push_back(model.config().task_index(*options.task));
  } else {
    for (std::size_t t = 0; t < model.config().tasks.size(); ++t) tasks.push_back(t);
  }
  auto docs = read_rows(options.input);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    Sentence sentence;
    for (std::size_t r = 0; r < docs[d].size(); ++r) {
      sentence.push_back({field(docs, d, r, options.token_column, options.input), {}});
    }
    for (std::size_t t : tasks) {
      auto labels = postprocess_sequence(model.predict_labels(t, sentence), post);
      for (std::size_t r = 0; r < docs[d].size(); ++r) docs[d][r].push_back(std::move(labels[r]));
    }
  }
  emit(options.output, out, [&](std::ostream& o) { write_rows(o, docs); });
  return 0;
}

int cmd_evaluate(const EvaluateOptions& options, std::ostream& out) {
  EvaluationOptions eval;
  eval.postprocess = parse_postprocess(options.postprocess);
  eval.empty_symbol = options.empty_symbol;
  eval.join_symbol = options.join_symbol;
  for (const auto& m : options.metrics) higher_is_better(m);

  ResultList results;
  if (options.model) {
    const Model model = load_model(*options.model);
    const std::size_t task = options.task ? model.config().task_index(*options.task) : 0;
    const std::string& name = model.config().tasks[task].name;
    ColumnSpec columns;
    columns.token_column = options.token_column;
    columns.label_columns[name] = options.gold_column;
    const Corpus corpus = read_conll_file(options.input, columns);
    results = make_results(corpus, name, predict_corpus(model, task, corpus));
  } else {
    const auto docs = read_rows(options.input);
    for (std::size_t d = 0; d < docs.size(); ++d) {
      auto& sentence = results.sentences.emplace_back();
      for (std::size_t r = 0; r < docs[d].size(); ++r) {
        const std::size_t pred_col = options.pred_column ? *options.pred_column : docs[d][r].size() - 1;
        sentence.push_back({field(docs, d, r, options.token_column, options.input),
                            field(docs, d, r, options.gold_column, options.input),
                            field(docs, d, r, pred_col, options.input)});
      }
    }
  }

  out.precision(10);
  for (const auto& [metric, value] : evaluate(results, options.metrics, eval)) out << metric << '\t' << value << '\n';

  if (options.overlap_profile) {
    const ResultList fixed = apply_postprocess(results, eval.postprocess, eval.am_aliases);
    emit(options.overlap_profile, out, [&](std::ostream& o) {
      o << "length,overlap\n";
      for (const auto& sentence : fixed.sentences) {
        std::vector<std::string> gold, pred;
        for (const auto& t : sentence) {
          gold.push_back(t.gold);
          pred.push_back(t.predicted);
        }
        const auto g = labeled_spans(rel_to_abs_links(components_from_labels(parse_am_sequence(gold, eval.am_aliases))));
        const auto p = labeled_spans(rel_to_abs_links(components_from_labels(parse_am_sequence(pred, eval.am_aliases))));
        for (const auto& pair : span_overlap_profile(g, p)) o << pair.length << ',' << pair.overlap << '\n';
      }
    });
  }
  return 0;
}

int cmd_search(const SearchOptions& options, std::ostream& out) {
  std::ifstream in(options.config);
  if (!in) throw ConfigError("cannot read configuration " + options.config.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string source = options.config.string();
  const fs::path base = options.config.parent_path();
  const std::string template_text = apply_overrides_to_text(buffer.str(), source, options.overrides);

  const YAML::Node guarded = parse_template(template_text, source);
  if (!guarded.IsMap() || !guarded["search"]) throw ConfigError(source + ": no 'search' section");
  const SearchSettings settings = parse_search_section(guarded["search"], source);
  settings.space.validate();

  // Render and validate every trial before any training starts.
  SearchConfig search = settings.config;
  std::optional<RunConfig> first;
  Rng rng(search.master_seed);
  for (std::size_t t = 0; t < search.trials; ++t) {
    const std::string rendered = render_template(template_text, sample_trial(settings.space, rng));
    RunConfig rc = load_run_config_text(rendered, base, source + " (trial " + std::to_string(t) + ")");
    if (!first) first = std::move(rc);
  }
  search.higher_is_better = higher_is_better(first->monitored_metric());
  const fs::path root = options.output ? *options.output : first->output_dir;

  std::map<std::size_t, double> trial_best;
  const TrialRunner runner = [&](const std::string& rendered, std::uint64_t seed, std::size_t trial,
                                 std::size_t seed_index) {
    RunConfig rc = load_run_config_text(rendered, base, source);
    rc.training.seed = seed;
    char name[32];
    std::snprintf(name, sizeof name, "trial-%03zu", trial);
    const fs::path trial_dir = root / name;
    fs::create_directories(trial_dir);
    if (seed_index == 0) std::ofstream(trial_dir / "config.yaml") << rendered;
    const fs::path seed_dir = trial_dir / ("seed-" + std::to_string(seed_index));
    const auto outcome = run_training(rc, seed_dir);
    if (!outcome.monitored_dev) throw DataError("task '" + rc.network.tasks[rc.monitored_task()].name + "' has no dev data");
    const double score = *outcome.monitored_dev;
    const auto it = trial_best.find(trial);
    const bool better = it == trial_best.end() || (search.higher_is_better ? score > it->second : score < it->second);
    if (better && fs::exists(seed_dir / "model.ckpt")) {
      trial_best[trial] = score;
      fs::copy_file(seed_dir / "model.ckpt", trial_dir / "model.ckpt", fs::copy_options::overwrite_existing);
    }
    fs::remove(seed_dir / "model.ckpt");
    if (!options.quiet) std::cerr << name << " seed " << seed_index << '\t' << score << '\n';
    return score;
  };

  const SearchReport report = run_search(template_text, settings.space, search, runner);
  fs::create_directories(root);
  std::ofstream(root / "report.tsv") << [&] {
    std::ostringstream s;
    write_search_report(s, report);
    return s.str();
  }();
  write_search_report(out, report);
  out << "runs\t" << report.runs << '\n';
  if (report.winner) {
    out << "winner\t" << *report.winner << '\n';
    for (std::size_t k = 0; k < report.final_scores.size(); ++k) out << "final\t" << k << '\t' << report.final_scores[k] << '\n';
  } else {
    out << "winner\tnone\n";
  }
  return report.winner ? 0 : 3;
}

int cmd_stats(const StatsOptions& options, std::ostream& out, std::ostream& err) {
  out << "corpus\tdocs\ttokens\tlabels\tentropy\tkurtosis\n";
  for (const auto& path : options.inputs) {
    ColumnSpec columns;
    columns.token_column = options.token_column;
    columns.label_columns["label"] = options.label_column;
    const Corpus corpus = read_conll_file(path, columns);
    const LabelDistribution dist = label_distribution(corpus, "label");
    out << path.string() << '\t' << corpus.sentences.size() << '\t' << corpus.token_count() << '\t'
        << dist.label_count() << '\t';
    if (dist.total() == 0) {
      out << "NA\tNA\n";
      continue;
    }
    out << label_entropy(dist) << '\t';
    try {
      out << label_kurtosis(dist) << '\n';
    } catch (const DataError& e) {
      out << "NA\n";
      err << path.string() << ": " << e.what() << '\n';
    }
  }
  return 0;
}

int cmd_derive_subtasks(const DeriveOptions& options, std::ostream& out) {
  std::vector<Subtask> subtasks;
  for (const auto& s : options.subtasks) subtasks.push_back(parse_subtask(s));
  if (subtasks.empty()) throw ConfigError("no subtasks requested");
  auto docs = read_rows(options.input);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (std::size_t r = 0; r < docs[d].size(); ++r) {
      const AmLabel label = parse_am_label(field(docs, d, r, options.label_column, options.input));
      for (Subtask s : subtasks) docs[d][r].push_back(derive_subtask_label(label, s));
    }
  }
  emit(options.output, out, [&](std::ostream& o) { write_rows(o, docs); });
  return 0;
}

int cmd_postprocess(const PostprocessOptions& options, std::ostream& out) {
  const Postprocess post = parse_postprocess(options.variant);
  auto docs = read_rows(options.input);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::vector<std::string> labels;
    for (std::size_t r = 0; r < docs[d].size(); ++r) labels.push_back(field(docs, d, r, options.column, options.input));
    auto fixed = postprocess_sequence(labels, post);
    for (std::size_t r = 0; r < docs[d].size(); ++r) docs[d][r][options.column] = std::move(fixed[r]);
  }
  emit(options.output, out, [&](std::ostream& o) { write_rows(o, docs); });
  return 0;
}

}  // namespace mtltag::cli
