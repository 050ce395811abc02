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

#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <regex>
#include <set>
#include <sstream>

#include "mtltag/error.hpp"

namespace mtltag::cli {

namespace {

class Schema {
 public:
  explicit Schema(std::string source) : source_(std::move(source)) {}

  std::string where(const YAML::Node& node) const {
    const YAML::Mark mark = node.Mark();
    if (mark.is_null()) return source_;
    return source_ + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
  }

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    throw ConfigError(where(node) + ": " + message);
  }

  void expect_map(const YAML::Node& node, std::string_view what) const {
    if (!node.IsMap()) fail(node, std::string(what) + " must be a mapping");
  }

  void keys(const YAML::Node& node, std::string_view what, std::initializer_list<std::string_view> allowed) const {
    expect_map(node, what);
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      bool ok = false;
      for (auto a : allowed) ok = ok || a == key;
      if (!ok) fail(kv.first, "unknown key '" + key + "' in " + std::string(what));
    }
  }

  template <typename T>
  T as(const YAML::Node& node, std::string_view what) const {
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "invalid value for " + std::string(what));
    }
  }

  template <typename T>
  T get(const YAML::Node& map, const char* key, T fallback, std::string_view what) const {
    const YAML::Node n = map[key];
    if (!n || n.IsNull()) return fallback;
    return as<T>(n, std::string(what) + "." + key);
  }

  template <typename T>
  T require(const YAML::Node& map, const char* key, std::string_view what) const {
    const YAML::Node n = map[key];
    if (!n || n.IsNull()) fail(map, "missing required key '" + std::string(key) + "' in " + std::string(what));
    return as<T>(n, std::string(what) + "." + key);
  }

  template <typename T>
  T checked(const YAML::Node& map, const char* key, auto&& fn) const {
    try {
      return fn();
    } catch (const ConfigError& e) {
      fail(map[key] ? map[key] : map, e.what());
    }
  }

 private:
  std::string source_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<std::string> metric_list(const Schema& s, const YAML::Node& node, std::string_view what) {
  auto names = s.as<std::vector<std::string>>(node, what);
  for (const auto& m : names) {
    try {
      higher_is_better(m);
    } catch (const ConfigError& e) {
      s.fail(node, e.what());
    }
  }
  return names;
}

Interval parse_interval(const Schema& s, const YAML::Node& node, const std::string& name) {
  const std::string what = "search.variables." + name;
  s.keys(node, what, {"list", "discrete", "continuous"});
  if (node.size() != 1) s.fail(node, what + " needs exactly one of list, discrete or continuous");
  Interval interval;
  if (node["list"]) {
    interval = Interval::list(s.as<std::vector<std::string>>(node["list"], what + ".list"));
  } else if (node["discrete"]) {
    const auto ends = s.as<std::vector<std::int64_t>>(node["discrete"], what + ".discrete");
    if (ends.size() != 2) s.fail(node["discrete"], what + ".discrete needs [start, end]");
    interval = Interval::discrete(ends[0], ends[1]);
  } else {
    const auto ends = s.as<std::vector<double>>(node["continuous"], what + ".continuous");
    if (ends.size() != 2) s.fail(node["continuous"], what + ".continuous needs [start, end]");
    interval = Interval::continuous(ends[0], ends[1]);
  }
  try {
    interval.validate(name);
  } catch (const ConfigError& e) {
    s.fail(node, e.what());
  }
  return interval;
}

const std::regex& placeholder_pattern() {
  static const std::regex pattern(R"(\$\{([A-Za-z0-9_.\-]+)\})");
  return pattern;
}

constexpr std::string_view kGuardPrefix = "MTLTAGVAR__";
constexpr std::string_view kGuardSuffix = "__";

}  // namespace

std::size_t RunConfig::monitored_task() const {
  if (training.early_stopping) return network.task_index(training.early_stopping->task);
  return training.main_task.empty() ? 0 : network.task_index(training.main_task);
}

std::string RunConfig::monitored_metric() const {
  if (training.early_stopping) return training.early_stopping->metric;
  const auto& metrics = files.at(monitored_task()).metrics;
  return metrics.empty() ? "accuracy" : metrics.front();
}

std::filesystem::path results_root() {
  if (const char* env = std::getenv("MTLTAG_RESULTS_DIR"); env != nullptr && *env != '\0') return env;
  return "results";
}

YAML::Node parse_yaml(std::string_view text, std::string_view source) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string(source) + ":" + std::to_string(e.mark.line + 1) + ":" +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
}

void apply_override(YAML::Node& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form path=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));
  std::vector<std::string> parts;
  std::stringstream in(path);
  for (std::string part; std::getline(in, part, '.');) {
    if (part.empty()) throw ConfigError("override path '" + path + "' has an empty component");
    parts.push_back(part);
  }
  YAML::Node cur;
  cur.reset(root);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& part = parts[i];
    const bool last = i + 1 == parts.size();
    YAML::Node next;
    if (cur.IsSequence()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        throw ConfigError("override path '" + path + "': '" + part + "' is not a list index");
      }
      if (idx >= cur.size()) throw ConfigError("override path '" + path + "': index " + part + " out of range");
      if (last) {
        cur[idx] = parse_yaml(value, "override");
        return;
      }
      next.reset(cur[idx]);
    } else {
      if (cur.IsScalar()) throw ConfigError("override path '" + path + "' descends into a scalar");
      if (last) {
        cur[part] = parse_yaml(value, "override");
        return;
      }
      if (!cur[part]) cur[part] = YAML::Node(YAML::NodeType::Map);
      next.reset(cur[part]);
    }
    cur.reset(next);
  }
}

SearchSettings parse_search_section(const YAML::Node& se, std::string_view source) {
  const Schema s{std::string(source)};
  s.keys(se, "search", {"trials", "seeds_per_trial", "final_seeds", "master_seed", "variables"});
  SearchSettings settings;
  settings.config.trials = s.get<std::size_t>(se, "trials", settings.config.trials, "search");
  settings.config.seeds_per_trial = s.get<std::size_t>(se, "seeds_per_trial", settings.config.seeds_per_trial, "search");
  settings.config.final_seeds = s.get<std::size_t>(se, "final_seeds", settings.config.final_seeds, "search");
  settings.config.master_seed = s.get<std::uint64_t>(se, "master_seed", settings.config.master_seed, "search");
  const YAML::Node vars = se["variables"];
  if (!vars) s.fail(se, "search needs a 'variables' mapping");
  s.expect_map(vars, "search.variables");
  for (const auto& kv : vars) {
    const auto name = kv.first.as<std::string>();
    settings.space.variables.emplace(name, parse_interval(s, kv.second, name));
  }
  return settings;
}

RunConfig parse_run_config(const YAML::Node& root, const std::filesystem::path& base_dir,
                           std::string_view source) {
  const Schema s{std::string(source)};
  if (!root || root.IsNull()) throw ConfigError(std::string(source) + ": empty configuration");
  s.keys(root, "configuration",
         {"training", "tasks", "input", "embeddings", "network", "regularization", "evaluation", "search"});
  RunConfig rc;

  // evaluation defaults first; tasks may override them
  EvaluationOptions eval_defaults;
  std::vector<std::string> metric_defaults = {"accuracy", "f1"};
  if (const YAML::Node ev = root["evaluation"]) {
    s.keys(ev, "evaluation", {"metrics", "postprocess", "empty_symbol", "join_symbol", "am_aliases"});
    if (ev["metrics"]) metric_defaults = metric_list(s, ev["metrics"], "evaluation.metrics");
    if (ev["postprocess"]) {
      eval_defaults.postprocess = s.checked<Postprocess>(ev, "postprocess", [&] {
        return parse_postprocess(s.as<std::string>(ev["postprocess"], "evaluation.postprocess"));
      });
    }
    eval_defaults.empty_symbol = s.get<std::string>(ev, "empty_symbol", eval_defaults.empty_symbol, "evaluation");
    eval_defaults.join_symbol = s.get<std::string>(ev, "join_symbol", eval_defaults.join_symbol, "evaluation");
    if (const YAML::Node aliases = ev["am_aliases"]) {
      s.expect_map(aliases, "evaluation.am_aliases");
      for (const auto& kv : aliases) {
        eval_defaults.am_aliases[kv.first.as<std::string>()] = s.as<std::string>(kv.second, "evaluation.am_aliases");
      }
    }
  }

  const YAML::Node net = root["network"];
  if (!net) throw ConfigError(std::string(source) + ": missing required section 'network'");
  s.keys(net, "network", {"cell", "shared_layers", "shortcuts", "chars"});
  rc.network.cell = s.checked<CellKind>(net, "cell", [&] {
    return parse_cell_kind(s.get<std::string>(net, "cell", "lstm", "network"));
  });
  rc.network.shared_layers = s.require<std::vector<std::size_t>>(net, "shared_layers", "network");
  rc.network.shortcuts = s.get<bool>(net, "shortcuts", false, "network");
  if (const YAML::Node ch = net["chars"]) {
    s.keys(ch, "network.chars", {"enabled", "embedding_dim", "hidden_dim"});
    rc.network.chars.enabled = s.get<bool>(ch, "enabled", true, "network.chars");
    rc.network.chars.embedding_dim = s.get<std::size_t>(ch, "embedding_dim", 16, "network.chars");
    rc.network.chars.hidden_dim = s.get<std::size_t>(ch, "hidden_dim", 16, "network.chars");
  }

  if (const YAML::Node reg = root["regularization"]) {
    s.keys(reg, "regularization",
           {"word_dropout", "rnn_input_dropout", "rnn_state_dropout", "rnn_output_dropout", "variational"});
    auto& d = rc.network.dropout;
    d.word = s.get<double>(reg, "word_dropout", 0.0, "regularization");
    d.rnn_input = s.get<double>(reg, "rnn_input_dropout", 0.0, "regularization");
    d.rnn_state = s.get<double>(reg, "rnn_state_dropout", 0.0, "regularization");
    d.rnn_output = s.get<double>(reg, "rnn_output_dropout", 0.0, "regularization");
    d.variational = s.get<bool>(reg, "variational", false, "regularization");
  }

  if (const YAML::Node emb = root["embeddings"]) {
    s.keys(emb, "embeddings", {"files", "dim", "trainable"});
    for (const auto& f : s.get<std::vector<std::string>>(emb, "files", {}, "embeddings")) {
      rc.embedding_files.push_back(resolve(base_dir, f));
    }
    rc.network.word_dim = s.get<std::size_t>(emb, "dim", rc.network.word_dim, "embeddings");
    rc.network.train_embeddings = s.get<bool>(emb, "trainable", true, "embeddings");
  }

  if (const YAML::Node input = root["input"]) {
    s.keys(input, "input", {"cache_dir"});
    if (input["cache_dir"]) rc.cache_dir = resolve(base_dir, s.as<std::string>(input["cache_dir"], "input.cache_dir"));
  }

  const YAML::Node tasks = root["tasks"];
  if (!tasks || !tasks.IsSequence() || tasks.size() == 0) {
    s.fail(tasks ? tasks : root, "'tasks' must be a non-empty list");
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const YAML::Node t = tasks[i];
    const std::string what = "tasks[" + std::to_string(i) + "]";
    s.keys(t, what,
           {"name", "train", "dev", "test", "token_column", "label_column", "labels", "termination_layer", "head",
            "dropout", "private_layers", "train_fraction", "metrics", "postprocess"});
    TaskSpec spec;
    spec.name = s.require<std::string>(t, "name", what);
    spec.labels = s.get<std::vector<std::string>>(t, "labels", {}, what);
    spec.termination_layer =
        s.get<std::size_t>(t, "termination_layer", rc.network.shared_layers.size(), what);
    spec.head = s.checked<HeadKind>(t, "head", [&] { return parse_head_kind(s.get<std::string>(t, "head", "softmax", what)); });
    spec.dropout = s.get<double>(t, "dropout", 0.0, what);
    if (const YAML::Node layers = t["private_layers"]) {
      if (!layers.IsSequence()) s.fail(layers, what + ".private_layers must be a list");
      for (const auto& l : layers) {
        s.keys(l, what + ".private_layers", {"units", "activation"});
        PrivateLayerSpec p;
        p.units = s.require<std::size_t>(l, "units", what + ".private_layers");
        p.activation = s.checked<Activation>(l, "activation", [&] {
          return parse_activation(s.get<std::string>(l, "activation", "tanh", what));
        });
        spec.private_layers.push_back(p);
      }
    }
    TaskFiles files;
    files.train = resolve(base_dir, s.require<std::string>(t, "train", what));
    if (t["dev"]) files.dev = resolve(base_dir, s.as<std::string>(t["dev"], what + ".dev"));
    if (t["test"]) files.test = resolve(base_dir, s.as<std::string>(t["test"], what + ".test"));
    files.columns.token_column = s.get<std::size_t>(t, "token_column", 0, what);
    files.columns.label_columns[spec.name] = s.require<std::size_t>(t, "label_column", what);
    files.train_fraction = s.get<double>(t, "train_fraction", 1.0, what);
    if (!(files.train_fraction > 0.0 && files.train_fraction <= 1.0)) {
      s.fail(t["train_fraction"], what + ".train_fraction must lie in (0, 1]");
    }
    files.metrics = t["metrics"] ? metric_list(s, t["metrics"], what + ".metrics") : metric_defaults;
    files.evaluation = eval_defaults;
    if (t["postprocess"]) {
      files.evaluation.postprocess = s.checked<Postprocess>(t, "postprocess", [&] {
        return parse_postprocess(s.as<std::string>(t["postprocess"], what + ".postprocess"));
      });
    }
    rc.training.evaluation[spec.name] = files.evaluation;
    rc.network.tasks.push_back(std::move(spec));
    rc.files.push_back(std::move(files));
  }

  rc.output_dir = results_root() / "run";
  if (const YAML::Node tr = root["training"]) {
    s.keys(tr, "training",
           {"epochs", "batch_size", "optimizer", "learning_rate", "beta1", "beta2", "epsilon", "clip_norm", "seed",
            "main_task", "early_stopping", "output_dir"});
    auto& c = rc.training;
    c.epochs = s.get<std::size_t>(tr, "epochs", c.epochs, "training");
    c.batch_size = s.get<std::size_t>(tr, "batch_size", c.batch_size, "training");
    c.optimizer.kind = s.checked<OptimizerKind>(tr, "optimizer", [&] {
      return parse_optimizer_kind(s.get<std::string>(tr, "optimizer", "adam", "training"));
    });
    c.optimizer.learning_rate = s.get<double>(tr, "learning_rate", c.optimizer.learning_rate, "training");
    c.optimizer.beta1 = s.get<double>(tr, "beta1", c.optimizer.beta1, "training");
    c.optimizer.beta2 = s.get<double>(tr, "beta2", c.optimizer.beta2, "training");
    c.optimizer.epsilon = s.get<double>(tr, "epsilon", c.optimizer.epsilon, "training");
    if (tr["clip_norm"] && !tr["clip_norm"].IsNull()) c.clip_threshold = s.as<double>(tr["clip_norm"], "training.clip_norm");
    c.seed = s.get<std::uint64_t>(tr, "seed", c.seed, "training");
    c.main_task = s.get<std::string>(tr, "main_task", "", "training");
    if (const YAML::Node es = tr["early_stopping"]) {
      s.keys(es, "training.early_stopping", {"task", "metric", "patience"});
      EarlyStoppingConfig e;
      e.task = s.get<std::string>(es, "task", c.main_task.empty() ? rc.network.tasks.front().name : c.main_task,
                                  "training.early_stopping");
      e.metric = s.get<std::string>(es, "metric", e.metric, "training.early_stopping");
      e.patience = s.get<std::size_t>(es, "patience", e.patience, "training.early_stopping");
      c.early_stopping = e;
    }
    if (tr["output_dir"]) {
      const auto out = s.as<std::string>(tr["output_dir"], "training.output_dir");
      rc.output_dir = std::filesystem::path(out).is_absolute() ? std::filesystem::path(out) : results_root() / out;
    }
  }
  if (rc.training.main_task.empty()) rc.training.main_task = rc.network.tasks.front().name;

  if (const YAML::Node se = root["search"]) rc.search = parse_search_section(se, source);

  try {
    rc.network.validate();
    rc.training.validate(rc.network);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  if (rc.search) {
    try {
      rc.search->config.higher_is_better = higher_is_better(rc.monitored_metric());
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(source) + ": " + e.what());
    }
  }
  return rc;
}

RunConfig load_run_config_text(std::string_view text, const std::filesystem::path& base_dir,
                               std::string_view source, std::span<const std::string> overrides) {
  if (!template_variables(text).empty()) {
    throw ConfigError(std::string(source) + ": unresolved ${...} placeholder (use the search command)");
  }
  YAML::Node root = parse_yaml(text, source);
  for (const auto& o : overrides) apply_override(root, o);
  return parse_run_config(root, base_dir, source);
}

RunConfig load_run_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_run_config_text(buffer.str(), path.parent_path(), path.string(), overrides);
}

YAML::Node parse_template(std::string_view text, std::string_view source) {
  // Placeholders are not valid inside YAML flow collections.
  const std::string guarded = std::regex_replace(std::string(text), placeholder_pattern(),
                                                 std::string(kGuardPrefix) + "$1" + std::string(kGuardSuffix));
  return parse_yaml(guarded, source);
}

std::string apply_overrides_to_text(std::string_view text, std::string_view source,
                                    std::span<const std::string> overrides) {
  YAML::Node root = parse_template(text, source);
  for (const auto& o : overrides) apply_override(root, o);
  YAML::Emitter out;
  out << root;
  const std::regex guard(std::string(kGuardPrefix) + R"(([A-Za-z0-9_.\-]+?))" + std::string(kGuardSuffix));
  return std::regex_replace(std::string(out.c_str()), guard, "$${$1}");
}

}  // namespace mtltag::cli
