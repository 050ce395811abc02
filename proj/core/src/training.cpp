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

#include "mtltag/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mtltag/error.hpp"

namespace mtltag {

OptimizerKind parse_optimizer_kind(std::string_view text) {
  if (text == "sgd") return OptimizerKind::Sgd;
  if (text == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected sgd or adam)");
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Sgd ? "sgd" : "adam";
}

void TrainConfig::validate(const NetworkConfig& network) const {
  if (epochs == 0) throw ConfigError("training.epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("training.batch_size must be at least 1");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("training.learning_rate must be positive");
  if (clip_threshold && !(*clip_threshold > 0.0)) throw ConfigError("training.clip_norm must be positive");
  if (!main_task.empty()) network.task_index(main_task);
  if (early_stopping) {
    if (early_stopping->patience < 1) throw ConfigError("early stopping patience must be at least 1");
    network.task_index(early_stopping->task);
    higher_is_better(early_stopping->metric);
  }
}

double clip_global_norm(GradientSet& grads, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("clip threshold must be positive");
  const double norm = grads.global_norm();
  if (norm > threshold) grads.scale(threshold / norm);
  return norm;
}

void Sgd::step(ParameterStore& params, const GradientSet& grads) {
  for (ParamId id = 0; id < params.size(); ++id) {
    const Tensor* g = grads.find(id);
    if (g == nullptr || !params.trainable(id)) continue;
    auto theta = params.value(id).values();
    const auto grad = g->values();
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= rate_ * grad[i];
  }
}

void Adam::step(ParameterStore& params, const GradientSet& grads) {
  if (slots_.size() < params.size()) slots_.resize(params.size());
  const double b1 = config_.beta1, b2 = config_.beta2;
  for (ParamId id = 0; id < params.size(); ++id) {
    const Tensor* g = grads.find(id);
    if (g == nullptr || !params.trainable(id)) continue;
    Slot& slot = slots_[id];
    Tensor& value = params.value(id);
    if (slot.t == 0) {
      slot.m = Tensor(value.rows(), value.cols());
      slot.v = Tensor(value.rows(), value.cols());
    }
    ++slot.t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(slot.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(slot.t));
    auto theta = value.values();
    auto m = slot.m.values();
    auto v = slot.v.values();
    const auto grad = g->values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      theta[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config) {
  if (config.kind == OptimizerKind::Sgd) return std::make_unique<Sgd>(config.learning_rate);
  return std::make_unique<Adam>(config);
}

EarlyStopping::EarlyStopping(std::size_t patience, bool higher_is_better)
    : patience_(patience), higher_(higher_is_better) {
  if (patience < 1) throw ConfigError("early stopping patience must be at least 1");
}

bool EarlyStopping::update(double score) {
  ++seen_;
  const bool better = !std::isnan(score) &&
                      (!best_ || (higher_ ? score > *best_ : score < *best_));
  if (better) {
    best_ = score;
    best_epoch_ = seen_;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  return better;
}

std::vector<std::vector<std::string>> predict_corpus(const Model& model, std::size_t task,
                                                     const Corpus& corpus) {
  std::vector<std::vector<std::string>> out;
  out.reserve(corpus.sentences.size());
  for (const Sentence& s : corpus.sentences) out.push_back(model.predict_labels(task, s));
  return out;
}

namespace {

struct Example {
  EncodedSentence input;
  std::vector<int> gold;
};

std::vector<std::size_t> training_subset(std::size_t n, double fraction, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (fraction >= 1.0) return idx;
  if (!(fraction > 0.0)) throw ConfigError("train_fraction must lie in (0, 1]");
  rng.shuffle(std::span<std::size_t>(idx));
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  idx.resize(std::min(keep, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TrainResult train(NetworkConfig network, std::span<const TaskData> data, const TrainConfig& config,
                  const EmbeddingSet* pretrained, const TrainHooks& hooks) {
  network.validate();
  config.validate(network);
  if (data.size() != network.tasks.size()) throw ConfigError("training data must be given for every task");
  std::vector<const Corpus*> corpora;
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (data[t].train == nullptr || data[t].train->sentences.empty()) {
      throw DataError("task '" + network.tasks[t].name + "' has no training data");
    }
    corpora.push_back(data[t].train);
  }

  std::optional<std::size_t> dev_task;
  std::string dev_metric;
  if (config.early_stopping) {
    dev_task = network.task_index(config.early_stopping->task);
    dev_metric = config.early_stopping->metric;
    if (data[*dev_task].dev == nullptr && !hooks.dev_score) {
      throw DataError("early stopping task '" + config.early_stopping->task + "' has no dev data");
    }
  }

  Rng rng(config.seed);
  Vocabularies vocab = build_vocabularies(network, corpora, pretrained);
  Model model = Model::initialize(std::move(network), std::move(vocab), pretrained, rng);
  const NetworkConfig& net = model.config();
  const std::size_t tasks = net.tasks.size();

  std::vector<std::vector<Example>> examples(tasks);
  for (std::size_t t = 0; t < tasks; ++t) {
    for (std::size_t i : training_subset(corpora[t]->sentences.size(), data[t].train_fraction, rng)) {
      const Sentence& s = corpora[t]->sentences[i];
      if (s.empty()) continue;
      examples[t].push_back({model.encode(s), model.encode_labels(s, t)});
    }
  }

  auto optimizer = make_optimizer(config.optimizer);
  std::optional<EarlyStopping> stopper;
  if (config.early_stopping) {
    stopper.emplace(config.early_stopping->patience, higher_is_better(dev_metric));
  }
  std::optional<ParameterStore> best;
  TrainResult result{model, {}, 0, std::nullopt};

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> batches;
    for (std::size_t t = 0; t < tasks; ++t) {
      std::vector<std::size_t> order(examples[t].size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
        const auto end = std::min(order.size(), b + config.batch_size);
        batches.emplace_back(t, std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(b),
                                                         order.begin() + static_cast<std::ptrdiff_t>(end)));
      }
    }
    rng.shuffle(std::span(batches));

    std::vector<double> loss_sum(tasks, 0.0);
    std::vector<std::size_t> batch_count(tasks, 0);
    for (std::size_t k = 0; k < batches.size(); ++k) {
      const auto& [t, members] = batches[k];
      auto where = [&, t = t] {
        return "epoch " + std::to_string(epoch) + ", task '" + net.tasks[t].name + "', batch " +
               std::to_string(batch_count[t] + 1);
      };
      GradientSet grads(model.parameters());
      double batch_loss = 0.0;
      const double weight = 1.0 / static_cast<double>(members.size());
      try {
        for (std::size_t i : members) {
          const Example& ex = examples[t][i];
          Graph g(model.parameters());
          RunContext ctx{Mode::Train, &rng};
          const NodeId loss = g.scale(model.task_loss(g, t, ex.input, ex.gold, ctx), weight);
          batch_loss += g.value(loss)[0];
          g.backward(loss, &grads);
        }
      } catch (const NumericError& e) {
        throw NumericError(where() + ": " + e.what());
      }
      if (!std::isfinite(batch_loss)) throw NumericError(where() + ": loss is not finite");
      if (config.clip_threshold) clip_global_norm(grads, *config.clip_threshold);
      optimizer->step(model.parameters(), grads);
      loss_sum[t] += batch_loss;
      ++batch_count[t];
    }

    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t t = 0; t < tasks; ++t) {
      record.task_loss.push_back(batch_count[t] ? loss_sum[t] / static_cast<double>(batch_count[t]) : 0.0);
    }
    if (dev_task) {
      if (hooks.dev_score) {
        record.dev_metric = hooks.dev_score(epoch, model);
      } else {
        const Corpus& dev = *data[*dev_task].dev;
        const auto it = config.evaluation.find(net.tasks[*dev_task].name);
        const EvaluationOptions options = it != config.evaluation.end() ? it->second : EvaluationOptions{};
        const auto results = make_results(dev, net.tasks[*dev_task].name, predict_corpus(model, *dev_task, dev));
        const std::string names[] = {dev_metric};
        record.dev_metric = evaluate(results, names, options).front().second;
      }
    }
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.log.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);

    bool store = true;
    if (stopper) store = stopper->update(*record.dev_metric);
    if (store) {
      best = model.parameters();
      result.best_epoch = epoch;
      result.best_dev = record.dev_metric;
      if (hooks.on_checkpoint) hooks.on_checkpoint(model, epoch);
    }
    if (stopper && stopper->should_stop()) break;
  }

  if (best) model.parameters() = std::move(*best);
  result.model = std::move(model);
  return result;
}

std::string epoch_log_header(const NetworkConfig& network) {
  std::string out = "epoch";
  for (const TaskSpec& t : network.tasks) out += "\tloss." + t.name;
  out += "\tdev_metric\tseconds";
  return out;
}

std::string epoch_log_line(const EpochRecord& record) {
  std::ostringstream out;
  out.precision(17);
  out << record.epoch;
  for (double l : record.task_loss) out << '\t' << l;
  out << '\t';
  if (record.dev_metric) {
    out << *record.dev_metric;
  } else {
    out << "NA";
  }
  out.precision(3);
  out << '\t' << std::fixed << record.seconds;
  return out.str();
}

}  // namespace mtltag
