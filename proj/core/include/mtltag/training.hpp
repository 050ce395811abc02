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
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mtltag/autodiff.hpp"
#include "mtltag/embeddings.hpp"
#include "mtltag/metrics.hpp"
#include "mtltag/network.hpp"

namespace mtltag {

enum class OptimizerKind { Sgd, Adam };
OptimizerKind parse_optimizer_kind(std::string_view text);
std::string_view to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct EarlyStoppingConfig {
  std::string task;
  std::string metric = "f1";
  std::size_t patience = 3;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  OptimizerConfig optimizer;
  std::optional<double> clip_threshold;
  std::optional<EarlyStoppingConfig> early_stopping;
  std::string main_task;
  std::uint64_t seed = 1;
  /// Post-processing and symbols used when scoring dev data, per task name.
  std::map<std::string, EvaluationOptions, std::less<>> evaluation;

  void validate(const NetworkConfig& network) const;
};

/// Rescales grads by threshold / max(threshold, norm); returns the norm
/// before clipping.
double clip_global_norm(GradientSet& grads, double threshold);

/// Updates only parameters that are trainable and touched in grads.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParameterStore& params, const GradientSet& grads) = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double learning_rate) : rate_(learning_rate) {}
  void step(ParameterStore& params, const GradientSet& grads) override;

 private:
  double rate_;
};

/// Adam with bias correction; moments and step counts are kept per
/// parameter, so a parameter advances only on batches that reach it.
class Adam final : public Optimizer {
 public:
  explicit Adam(const OptimizerConfig& config) : config_(config) {}
  void step(ParameterStore& params, const GradientSet& grads) override;

 private:
  struct Slot {
    Tensor m, v;
    std::uint64_t t = 0;
  };
  OptimizerConfig config_;
  std::vector<Slot> slots_;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config);

/// Stops once `patience` epochs pass without a strict improvement.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, bool higher_is_better);

  /// Records the next epoch's score; true if it is a new best.
  bool update(double score);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }  // 1-based, 0 before any
  std::optional<double> best_score() const noexcept { return best_; }
  std::size_t epochs_seen() const noexcept { return seen_; }

 private:
  std::size_t patience_;
  bool higher_;
  std::optional<double> best_;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  std::size_t seen_ = 0;
};

struct TaskData {
  const Corpus* train = nullptr;
  const Corpus* dev = nullptr;
  /// Share of training documents kept after a seeded shuffle.
  double train_fraction = 1.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::vector<double> task_loss;  // mean batch loss per task, config order
  std::optional<double> dev_metric;
  double seconds = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  std::optional<double> best_dev;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  /// Called whenever the stored model changes.
  std::function<void(const Model&, std::size_t epoch)> on_checkpoint;
  /// Replaces dev evaluation; lets tests script the dev curve.
  std::function<double(std::size_t epoch, const Model&)> dev_score;
};

/// Interleaved multi-task training. Random draws, all from one stream
/// seeded with config.seed: initialisation, training subsets, then per
/// epoch the per-task shuffles, the batch-order shuffle and dropout masks.
TrainResult train(NetworkConfig network, std::span<const TaskData> data, const TrainConfig& config,
                  const EmbeddingSet* pretrained = nullptr, const TrainHooks& hooks = {});

/// Labels every sentence of `corpus` for `task`.
std::vector<std::vector<std::string>> predict_corpus(const Model& model, std::size_t task,
                                                     const Corpus& corpus);

std::string epoch_log_header(const NetworkConfig& network);
std::string epoch_log_line(const EpochRecord& record);

}  // namespace mtltag
