// Copyright 2026 The cxnet Authors
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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cxnet/enhance.hpp"
#include "cxnet/error.hpp"
#include "cxnet/ingest.hpp"
#include "cxnet/models.hpp"
#include "cxnet/optim.hpp"

namespace cxnet::models {

/// Preprocessed images with their labels, in a fixed order.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<enhance::ChannelStack> stacks;
  std::vector<Label> labels;

  std::size_t size() const noexcept { return stacks.size(); }
  void add(std::string id, enhance::ChannelStack stack, Label label);
  /// Samples whose label the task covers.
  Dataset select(Task task) const;
  /// Class indices under `task`; throws ConfigError for uncovered labels.
  std::vector<int> targets(Task task) const;
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 16;
  double learning_rate = 1e-4;
  bool balanced_class_weights = true;  // N / (K N_c) from the training labels
  double label_smoothing = 0.1;
  AugmentPolicy augmentation;
  std::uint64_t seed = 0;
  nn::AdamOptions adam;  // learning_rate is taken from the field above

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double train_accuracy = 0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
  double learning_rate = 0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  Checkpoint final_checkpoint;
  Checkpoint best_checkpoint;
  int best_epoch = 0;
  std::vector<EpochRecord> log;
  ingest::ClassWeights class_weights;
};

struct TrainHooks {
  /// Called after each epoch's updates, before validation.
  std::function<void(int epoch, Classifier&)> after_epoch_update;
  std::function<void(const EpochRecord&)> on_epoch;
  /// JSON-lines run log: a config record, then one record per epoch.
  std::filesystem::path run_log;
};

/// Resource exhaustion during training.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int completed_epochs)
      : Error(what), completed_epochs_(completed_epochs) {}
  int completed_epochs() const noexcept { return completed_epochs_; }

 private:
  int completed_epochs_;
};

/// Adam updates in seeded shuffled mini-batches. Each epoch records training
/// loss and accuracy (training-mode forward passes) and, given a validation
/// set, inference-mode loss and accuracy. The best checkpoint maximizes
/// validation accuracy, ties going to the lower validation loss; without a
/// validation set the training metrics stand in. `model` ends at the final weights.
TrainResult train(Classifier& model, const Dataset& train_set, const Dataset* validation, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

struct EvalResult {
  double loss = 0;
  double accuracy = 0;
  std::vector<Prediction> predictions;
};

/// Inference-mode loss (unweighted, smoothed as configured) and accuracy.
EvalResult evaluate(Classifier& model, const Dataset& data, double label_smoothing = 0.0, int batch_size = 16);

struct HierarchicalResult {
  TrainResult level1;
  TrainResult level2;
};

/// Level 1 learns normal vs pneumonia on every sample, level 2 CAP vs CP on
/// the pneumonia samples; `spec` is copied for both with the task replaced.
HierarchicalResult train_hierarchical(const ModelSpec& spec, const Dataset& train_set, const Dataset* validation,
                                      const TrainConfig& level1_cfg, const TrainConfig& level2_cfg,
                                      const TrainHooks& hooks = {});

}  // namespace cxnet::models
