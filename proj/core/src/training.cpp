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

#include "cxnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <new>
#include <numeric>

#include "cxnet/log.hpp"
#include "cxnet/optim.hpp"

namespace cxnet::models {

using nlohmann::json;
using nn::Tensor;

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348;
constexpr std::uint64_t kAugmentStream = 0xA467;
constexpr std::uint64_t kDropoutStream = 0xD40F;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<int> batch_targets(const std::vector<int>& all, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

int correct_count(const std::vector<Prediction>& preds, const std::vector<Label>& labels, std::span<const std::size_t> idx) {
  int correct = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) correct += preds[k].predicted == labels[idx[k]] ? 1 : 0;
  return correct;
}

bool better(const EpochRecord& candidate, const EpochRecord& best) {
  const double ca = candidate.val_accuracy.value_or(candidate.train_accuracy);
  const double ba = best.val_accuracy.value_or(best.train_accuracy);
  if (ca != ba) return ca > ba;
  return candidate.val_loss.value_or(candidate.train_loss) < best.val_loss.value_or(best.train_loss);
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

void Dataset::add(std::string id, enhance::ChannelStack stack, Label label) {
  if (!stacks.empty() && (stack.rows() != stacks.front().rows() || stack.cols() != stacks.front().cols())) {
    throw ShapeError("dataset stacks must share one size");
  }
  ids.push_back(std::move(id));
  stacks.push_back(std::move(stack));
  labels.push_back(label);
}

Dataset Dataset::select(Task task) const {
  Dataset out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (task_target(task, labels[i])) out.add(ids[i], stacks[i], labels[i]);
  }
  return out;
}

std::vector<int> Dataset::targets(Task task) const {
  std::vector<int> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto t = task_target(task, labels[i]);
    if (!t) {
      throw ConfigError("sample " + ids[i] + " has label " + std::string(label_name(labels[i])) +
                        " outside task " + std::string(task_name(task)));
    }
    out.push_back(*t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// TrainConfig

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(learning_rate > 0 && std::isfinite(learning_rate))) throw ConfigError("learning rate must be positive");
  if (!(label_smoothing >= 0 && label_smoothing < 0.5)) throw ConfigError("label smoothing must lie in [0, 0.5)");
  if (augmentation.zoom < 0 || augmentation.zoom >= 1 || augmentation.brightness < 0 || augmentation.brightness >= 1) {
    throw ConfigError("augmentation ranges must lie in [0, 1)");
  }
}

json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"class_weights", balanced_class_weights ? "balanced" : "uniform"},
          {"label_smoothing", label_smoothing},
          {"augmentation",
           {{"zoom", augmentation.zoom},
            {"brightness", augmentation.brightness},
            {"horizontal_flip", augmentation.horizontal_flip}}},
          {"seed", seed},
          {"optimizer", {{"name", "adam"}, {"beta1", adam.beta1}, {"beta2", adam.beta2}, {"epsilon", adam.epsilon}}}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  try {
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    const std::string weights = j.value("class_weights", "balanced");
    if (weights != "balanced" && weights != "uniform") throw ConfigError("class_weights must be balanced or uniform");
    c.balanced_class_weights = weights == "balanced";
    c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
    if (j.contains("augmentation")) {
      const auto& a = j["augmentation"];
      c.augmentation.zoom = a.value("zoom", 0.0);
      c.augmentation.brightness = a.value("brightness", 0.0);
      c.augmentation.horizontal_flip = a.value("horizontal_flip", false);
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("optimizer")) {
      const auto& o = j["optimizer"];
      if (o.value("name", "adam") != "adam") throw ConfigError("only the adam optimizer is supported");
      c.adam.beta1 = o.value("beta1", c.adam.beta1);
      c.adam.beta2 = o.value("beta2", c.adam.beta2);
      c.adam.epsilon = o.value("epsilon", c.adam.epsilon);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid train config: ") + e.what());
  }
}

json EpochRecord::to_json() const {
  return {{"epoch", epoch},
          {"train_loss", train_loss},
          {"train_accuracy", train_accuracy},
          {"val_loss", optional_json(val_loss)},
          {"val_accuracy", optional_json(val_accuracy)},
          {"learning_rate", learning_rate}};
}

// ---------------------------------------------------------------------------
// Evaluation

EvalResult evaluate(Classifier& model, const Dataset& data, double label_smoothing, int batch_size) {
  if (data.size() == 0) throw ConfigError("cannot evaluate an empty dataset");
  const Task task = model.spec().task;
  const auto targets = data.targets(task);
  const LossFn loss = make_loss(task, ingest::uniform_class_weights(task), label_smoothing);
  EvalResult out;
  double loss_sum = 0;
  int correct = 0;
  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(batch_size), data.size() - start);
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), start);
    nn::ForwardContext ctx;
    ctx.param_grads = false;
    const nn::Var z = model.logits(model.prepare(std::span(data.stacks).subspan(start, count)), ctx);
    loss_sum += loss(z, batch_targets(targets, idx)).value()[0] * static_cast<double>(count);
    auto preds = model.to_predictions(z.value());
    correct += correct_count(preds, data.labels, idx);
    out.predictions.insert(out.predictions.end(), preds.begin(), preds.end());
  }
  out.loss = loss_sum / static_cast<double>(data.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return out;
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(Classifier& model, const Dataset& train_set, const Dataset* validation, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (train_set.size() == 0) throw ConfigError("training set is empty");
  const Task task = model.spec().task;
  const auto targets = train_set.targets(task);
  if (validation && validation->size() == 0) validation = nullptr;

  TrainResult result;
  result.class_weights =
      cfg.balanced_class_weights ? ingest::compute_class_weights(train_set.labels, task) : ingest::uniform_class_weights(task);
  const LossFn loss = make_loss(task, result.class_weights, cfg.label_smoothing);

  json config_record = cfg.to_json();
  config_record["class_weight_values"] = result.class_weights.per_class;
  config_record["train_samples"] = train_set.size();
  config_record["validation_samples"] = validation ? validation->size() : 0;

  std::ofstream run_log;
  if (!hooks.run_log.empty()) {
    run_log.open(hooks.run_log);
    if (!run_log) throw IoError("cannot write run log " + hooks.run_log.string());
    run_log << json{{"type", "config"}, {"train_config", config_record}, {"model", model.spec().to_json()}}.dump()
            << '\n';
  }

  nn::AdamOptions adam_opts = cfg.adam;
  adam_opts.learning_rate = cfg.learning_rate;
  nn::Adam optimizer(model.network().params().trainable(), adam_opts);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::optional<EpochRecord> best;
  std::map<std::string, Tensor> best_weights;
  int completed = 0;

  try {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
      shuffle_rng.shuffle(order.begin(), order.end());
      Rng dropout_rng(derive_seed(cfg.seed, kDropoutStream, static_cast<std::uint64_t>(epoch)));
      const std::uint64_t augment_seed = derive_seed(cfg.seed, kAugmentStream, static_cast<std::uint64_t>(epoch));

      double loss_sum = 0;
      int correct = 0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
        const auto count = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
        const std::span<const std::size_t> idx(order.data() + start, count);
        std::vector<Tensor> parts;
        parts.reserve(count);
        for (auto i : idx) {
          Rng sample_rng(derive_seed(augment_seed, i));
          parts.push_back(augment(train_set.stacks[i].to_tensor(), cfg.augmentation, sample_rng));
        }
        const Tensor batch = Tensor::stack0(parts);
        nn::ForwardContext ctx;
        ctx.training = true;
        ctx.rng = &dropout_rng;
        const nn::Var z = model.logits(model.prepare(batch), ctx);
        const nn::Var l = loss(z, batch_targets(targets, idx));
        model.network().params().zero_grad();
        nn::backward(l);
        optimizer.step();
        loss_sum += l.value()[0] * static_cast<double>(count);
        correct += correct_count(model.to_predictions(z.value()), train_set.labels, idx);
      }
      if (hooks.after_epoch_update) hooks.after_epoch_update(epoch, model);

      EpochRecord rec;
      rec.epoch = epoch;
      rec.train_loss = loss_sum / static_cast<double>(order.size());
      rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
      rec.learning_rate = optimizer.learning_rate();
      if (validation) {
        const EvalResult v = evaluate(model, *validation, cfg.label_smoothing, cfg.batch_size);
        rec.val_loss = v.loss;
        rec.val_accuracy = v.accuracy;
      }
      if (!best || better(rec, *best)) {
        best = rec;
        best_weights = model.network().params().state();
        result.best_epoch = epoch;
      }
      result.log.push_back(rec);
      completed = epoch + 1;
      if (run_log.is_open()) {
        json line = rec.to_json();
        line["type"] = "epoch";
        run_log << line.dump() << '\n' << std::flush;
      }
      if (hooks.on_epoch) hooks.on_epoch(rec);
      log::info("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs) + " loss " +
                std::to_string(rec.train_loss));
    }
  } catch (const std::bad_alloc&) {
    throw TrainingError("out of memory during epoch " + std::to_string(completed + 1), completed);
  }

  json log_json = json::array();
  for (const auto& r : result.log) log_json.push_back(r.to_json());
  result.final_checkpoint = make_checkpoint(model);
  result.final_checkpoint.train_config = config_record;
  result.final_checkpoint.log = log_json;
  result.best_checkpoint = result.final_checkpoint;
  result.best_checkpoint.weights = std::move(best_weights);
  return result;
}

HierarchicalResult train_hierarchical(const ModelSpec& spec, const Dataset& train_set, const Dataset* validation,
                                      const TrainConfig& level1_cfg, const TrainConfig& level2_cfg,
                                      const TrainHooks& hooks) {
  HierarchicalResult out;
  auto level_hooks = [&](const char* suffix) {
    TrainHooks h = hooks;
    if (!h.run_log.empty()) h.run_log.replace_extension(std::string(suffix) + ".jsonl");
    return h;
  };

  ModelSpec s1 = spec;
  s1.task = Task::Level1;
  Classifier level1(s1);
  if (s1.weights != BackboneWeights::None) level1.load_pretrained();
  const Dataset val1 = validation ? validation->select(Task::Level1) : Dataset{};
  out.level1 = train(level1, train_set.select(Task::Level1), validation ? &val1 : nullptr, level1_cfg,
                     level_hooks(".level1"));

  ModelSpec s2 = spec;
  s2.task = Task::Level2;
  s2.init_seed = derive_seed(spec.init_seed, 2);
  Classifier level2(s2);
  if (s2.weights != BackboneWeights::None) level2.load_pretrained();
  const Dataset val2 = validation ? validation->select(Task::Level2) : Dataset{};
  out.level2 = train(level2, train_set.select(Task::Level2), validation ? &val2 : nullptr, level2_cfg,
                     level_hooks(".level2"));
  return out;
}

}  // namespace cxnet::models
