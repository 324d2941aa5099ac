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

#include "cxnet/lr_finder.hpp"

#include <cmath>
#include <numeric>

#include "cxnet/optim.hpp"

namespace cxnet::models {

using nlohmann::json;

json LrTrace::to_json() const { return {{"lr", lr}, {"loss", loss}, {"smoothed", smoothed}}; }

LrFinderResult lr_range_test(const LrStep& step, const LrFinderOptions& o) {
  if (!(o.lr_min > 0) || !(o.lr_min < o.lr_max)) throw ConfigError("lr_min must be positive and below lr_max");
  if (o.iterations < 20) throw ConfigError("the LR sweep needs at least 20 iterations");
  if (!(o.smoothing >= 0 && o.smoothing < 1)) throw ConfigError("loss smoothing must lie in [0, 1)");

  LrTrace trace;
  const double ratio = std::log(o.lr_max / o.lr_min);
  double avg = 0;
  double best = INFINITY;
  for (int i = 0; i < o.iterations; ++i) {
    const double lr = o.lr_min * std::exp(ratio * i / (o.iterations - 1));
    const double loss = step(lr);
    trace.lr.push_back(lr);
    trace.loss.push_back(loss);
    if (!std::isfinite(loss)) break;
    avg = o.smoothing * avg + (1 - o.smoothing) * loss;
    const double smoothed = avg / (1 - std::pow(o.smoothing, i + 1));
    trace.smoothed.push_back(smoothed);
    if (i > 0 && smoothed > o.divergence * best) break;
    best = std::min(best, smoothed);
  }

  std::size_t best_index = 0;
  double steepest = 0;
  for (std::size_t i = 0; i + 1 < trace.smoothed.size(); ++i) {
    const double slope =
        (trace.smoothed[i + 1] - trace.smoothed[i]) / (std::log(trace.lr[i + 1]) - std::log(trace.lr[i]));
    if (slope < steepest) {
      steepest = slope;
      best_index = i;
    }
  }
  if (!(steepest < 0)) throw LrFinderError("the loss never decreased during the LR sweep", std::move(trace));
  return {trace.lr[best_index], best_index, std::move(trace)};
}

LrFinderResult find_learning_rate(Classifier& model, const Dataset& data, const TrainConfig& cfg,
                                  const LrFinderOptions& options) {
  if (data.size() == 0) throw ConfigError("LR finder needs data");
  const Task task = model.spec().task;
  const auto targets = data.targets(task);
  const auto weights =
      cfg.balanced_class_weights ? ingest::compute_class_weights(data.labels, task) : ingest::uniform_class_weights(task);
  const LossFn loss = make_loss(task, weights, cfg.label_smoothing);
  const auto saved = model.network().params().state();

  nn::AdamOptions adam_opts = cfg.adam;
  adam_opts.learning_rate = options.lr_min;
  nn::Adam optimizer(model.network().params().trainable(), adam_opts);
  Rng rng(derive_seed(cfg.seed, 0x1F1D));
  Rng dropout_rng(derive_seed(cfg.seed, 0x1F1E));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  auto step = [&](double lr) {
    if (cursor + static_cast<std::size_t>(cfg.batch_size) > order.size()) {
      rng.shuffle(order.begin(), order.end());
      cursor = 0;
    }
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size());
    std::vector<enhance::ChannelStack> stacks;
    std::vector<int> t;
    for (std::size_t k = 0; k < count; ++k) {
      stacks.push_back(data.stacks[order[cursor + k]]);
      t.push_back(targets[order[cursor + k]]);
    }
    cursor += count;
    optimizer.set_learning_rate(lr);
    nn::ForwardContext ctx;
    ctx.training = true;
    ctx.rng = &dropout_rng;
    const nn::Var z = model.logits(model.prepare(stacks), ctx);
    const nn::Var l = loss(z, t);
    model.network().params().zero_grad();
    nn::backward(l);
    optimizer.step();
    return l.value()[0];
  };

  try {
    auto result = lr_range_test(step, options);
    model.network().params().load_state(saved);
    return result;
  } catch (...) {
    model.network().params().load_state(saved);
    throw;
  }
}

}  // namespace cxnet::models
