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

#include <cstddef>
#include <functional>
#include <vector>

#include <json.hpp>

#include "cxnet/error.hpp"
#include "cxnet/training.hpp"

namespace cxnet::models {

struct LrFinderOptions {
  double lr_min = 1e-7;
  double lr_max = 1.0;
  int iterations = 100;
  double smoothing = 0.98;  // EMA factor on the loss
  double divergence = 4.0;  // stop once the smoothed loss exceeds this multiple of its best
};

struct LrTrace {
  std::vector<double> lr;
  std::vector<double> loss;
  std::vector<double> smoothed;

  nlohmann::json to_json() const;
};

struct LrFinderResult {
  double learning_rate = 0;
  std::size_t index = 0;  // trace position of the chosen rate
  LrTrace trace;
};

/// No descending segment was seen before the sweep ended or diverged.
class LrFinderError : public Error {
 public:
  LrFinderError(const std::string& what, LrTrace trace) : Error(what), trace_(std::move(trace)) {}
  const LrTrace& trace() const noexcept { return trace_; }

 private:
  LrTrace trace_;
};

/// One optimization step at the given rate; returns the step's loss.
using LrStep = std::function<double(double lr)>;

/// Exponential sweep from lr_min to lr_max. The loss is smoothed by a
/// bias-corrected EMA, differentiated by finite differences against log(lr),
/// and the rate at the steepest descent is returned.
LrFinderResult lr_range_test(const LrStep& step, const LrFinderOptions& options = {});

/// Runs the sweep with the model's Adam training loop (cycling over
/// shuffled batches of `data`) and restores the model's weights afterwards.
LrFinderResult find_learning_rate(Classifier& model, const Dataset& data, const TrainConfig& cfg,
                                  const LrFinderOptions& options = {});

}  // namespace cxnet::models
