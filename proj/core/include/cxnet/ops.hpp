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

#include <vector>

#include "cxnet/autograd.hpp"
#include "cxnet/rng.hpp"

namespace cxnet::nn {

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;  // zero padding on every side
};

/// x: (N, C, H, W), weight: (O, C, KH, KW), bias: (O) or undefined.
Var conv2d(const Var& x, const Var& weight, const Var& bias, Conv2dOptions opts = {});
/// 2x2 stride-2 transposed convolution. weight: (C, O, 2, 2).
Var conv_transpose2x2(const Var& x, const Var& weight, const Var& bias);

Var max_pool2d(const Var& x, int kernel, int stride, int padding = 0);
Var avg_pool2d(const Var& x, int kernel, int stride);
/// (N, C, H, W) -> (N, C).
Var global_avg_pool(const Var& x);

/// Running statistics of a batch-normalization layer.
struct BatchNormState {
  Tensor mean;
  Tensor var;
  double momentum = 0.1;  // weight of the new batch statistic
  double eps = 1.001e-5;
};

/// Per-channel normalization by batch statistics; folds them into `state`.
Var batch_norm_train(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state);
/// Per-channel normalization by the running statistics.
Var batch_norm_eval(const Var& x, const Var& gamma, const Var& beta, const BatchNormState& state);

Var relu(const Var& x);
Var sigmoid(const Var& x);
/// Inverted dropout; identity outside training or when rate is 0.
Var dropout(const Var& x, double rate, Rng& rng, bool training);

/// Concatenate along the channel axis (axis 1).
Var concat_channels(const std::vector<Var>& parts);
/// (N, ...) -> (N, prod(...)).
Var flatten(const Var& x);
/// x: (N, F), weight: (O, F), bias: (O) or undefined.
Var linear(const Var& x, const Var& weight, const Var& bias);
Var add(const Var& a, const Var& b);
Var scale(const Var& x, double s);
/// Sum over every element of x * coeffs (coeffs is a constant of x's shape).
Var weighted_sum(const Var& x, const Tensor& coeffs);

/// Mean over the batch of weight_i * BCE(sigmoid(logit_i), target_i).
/// logits: (N, 1); targets, weights: N values.
Var bce_with_logits(const Var& logits, const std::vector<double>& targets, const std::vector<double>& weights);
/// Mean over the batch of weight_i * CE(softmax(logits_i), targets_i).
/// logits: (N, K); targets: N*K row-major soft targets.
Var softmax_cross_entropy(const Var& logits, const std::vector<double>& targets, const std::vector<double>& weights);
/// bce_weight * mean pixel BCE + (1 - soft Dice) over a batch of single-channel masks.
Var dice_bce_loss(const Var& logits, const Tensor& masks, double bce_weight = 1.0);

Tensor sigmoid(const Tensor& x);
/// Row-wise softmax of an (N, K) tensor.
Tensor softmax_rows(const Tensor& x);

}  // namespace cxnet::nn
