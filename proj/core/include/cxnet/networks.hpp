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
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cxnet/autograd.hpp"
#include "cxnet/ops.hpp"
#include "cxnet/rng.hpp"

namespace cxnet::nn {

/// Named parameters and batch-norm buffers of a network, in creation order.
/// Naming follows the Keras layer/weight convention
/// ("conv2_block1_1_conv/kernel", "bn/moving_mean", ...).
class ParamStore {
 public:
  Var& add(const std::string& name, Tensor init);
  /// Registers "<name>/gamma", "<name>/beta" and the running-statistic buffers.
  BatchNormState& add_batch_norm(const std::string& name, int channels, double eps = 1.001e-5);

  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  const Var& param(const std::string& name) const;
  const BatchNormState& batch_norm(const std::string& name) const;
  BatchNormState& batch_norm(const std::string& name);

  const std::vector<std::string>& names() const noexcept { return order_; }
  std::vector<Var> trainable() const;
  /// Freezes every parameter for which `trainable` returns false.
  void set_trainable(const std::function<bool(const std::string&)>& trainable);
  bool is_trainable(const std::string& name) const { return !frozen_.count(name); }
  void set_momentum(double momentum);

  std::size_t trainable_count() const;
  /// Parameters plus running-statistic buffers.
  std::size_t total_count() const;

  /// Parameters and buffers keyed by name.
  std::map<std::string, Tensor> state() const;

  struct LoadReport {
    std::size_t loaded = 0;
    std::vector<std::string> missing;     // expected but absent
    std::vector<std::string> unexpected;  // present but unknown
  };
  /// Copies matching tensors in; shape disagreement throws ShapeError.
  LoadReport load_state(const std::map<std::string, Tensor>& state);

  void zero_grad();

 private:
  std::vector<std::string> order_;
  std::map<std::string, Var> params_;
  std::set<std::string> frozen_;
  std::vector<std::string> bn_order_;
  std::map<std::string, BatchNormState> batch_norms_;
};

/// Per-call options of a forward pass.
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;        // dropout stream; required when training
  bool param_grads = true;   // false: parameters enter the graph as constants
  int capture = -1;          // feature-tap index to capture as a gradient leaf
  Var captured;              // the captured feature map, set by forward()
};

struct LayerInfo {
  std::string name;
  std::string type;
};

class Network {
 public:
  virtual ~Network() = default;

  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  /// Logits of shape (N, outputs) for classifiers, (N, 1, H, W) for U-Net.
  virtual Var forward(const Var& x, ForwardContext& ctx) = 0;
  /// Number of feature maps that can be captured; the last is the default
  /// explanation target.
  virtual int feature_taps() const = 0;
  /// Layer enumeration in Keras granularity.
  virtual std::vector<LayerInfo> layers() const = 0;

 protected:
  Var param(const std::string& name, const ForwardContext& ctx) const;
  Var conv(const Var& x, const std::string& name, bool bias, Conv2dOptions opts, const ForwardContext& ctx);
  Var dense(const Var& x, const std::string& name, const ForwardContext& ctx);
  Var bn(const Var& x, const std::string& name, ForwardContext& ctx);
  Var tap(const Var& feature, int index, ForwardContext& ctx) const;

  void add_conv(const std::string& name, int in, int out, int kernel, bool bias, Rng& rng);
  void add_dense(const std::string& name, int in, int out, Rng& rng);

  ParamStore params_;
};

struct ConvLayerSpec {
  int filters = 32;
  int kernel = 3;
  int stride = 1;
};

/// Plain convolutional classifier: same-padded ReLU convolutions, then flatten
/// or global average pooling, ReLU dense layers, optional dropout, output layer.
struct ConvNetConfig {
  int in_channels = 1;
  int height = 320;
  int width = 320;
  std::vector<ConvLayerSpec> conv;
  bool global_pool = false;
  std::vector<int> hidden;
  double dropout = 0.0;
  int outputs = 1;
};

class ConvNet final : public Network {
 public:
  ConvNet(ConvNetConfig config, std::uint64_t seed);

  Var forward(const Var& x, ForwardContext& ctx) override;
  int feature_taps() const override { return static_cast<int>(config_.conv.size()); }
  std::vector<LayerInfo> layers() const override;
  const ConvNetConfig& config() const noexcept { return config_; }

  /// Spatial size after the convolution stack.
  std::pair<int, int> feature_size() const;

 private:
  ConvNetConfig config_;
};

struct DenseNetConfig {
  int in_channels = 3;
  int growth_rate = 32;
  std::vector<int> block_layers{6, 12, 24, 16};
  int init_features = 64;
  int bottleneck_width = 4;  // 1x1 conv produces bottleneck_width * growth_rate maps
  double compression = 0.5;
};

struct DenseHeadConfig {
  int hidden_units = 10;
  double dropout = 0.2;
  int outputs = 1;
};

/// Densely connected backbone with a global-pool, FC, dropout, output head.
/// Layer and weight names follow the Keras DenseNet implementation so
/// converted pretrained weights load by name.
class DenseNet final : public Network {
 public:
  DenseNet(DenseNetConfig backbone, DenseHeadConfig head, std::uint64_t seed);

  Var forward(const Var& x, ForwardContext& ctx) override;
  /// Taps: output of every dense block (after its transition, if any), then the final ReLU map.
  int feature_taps() const override { return static_cast<int>(backbone_.block_layers.size()) + 1; }
  std::vector<LayerInfo> layers() const override;

  int feature_channels() const noexcept { return feature_channels_; }
  /// True for parameters belonging to the backbone (not the head).
  static bool is_backbone_param(const std::string& name);

 private:
  DenseNetConfig backbone_;
  DenseHeadConfig head_;
  int feature_channels_ = 0;
};

struct UNetConfig {
  int in_channels = 1;
  int depth = 4;
  int base_filters = 32;
};

/// Encoder-decoder with a skip connection at every depth and a single
/// logit channel (sigmoid applied by the caller).
class UNet final : public Network {
 public:
  UNet(UNetConfig config, std::uint64_t seed);

  Var forward(const Var& x, ForwardContext& ctx) override;
  int feature_taps() const override { return 0; }
  std::vector<LayerInfo> layers() const override;
  const UNetConfig& config() const noexcept { return config_; }

 private:
  UNetConfig config_;
};

}  // namespace cxnet::nn
