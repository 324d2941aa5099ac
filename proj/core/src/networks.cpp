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

#include "cxnet/networks.hpp"

#include <cmath>

#include "cxnet/error.hpp"

namespace cxnet::nn {

namespace {

Tensor glorot_uniform(Shape shape, int fan_in, int fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

std::string block_name(int block, int layer) {
  return "conv" + std::to_string(block + 2) + "_block" + std::to_string(layer + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// ParamStore

Var& ParamStore::add(const std::string& name, Tensor init) {
  if (params_.count(name)) throw ConfigError("duplicate parameter name " + name);
  order_.push_back(name);
  return params_.emplace(name, Var(std::move(init), true)).first->second;
}

BatchNormState& ParamStore::add_batch_norm(const std::string& name, int channels, double eps) {
  add(name + "/gamma", Tensor({channels}, 1.0));
  add(name + "/beta", Tensor({channels}, 0.0));
  BatchNormState state;
  state.mean = Tensor({channels}, 0.0);
  state.var = Tensor({channels}, 1.0);
  state.eps = eps;
  bn_order_.push_back(name);
  return batch_norms_.emplace(name, std::move(state)).first->second;
}

const Var& ParamStore::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

const BatchNormState& ParamStore::batch_norm(const std::string& name) const {
  auto it = batch_norms_.find(name);
  if (it == batch_norms_.end()) throw ConfigError("unknown batch-norm layer " + name);
  return it->second;
}

BatchNormState& ParamStore::batch_norm(const std::string& name) {
  return const_cast<BatchNormState&>(static_cast<const ParamStore&>(*this).batch_norm(name));
}

std::vector<Var> ParamStore::trainable() const {
  std::vector<Var> out;
  for (const auto& name : order_) {
    if (!frozen_.count(name)) out.push_back(params_.at(name));
  }
  return out;
}

void ParamStore::set_trainable(const std::function<bool(const std::string&)>& trainable) {
  frozen_.clear();
  for (const auto& name : order_) {
    const bool t = trainable(name);
    if (!t) frozen_.insert(name);
    params_.at(name).node()->requires_grad = t;
  }
}

void ParamStore::set_momentum(double momentum) {
  for (auto& [name, state] : batch_norms_) state.momentum = momentum;
}

std::size_t ParamStore::trainable_count() const {
  std::size_t n = 0;
  for (const auto& name : order_) {
    if (!frozen_.count(name)) n += params_.at(name).value().numel();
  }
  return n;
}

std::size_t ParamStore::total_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value().numel();
  for (const auto& [name, s] : batch_norms_) n += s.mean.numel() + s.var.numel();
  return n;
}

std::map<std::string, Tensor> ParamStore::state() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, p] : params_) out.emplace(name, p.value());
  for (const auto& [name, s] : batch_norms_) {
    out.emplace(name + "/moving_mean", s.mean);
    out.emplace(name + "/moving_variance", s.var);
  }
  return out;
}

ParamStore::LoadReport ParamStore::load_state(const std::map<std::string, Tensor>& state) {
  LoadReport report;
  auto assign = [&](const std::string& key, Tensor& dst) {
    auto it = state.find(key);
    if (it == state.end()) {
      report.missing.push_back(key);
      return;
    }
    if (it->second.shape() != dst.shape()) {
      throw ShapeError("tensor " + key + " has shape " + shape_string(it->second.shape()) + ", expected " +
                       shape_string(dst.shape()));
    }
    dst = it->second;
    ++report.loaded;
  };
  std::set<std::string> known;
  for (const auto& name : order_) {
    assign(name, params_.at(name).mutable_value());
    known.insert(name);
  }
  for (const auto& name : bn_order_) {
    auto& s = batch_norms_.at(name);
    assign(name + "/moving_mean", s.mean);
    assign(name + "/moving_variance", s.var);
    known.insert(name + "/moving_mean");
    known.insert(name + "/moving_variance");
  }
  for (const auto& [key, t] : state) {
    if (!known.count(key)) report.unexpected.push_back(key);
  }
  return report;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

// ---------------------------------------------------------------------------
// Network helpers

Var Network::param(const std::string& name, const ForwardContext& ctx) const {
  const Var& p = params_.param(name);
  if (ctx.param_grads) return p;
  return Var(p.value(), false);
}

Var Network::conv(const Var& x, const std::string& name, bool bias, Conv2dOptions opts, const ForwardContext& ctx) {
  return conv2d(x, param(name + "/kernel", ctx), bias ? param(name + "/bias", ctx) : Var(), opts);
}

Var Network::dense(const Var& x, const std::string& name, const ForwardContext& ctx) {
  return linear(x, param(name + "/kernel", ctx), param(name + "/bias", ctx));
}

Var Network::bn(const Var& x, const std::string& name, ForwardContext& ctx) {
  const Var gamma = param(name + "/gamma", ctx);
  const Var beta = param(name + "/beta", ctx);
  if (ctx.training) return batch_norm_train(x, gamma, beta, params_.batch_norm(name));
  return batch_norm_eval(x, gamma, beta, params_.batch_norm(name));
}

Var Network::tap(const Var& feature, int index, ForwardContext& ctx) const {
  if (ctx.capture != index) return feature;
  Var leaf(feature.value(), true);
  ctx.captured = leaf;
  return leaf;
}

void Network::add_conv(const std::string& name, int in, int out, int kernel, bool bias, Rng& rng) {
  params_.add(name + "/kernel", glorot_uniform({out, in, kernel, kernel}, in * kernel * kernel, out * kernel * kernel, rng));
  if (bias) params_.add(name + "/bias", Tensor({out}, 0.0));
}

void Network::add_dense(const std::string& name, int in, int out, Rng& rng) {
  params_.add(name + "/kernel", glorot_uniform({out, in}, in, out, rng));
  params_.add(name + "/bias", Tensor({out}, 0.0));
}

// ---------------------------------------------------------------------------
// ConvNet

ConvNet::ConvNet(ConvNetConfig config, std::uint64_t seed) : config_(std::move(config)) {
  if (config_.outputs < 1) throw ConfigError("ConvNet needs at least one output");
  Rng rng(seed);
  int channels = config_.in_channels;
  for (std::size_t i = 0; i < config_.conv.size(); ++i) {
    const auto& c = config_.conv[i];
    if (c.filters < 1 || c.kernel < 1 || c.stride < 1) throw ConfigError("invalid conv layer spec");
    add_conv("conv" + std::to_string(i + 1), channels, c.filters, c.kernel, true, rng);
    channels = c.filters;
  }
  const auto [fh, fw] = feature_size();
  if (fh < 1 || fw < 1) throw ShapeError("ConvNet: input too small for its convolution stack");
  int features = config_.global_pool ? channels : channels * fh * fw;
  for (std::size_t j = 0; j < config_.hidden.size(); ++j) {
    add_dense("fc" + std::to_string(j + 1), features, config_.hidden[j], rng);
    features = config_.hidden[j];
  }
  add_dense("predictions", features, config_.outputs, rng);
}

std::pair<int, int> ConvNet::feature_size() const {
  int h = config_.height;
  int w = config_.width;
  for (const auto& c : config_.conv) {
    const int pad = c.kernel / 2;
    h = (h + 2 * pad - c.kernel) / c.stride + 1;
    w = (w + 2 * pad - c.kernel) / c.stride + 1;
  }
  return {h, w};
}

Var ConvNet::forward(const Var& x, ForwardContext& ctx) {
  const auto& s = x.shape();
  if (s.size() != 4 || s[1] != config_.in_channels || s[2] != config_.height || s[3] != config_.width) {
    throw ShapeError("ConvNet expects (N, " + std::to_string(config_.in_channels) + ", " +
                     std::to_string(config_.height) + ", " + std::to_string(config_.width) + "), got " +
                     shape_string(s));
  }
  Var h = x;
  for (std::size_t i = 0; i < config_.conv.size(); ++i) {
    const auto& c = config_.conv[i];
    h = relu(conv(h, "conv" + std::to_string(i + 1), true, {c.stride, c.kernel / 2}, ctx));
    h = tap(h, static_cast<int>(i), ctx);
  }
  h = config_.global_pool ? global_avg_pool(h) : flatten(h);
  for (std::size_t j = 0; j < config_.hidden.size(); ++j) {
    h = relu(dense(h, "fc" + std::to_string(j + 1), ctx));
  }
  if (config_.dropout > 0.0 && ctx.training) {
    if (!ctx.rng) throw ConfigError("dropout in training needs an rng");
    h = dropout(h, config_.dropout, *ctx.rng, true);
  }
  return dense(h, "predictions", ctx);
}

std::vector<LayerInfo> ConvNet::layers() const {
  std::vector<LayerInfo> out{{"input", "InputLayer"}};
  for (std::size_t i = 0; i < config_.conv.size(); ++i) out.push_back({"conv" + std::to_string(i + 1), "Conv2D"});
  out.push_back(config_.global_pool ? LayerInfo{"avg_pool", "GlobalAveragePooling2D"} : LayerInfo{"flatten", "Flatten"});
  for (std::size_t j = 0; j < config_.hidden.size(); ++j) out.push_back({"fc" + std::to_string(j + 1), "Dense"});
  if (config_.dropout > 0.0) out.push_back({"dropout", "Dropout"});
  out.push_back({"predictions", "Dense"});
  return out;
}

// ---------------------------------------------------------------------------
// DenseNet

DenseNet::DenseNet(DenseNetConfig backbone, DenseHeadConfig head, std::uint64_t seed)
    : backbone_(std::move(backbone)), head_(head) {
  if (backbone_.block_layers.empty()) throw ConfigError("DenseNet needs at least one block");
  Rng rng(seed);
  add_conv("conv1/conv", backbone_.in_channels, backbone_.init_features, 7, false, rng);
  params_.add_batch_norm("conv1/bn", backbone_.init_features);
  int channels = backbone_.init_features;
  const int bottleneck = backbone_.bottleneck_width * backbone_.growth_rate;
  for (std::size_t b = 0; b < backbone_.block_layers.size(); ++b) {
    for (int i = 0; i < backbone_.block_layers[b]; ++i) {
      const std::string n = block_name(static_cast<int>(b), i);
      params_.add_batch_norm(n + "_0_bn", channels);
      add_conv(n + "_1_conv", channels, bottleneck, 1, false, rng);
      params_.add_batch_norm(n + "_1_bn", bottleneck);
      add_conv(n + "_2_conv", bottleneck, backbone_.growth_rate, 3, false, rng);
      channels += backbone_.growth_rate;
    }
    if (b + 1 < backbone_.block_layers.size()) {
      const std::string n = "pool" + std::to_string(b + 2);
      params_.add_batch_norm(n + "_bn", channels);
      const int reduced = static_cast<int>(channels * backbone_.compression);
      add_conv(n + "_conv", channels, reduced, 1, false, rng);
      channels = reduced;
    }
  }
  params_.add_batch_norm("bn", channels);
  feature_channels_ = channels;
  add_dense("fc_hidden", channels, head_.hidden_units, rng);
  add_dense("predictions", head_.hidden_units, head_.outputs, rng);
}

bool DenseNet::is_backbone_param(const std::string& name) {
  return name.rfind("fc_hidden/", 0) != 0 && name.rfind("predictions/", 0) != 0;
}

Var DenseNet::forward(const Var& x, ForwardContext& ctx) {
  const auto& s = x.shape();
  if (s.size() != 4 || s[1] != backbone_.in_channels) {
    throw ShapeError("DenseNet expects (N, " + std::to_string(backbone_.in_channels) + ", H, W), got " + shape_string(s));
  }
  Var h = conv(x, "conv1/conv", false, {2, 3}, ctx);
  h = relu(bn(h, "conv1/bn", ctx));
  h = max_pool2d(h, 3, 2, 1);
  for (std::size_t b = 0; b < backbone_.block_layers.size(); ++b) {
    for (int i = 0; i < backbone_.block_layers[b]; ++i) {
      const std::string n = block_name(static_cast<int>(b), i);
      Var y = relu(bn(h, n + "_0_bn", ctx));
      y = conv(y, n + "_1_conv", false, {1, 0}, ctx);
      y = relu(bn(y, n + "_1_bn", ctx));
      y = conv(y, n + "_2_conv", false, {1, 1}, ctx);
      h = concat_channels({h, y});
    }
    if (b + 1 < backbone_.block_layers.size()) {
      const std::string n = "pool" + std::to_string(b + 2);
      h = relu(bn(h, n + "_bn", ctx));
      h = conv(h, n + "_conv", false, {1, 0}, ctx);
      h = avg_pool2d(h, 2, 2);
    }
    h = tap(h, static_cast<int>(b), ctx);
  }
  h = relu(bn(h, "bn", ctx));
  h = tap(h, static_cast<int>(backbone_.block_layers.size()), ctx);
  h = global_avg_pool(h);
  h = relu(dense(h, "fc_hidden", ctx));
  if (ctx.training && head_.dropout > 0.0) {
    if (!ctx.rng) throw ConfigError("dropout in training needs an rng");
    h = dropout(h, head_.dropout, *ctx.rng, true);
  }
  return dense(h, "predictions", ctx);
}

std::vector<LayerInfo> DenseNet::layers() const {
  std::vector<LayerInfo> out{{"input_1", "InputLayer"},
                             {"zero_padding2d", "ZeroPadding2D"},
                             {"conv1/conv", "Conv2D"},
                             {"conv1/bn", "BatchNormalization"},
                             {"conv1/relu", "Activation"},
                             {"zero_padding2d_1", "ZeroPadding2D"},
                             {"pool1", "MaxPooling2D"}};
  for (std::size_t b = 0; b < backbone_.block_layers.size(); ++b) {
    for (int i = 0; i < backbone_.block_layers[b]; ++i) {
      const std::string n = block_name(static_cast<int>(b), i);
      out.push_back({n + "_0_bn", "BatchNormalization"});
      out.push_back({n + "_0_relu", "Activation"});
      out.push_back({n + "_1_conv", "Conv2D"});
      out.push_back({n + "_1_bn", "BatchNormalization"});
      out.push_back({n + "_1_relu", "Activation"});
      out.push_back({n + "_2_conv", "Conv2D"});
      out.push_back({n + "_concat", "Concatenate"});
    }
    if (b + 1 < backbone_.block_layers.size()) {
      const std::string n = "pool" + std::to_string(b + 2);
      out.push_back({n + "_bn", "BatchNormalization"});
      out.push_back({n + "_relu", "Activation"});
      out.push_back({n + "_conv", "Conv2D"});
      out.push_back({n + "_pool", "AveragePooling2D"});
    }
  }
  out.push_back({"bn", "BatchNormalization"});
  out.push_back({"relu", "Activation"});
  out.push_back({"avg_pool", "GlobalAveragePooling2D"});
  out.push_back({"fc_hidden", "Dense"});
  out.push_back({"dropout", "Dropout"});
  out.push_back({"predictions", "Dense"});
  return out;
}

// ---------------------------------------------------------------------------
// UNet

namespace {

std::string level(const char* prefix, int l) { return std::string(prefix) + std::to_string(l); }

}  // namespace

UNet::UNet(UNetConfig config, std::uint64_t seed) : config_(config) {
  if (config_.depth < 1 || config_.base_filters < 1) throw ConfigError("U-Net depth and filters must be positive");
  Rng rng(seed);
  int channels = config_.in_channels;
  for (int l = 0; l < config_.depth; ++l) {
    const int f = config_.base_filters << l;
    add_conv(level("enc", l) + "_conv1", channels, f, 3, true, rng);
    add_conv(level("enc", l) + "_conv2", f, f, 3, true, rng);
    channels = f;
  }
  const int fb = config_.base_filters << config_.depth;
  add_conv("bottleneck_conv1", channels, fb, 3, true, rng);
  add_conv("bottleneck_conv2", fb, fb, 3, true, rng);
  channels = fb;
  for (int l = config_.depth - 1; l >= 0; --l) {
    const int f = config_.base_filters << l;
    params_.add(level("up", l) + "/kernel", [&] {
      Tensor t({channels, f, 2, 2});
      const double limit = std::sqrt(6.0 / (channels * 4 + f * 4));
      for (auto& v : t.values()) v = rng.uniform(-limit, limit);
      return t;
    }());
    params_.add(level("up", l) + "/bias", Tensor({f}, 0.0));
    add_conv(level("dec", l) + "_conv1", 2 * f, f, 3, true, rng);
    add_conv(level("dec", l) + "_conv2", f, f, 3, true, rng);
    channels = f;
  }
  add_conv("seg_out", channels, 1, 1, true, rng);
}

Var UNet::forward(const Var& x, ForwardContext& ctx) {
  const auto& s = x.shape();
  const int div = 1 << config_.depth;
  if (s.size() != 4 || s[1] != config_.in_channels || s[2] % div || s[3] % div) {
    throw ShapeError("U-Net input " + shape_string(s) + " must have " + std::to_string(config_.in_channels) +
                     " channel(s) and sides divisible by " + std::to_string(div));
  }
  std::vector<Var> skips;
  Var h = x;
  for (int l = 0; l < config_.depth; ++l) {
    h = relu(conv(h, level("enc", l) + "_conv1", true, {1, 1}, ctx));
    h = relu(conv(h, level("enc", l) + "_conv2", true, {1, 1}, ctx));
    skips.push_back(h);
    h = max_pool2d(h, 2, 2);
  }
  h = relu(conv(h, "bottleneck_conv1", true, {1, 1}, ctx));
  h = relu(conv(h, "bottleneck_conv2", true, {1, 1}, ctx));
  for (int l = config_.depth - 1; l >= 0; --l) {
    h = conv_transpose2x2(h, param(level("up", l) + "/kernel", ctx), param(level("up", l) + "/bias", ctx));
    h = concat_channels({skips[static_cast<std::size_t>(l)], h});
    h = relu(conv(h, level("dec", l) + "_conv1", true, {1, 1}, ctx));
    h = relu(conv(h, level("dec", l) + "_conv2", true, {1, 1}, ctx));
  }
  return conv(h, "seg_out", true, {1, 0}, ctx);
}

std::vector<LayerInfo> UNet::layers() const {
  std::vector<LayerInfo> out{{"input", "InputLayer"}};
  for (int l = 0; l < config_.depth; ++l) {
    out.push_back({level("enc", l) + "_conv1", "Conv2D"});
    out.push_back({level("enc", l) + "_conv2", "Conv2D"});
    out.push_back({level("pool", l), "MaxPooling2D"});
  }
  out.push_back({"bottleneck_conv1", "Conv2D"});
  out.push_back({"bottleneck_conv2", "Conv2D"});
  for (int l = config_.depth - 1; l >= 0; --l) {
    out.push_back({level("up", l), "Conv2DTranspose"});
    out.push_back({level("skip", l), "Concatenate"});
    out.push_back({level("dec", l) + "_conv1", "Conv2D"});
    out.push_back({level("dec", l) + "_conv2", "Conv2D"});
  }
  out.push_back({"seg_out", "Conv2D"});
  return out;
}

}  // namespace cxnet::nn
