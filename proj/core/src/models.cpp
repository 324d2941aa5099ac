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

#include "cxnet/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

#include "cxnet/archive.hpp"
#include "cxnet/error.hpp"
#include "cxnet/hash.hpp"
#include "cxnet/log.hpp"

namespace cxnet::models {

using nlohmann::json;
using nn::Tensor;

namespace {

constexpr const char* kCheckpointFormat = "cxnet-checkpoint";
constexpr int kCheckpointVersion = 1;

constexpr std::array<double, 3> kImagenetMean{0.485, 0.456, 0.406};
constexpr std::array<double, 3> kImagenetStd{0.229, 0.224, 0.225};

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view token, const std::array<std::pair<E, const char*>, N>& table) {
  for (const auto& [value, name] : table) {
    if (token == name) return value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view reverse(E value, const std::array<std::pair<E, const char*>, N>& table) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::array<std::pair<ModelKind, const char*>, 4> kKinds{{{ModelKind::BaseCnn, "base-cnn"},
                                                                  {ModelKind::BackboneBinary, "backbone-binary"},
                                                                  {ModelKind::BackboneMulticlass, "backbone-multiclass"},
                                                                  {ModelKind::Unet, "unet"}}};
constexpr std::array<std::pair<BackboneWeights, const char*>, 3> kWeights{
    {{BackboneWeights::None, "none"}, {BackboneWeights::Imagenet, "imagenet"}, {BackboneWeights::Chexnet, "chexnet"}}};
constexpr std::array<std::pair<OutputHead, const char*>, 2> kHeads{
    {{OutputHead::Sigmoid1, "sigmoid-1"}, {OutputHead::Softmax3, "softmax-3"}}};

template <typename T>
T require(const std::optional<T>& v, const std::string& what, const std::string& token) {
  if (!v) throw ConfigError("unknown " + what + " '" + token + "'");
  return *v;
}

}  // namespace

std::string_view kind_name(ModelKind kind) { return reverse(kind, kKinds); }
std::optional<ModelKind> parse_kind(std::string_view token) { return lookup(token, kKinds); }
std::string_view weights_name(BackboneWeights weights) { return reverse(weights, kWeights); }
std::optional<BackboneWeights> parse_weights(std::string_view token) { return lookup(token, kWeights); }
std::string_view head_name(OutputHead head) { return reverse(head, kHeads); }
std::optional<OutputHead> parse_head(std::string_view token) { return lookup(token, kHeads); }

// ---------------------------------------------------------------------------
// ModelSpec

json ModelSpec::to_json() const {
  json conv_layers = json::array();
  for (const auto& c : conv) conv_layers.push_back({{"filters", c.filters}, {"kernel", c.kernel}, {"stride", c.stride}});
  return {
      {"kind", kind_name(kind)},
      {"input_shape", {height, width, channels}},
      {"task", task_name(task)},
      {"head", {{"hidden_units", head.hidden_units}, {"dropout_rate", head.dropout_rate}, {"output", head_name(head.output)}}},
      {"backbone_weights", weights_name(weights)},
      {"weights_path", weights_path},
      {"weights_sha256", weights_sha256},
      {"normalization", normalization == InputNorm::Imagenet ? "imagenet" : "none"},
      {"train_backbone", train_backbone},
      {"init_seed", init_seed},
      {"conv", conv_layers},
      {"hidden", hidden},
      {"global_pool", global_pool},
      {"backbone",
       {{"in_channels", backbone.in_channels},
        {"growth_rate", backbone.growth_rate},
        {"block_layers", backbone.block_layers},
        {"init_features", backbone.init_features},
        {"bottleneck_width", backbone.bottleneck_width},
        {"compression", backbone.compression}}},
      {"unet", {{"in_channels", unet.in_channels}, {"depth", unet.depth}, {"base_filters", unet.base_filters}}},
  };
}

ModelSpec ModelSpec::from_json(const json& j) {
  try {
    ModelSpec s;
    const std::string kind = j.at("kind");
    s.kind = require(parse_kind(kind), "model kind", kind);
    const auto& shape = j.at("input_shape");
    s.height = shape.at(0);
    s.width = shape.at(1);
    s.channels = shape.at(2);
    const std::string task = j.at("task");
    s.task = require(parse_task(task), "task", task);
    const auto& h = j.at("head");
    s.head.hidden_units = h.at("hidden_units");
    s.head.dropout_rate = h.at("dropout_rate");
    const std::string out = h.at("output");
    s.head.output = require(parse_head(out), "head output", out);
    const std::string w = j.at("backbone_weights");
    s.weights = require(parse_weights(w), "backbone weights", w);
    s.weights_path = j.value("weights_path", "");
    s.weights_sha256 = j.value("weights_sha256", "");
    s.normalization = j.value("normalization", "none") == "imagenet" ? InputNorm::Imagenet : InputNorm::None;
    s.train_backbone = j.value("train_backbone", true);
    s.init_seed = j.value("init_seed", std::uint64_t{0});
    for (const auto& c : j.value("conv", json::array())) {
      s.conv.push_back({c.at("filters"), c.at("kernel"), c.at("stride")});
    }
    s.hidden = j.value("hidden", std::vector<int>{});
    s.global_pool = j.value("global_pool", false);
    if (j.contains("backbone")) {
      const auto& b = j["backbone"];
      s.backbone.in_channels = b.at("in_channels");
      s.backbone.growth_rate = b.at("growth_rate");
      s.backbone.block_layers = b.at("block_layers").get<std::vector<int>>();
      s.backbone.init_features = b.at("init_features");
      s.backbone.bottleneck_width = b.at("bottleneck_width");
      s.backbone.compression = b.at("compression");
    }
    if (j.contains("unet")) {
      const auto& u = j["unet"];
      s.unet.in_channels = u.at("in_channels");
      s.unet.depth = u.at("depth");
      s.unet.base_filters = u.at("base_filters");
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid model spec: ") + e.what());
  }
}

void check_head_task(const HeadConfig& head, Task task) {
  const int classes = task_classes(task);
  const int expected = classes == 2 ? 1 : classes;
  if (head.arity() != expected) {
    throw ConfigError("head " + std::string(head_name(head.output)) + " does not fit task " +
                      std::string(task_name(task)));
  }
  if (!(head.dropout_rate >= 0.0 && head.dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (head.hidden_units < 1) throw ConfigError("hidden units must be positive");
}

ModelSpec build_base_cnn(int height, int width, int channels, int stride) {
  if (height < 32 || width < 32) throw ConfigError("base CNN input must be at least 32x32");
  if (channels != 1 && channels != 3) throw ConfigError("base CNN input needs 1 or 3 channels");
  if (stride != 1 && stride != 2) throw ConfigError("base CNN stride must be 1 or 2");
  ModelSpec s;
  s.kind = ModelKind::BaseCnn;
  s.height = height;
  s.width = width;
  s.channels = channels;
  s.task = Task::Binary;
  s.head = {10, 0.0, OutputHead::Sigmoid1};
  s.conv.assign(5, nn::ConvLayerSpec{32, 3, stride});
  s.hidden = {10, 10};
  return s;
}

std::string default_weights_file(BackboneWeights weights) {
  switch (weights) {
    case BackboneWeights::Imagenet:
      return "densenet121_imagenet.cxa";
    case BackboneWeights::Chexnet:
      return "chexnet_densenet121.cxa";
    case BackboneWeights::None:
      break;
  }
  return "";
}

std::filesystem::path resolve_weights_path(BackboneWeights weights, const std::string& explicit_path) {
  std::filesystem::path path;
  if (!explicit_path.empty()) {
    path = explicit_path;
  } else {
    const char* dir = std::getenv("CXNET_WEIGHTS_DIR");
    if (!dir || !*dir) {
      throw IoError("no weights path given for " + std::string(weights_name(weights)) +
                    " and CXNET_WEIGHTS_DIR is not set");
    }
    path = std::filesystem::path(dir) / default_weights_file(weights);
  }
  if (!std::filesystem::is_regular_file(path)) throw IoError("weights file not found: " + path.string());
  return path;
}

ModelSpec build_backbone_model(const HeadConfig& head, BackboneWeights weights, int height, int width,
                               const std::string& weights_path) {
  if (height < 32 || width < 32) throw ConfigError("backbone input must be at least 32x32");
  ModelSpec s;
  s.kind = head.output == OutputHead::Sigmoid1 ? ModelKind::BackboneBinary : ModelKind::BackboneMulticlass;
  s.height = height;
  s.width = width;
  s.channels = 3;
  s.task = head.output == OutputHead::Sigmoid1 ? Task::Binary : Task::Multiclass;
  s.head = head;
  check_head_task(head, s.task);
  s.weights = weights;
  if (weights != BackboneWeights::None) {
    s.weights_path = resolve_weights_path(weights, weights_path).string();
    s.normalization = InputNorm::Imagenet;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Networks

std::unique_ptr<nn::Network> build_network(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::BaseCnn: {
      check_head_task(spec.head, spec.task);
      nn::ConvNetConfig c;
      c.in_channels = spec.channels;
      c.height = spec.height;
      c.width = spec.width;
      c.conv = spec.conv;
      c.hidden = spec.hidden;
      c.global_pool = spec.global_pool;
      c.dropout = spec.head.dropout_rate;
      c.outputs = spec.head.arity();
      return std::make_unique<nn::ConvNet>(c, spec.init_seed);
    }
    case ModelKind::BackboneBinary:
    case ModelKind::BackboneMulticlass: {
      check_head_task(spec.head, spec.task);
      nn::DenseNetConfig b = spec.backbone;
      b.in_channels = spec.channels;
      return std::make_unique<nn::DenseNet>(
          b, nn::DenseHeadConfig{spec.head.hidden_units, spec.head.dropout_rate, spec.head.arity()}, spec.init_seed);
    }
    case ModelKind::Unet: {
      nn::UNetConfig u = spec.unet;
      u.in_channels = spec.channels;
      return std::make_unique<nn::UNet>(u, spec.init_seed);
    }
  }
  throw ConfigError("unknown model kind");
}

std::size_t trainable_parameter_count(const ModelSpec& spec) {
  return build_network(spec)->params().trainable_count();
}

std::vector<nn::LayerInfo> layer_listing(const ModelSpec& spec) { return build_network(spec)->layers(); }

// ---------------------------------------------------------------------------
// Classifier

Classifier::Classifier(ModelSpec spec) : spec_(std::move(spec)), net_(build_network(spec_)) {
  if (spec_.kind == ModelKind::Unet) throw ConfigError("a U-Net spec is not a classifier");
  apply_trainable();
}

int Classifier::outputs() const noexcept { return spec_.head.arity(); }

void Classifier::apply_trainable() {
  if (spec_.train_backbone || spec_.kind == ModelKind::BaseCnn) {
    net_->params().set_trainable([](const std::string&) { return true; });
  } else {
    net_->params().set_trainable([](const std::string& n) { return !nn::DenseNet::is_backbone_param(n); });
  }
}

nn::ParamStore::LoadReport Classifier::load_pretrained() {
  if (spec_.weights == BackboneWeights::None) return {};
  if (spec_.kind == ModelKind::BaseCnn) throw ConfigError("the base CNN has no pretrained backbone");
  const auto path = resolve_weights_path(spec_.weights, spec_.weights_path);
  spec_.weights_path = path.string();
  spec_.weights_sha256 = sha256_file(path);
  log::info("loading " + std::string(weights_name(spec_.weights)) + " weights from " + path.string() +
            " (sha256 " + spec_.weights_sha256 + ")");
  io::TensorArchive archive = io::TensorArchive::load(path);
  std::map<std::string, Tensor> backbone;
  for (auto& [name, t] : archive.tensors) {
    if (nn::DenseNet::is_backbone_param(name)) backbone.emplace(name, std::move(t));
  }
  auto report = net_->params().load_state(backbone);
  std::size_t missing = 0;
  for (const auto& name : report.missing) missing += nn::DenseNet::is_backbone_param(name) ? 1 : 0;
  if (report.loaded == 0 || missing > 0) {
    throw IoError("weights file " + path.string() + " is missing " + std::to_string(missing) +
                  " backbone tensors (loaded " + std::to_string(report.loaded) + ")");
  }
  return report;
}

Tensor Classifier::prepare(std::span<const enhance::ChannelStack> stacks) const {
  const int n = static_cast<int>(stacks.size());
  const int c = spec_.channels;
  Tensor out({n, c, spec_.height, spec_.width});
  const std::size_t plane = static_cast<std::size_t>(spec_.height) * spec_.width;
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      Plane p = resize_bilinear(stacks[static_cast<std::size_t>(i)].planes[static_cast<std::size_t>(ch)],
                                spec_.height, spec_.width);
      double* dst = out.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
      const auto src = p.pixels();
      if (spec_.normalization == InputNorm::Imagenet) {
        const double mean = kImagenetMean[static_cast<std::size_t>(ch)];
        const double sd = kImagenetStd[static_cast<std::size_t>(ch)];
        for (std::size_t k = 0; k < plane; ++k) dst[k] = (src[k] - mean) / sd;
      } else {
        std::copy(src.begin(), src.end(), dst);
      }
    }
  }
  return out;
}

Tensor Classifier::prepare(const Tensor& stack_batch) const {
  if (stack_batch.rank() != 4 || stack_batch.dim(1) != 3) {
    throw ShapeError("expected a (N, 3, H, W) stack batch, got " + nn::shape_string(stack_batch.shape()));
  }
  std::vector<enhance::ChannelStack> stacks;
  for (int i = 0; i < stack_batch.dim(0); ++i) stacks.push_back(enhance::ChannelStack::from_tensor(stack_batch.slice0(i)));
  return prepare(stacks);
}

nn::Var Classifier::logits(const Tensor& prepared, nn::ForwardContext& ctx) {
  return net_->forward(nn::Var(prepared, false), ctx);
}

std::vector<Prediction> Classifier::to_predictions(const Tensor& logits) const {
  const int n = logits.dim(0);
  const int k = logits.dim(1);
  std::vector<Prediction> out(static_cast<std::size_t>(n));
  if (k == 1) {
    const Tensor p = nn::sigmoid(logits);
    for (int i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)].p = {p[static_cast<std::size_t>(i)]};
      out[static_cast<std::size_t>(i)].predicted = task_label(spec_.task, p[static_cast<std::size_t>(i)] >= 0.5 ? 1 : 0);
    }
    return out;
  }
  const Tensor p = nn::softmax_rows(logits);
  for (int i = 0; i < n; ++i) {
    auto& pred = out[static_cast<std::size_t>(i)];
    pred.p.assign(p.data() + static_cast<std::size_t>(i) * k, p.data() + static_cast<std::size_t>(i + 1) * k);
    const auto best = std::max_element(pred.p.begin(), pred.p.end()) - pred.p.begin();
    pred.predicted = task_label(spec_.task, static_cast<int>(best));
  }
  return out;
}

std::vector<Prediction> Classifier::predict(std::span<const enhance::ChannelStack> stacks, int batch_size) {
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  std::vector<Prediction> out;
  for (std::size_t start = 0; start < stacks.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(batch_size), stacks.size() - start);
    nn::ForwardContext ctx;
    const nn::Var z = logits(prepare(stacks.subspan(start, count)), ctx);
    auto preds = to_predictions(z.value());
    out.insert(out.end(), preds.begin(), preds.end());
  }
  return out;
}

Prediction Classifier::predict(const enhance::ChannelStack& stack) {
  return predict(std::span<const enhance::ChannelStack>(&stack, 1), 1).front();
}

// ---------------------------------------------------------------------------
// Checkpoint

void Checkpoint::save(const std::filesystem::path& path) const {
  io::TensorArchive archive;
  archive.meta = {{"format", kCheckpointFormat},
                  {"version", kCheckpointVersion},
                  {"spec", spec.to_json()},
                  {"train_config", train_config},
                  {"log", log},
                  {"pipeline_fingerprint", pipeline_fingerprint},
                  {"preprocess", preprocess},
                  {"threshold", threshold}};
  archive.tensors = weights;
  archive.save(path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  io::TensorArchive archive = io::TensorArchive::load(path);
  const auto& m = archive.meta;
  if (m.value("format", "") != kCheckpointFormat) throw IoError(path.string() + " is not a checkpoint");
  if (m.value("version", 0) != kCheckpointVersion) throw IoError(path.string() + ": unsupported checkpoint version");
  Checkpoint c;
  c.spec = ModelSpec::from_json(m.at("spec"));
  c.train_config = m.value("train_config", json::object());
  c.log = m.value("log", json::array());
  c.pipeline_fingerprint = m.value("pipeline_fingerprint", "");
  c.preprocess = m.value("preprocess", json::object());
  c.threshold = m.value("threshold", 0.5);
  c.weights = std::move(archive.tensors);
  return c;
}

std::string Checkpoint::id() const {
  io::TensorArchive archive;
  archive.tensors = weights;
  return archive.payload_sha256();
}

Checkpoint make_checkpoint(const Classifier& model) {
  Checkpoint c;
  c.spec = model.spec();
  c.weights = model.network().params().state();
  return c;
}

Classifier restore(const Checkpoint& ckpt) {
  Classifier model(ckpt.spec);
  const auto report = model.network().params().load_state(ckpt.weights);
  if (!report.missing.empty()) {
    throw IoError("checkpoint lacks " + std::to_string(report.missing.size()) + " tensors, first " +
                  report.missing.front());
  }
  return model;
}

// ---------------------------------------------------------------------------
// Loss

LossFn make_loss(Task task, const ingest::ClassWeights& weights, double smoothing) {
  if (!(smoothing >= 0.0 && smoothing < 0.5)) throw ConfigError("label smoothing must lie in [0, 0.5)");
  const int classes = task_classes(task);
  if (static_cast<int>(weights.per_class.size()) != classes) {
    throw ConfigError("class weights have " + std::to_string(weights.per_class.size()) + " entries, task " +
                      std::string(task_name(task)) + " has " + std::to_string(classes) + " classes");
  }
  const std::vector<double> w = weights.per_class;
  if (classes == 2) {
    return [w, smoothing](const nn::Var& logits, const std::vector<int>& targets) {
      std::vector<double> t(targets.size());
      std::vector<double> sw(targets.size());
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const int y = targets[i];
        if (y < 0 || y > 1) throw ConfigError("binary target out of range");
        t[i] = y == 1 ? 1.0 - smoothing / 2 : smoothing / 2;
        sw[i] = w[static_cast<std::size_t>(y)];
      }
      return nn::bce_with_logits(logits, t, sw);
    };
  }
  return [w, smoothing, classes](const nn::Var& logits, const std::vector<int>& targets) {
    std::vector<double> t(targets.size() * static_cast<std::size_t>(classes), smoothing / classes);
    std::vector<double> sw(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const int y = targets[i];
      if (y < 0 || y >= classes) throw ConfigError("class target out of range");
      t[i * static_cast<std::size_t>(classes) + static_cast<std::size_t>(y)] += 1.0 - smoothing;
      sw[i] = w[static_cast<std::size_t>(y)];
    }
    return nn::softmax_cross_entropy(logits, t, sw);
  };
}

// ---------------------------------------------------------------------------
// Augmentation

Tensor augment(const Tensor& stack, const AugmentPolicy& policy, Rng& rng) {
  if (stack.rank() != 3 && !(stack.rank() == 4 && stack.dim(0) == 1)) {
    throw ShapeError("augment expects (C, H, W) or (1, C, H, W), got " + nn::shape_string(stack.shape()));
  }
  if (policy.zoom < 0 || policy.zoom >= 1 || policy.brightness < 0 || policy.brightness >= 1) {
    throw ConfigError("augmentation ranges must lie in [0, 1)");
  }
  const double scale = rng.uniform(1.0 - policy.zoom, 1.0 + policy.zoom);
  const double gain = rng.uniform(1.0 - policy.brightness, 1.0 + policy.brightness);
  const bool flip = rng.uniform() < 0.5;
  if (policy.identity()) return stack;

  const std::size_t r = stack.rank();
  const int channels = stack.dim(r - 3);
  const int h = stack.dim(r - 2);
  const int w = stack.dim(r - 1);
  Tensor out = stack;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    const double* src = stack.data() + c * plane;
    double* dst = out.data() + c * plane;
    if (policy.zoom > 0.0 && scale != 1.0) {
      const double cy = (h - 1) / 2.0;
      const double cx = (w - 1) / 2.0;
      for (int y = 0; y < h; ++y) {
        const double sy = std::clamp(cy + (y - cy) / scale, 0.0, h - 1.0);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double fy = sy - y0;
        for (int x = 0; x < w; ++x) {
          const double sx = std::clamp(cx + (x - cx) / scale, 0.0, w - 1.0);
          const int x0 = static_cast<int>(sx);
          const int x1 = std::min(x0 + 1, w - 1);
          const double fx = sx - x0;
          const double top = src[y0 * w + x0] * (1 - fx) + src[y0 * w + x1] * fx;
          const double bottom = src[y1 * w + x0] * (1 - fx) + src[y1 * w + x1] * fx;
          dst[y * w + x] = top * (1 - fy) + bottom * fy;
        }
      }
    }
    if (policy.brightness > 0.0 && gain != 1.0) {
      for (std::size_t k = 0; k < plane; ++k) dst[k] = std::clamp(dst[k] * gain, 0.0, 1.0);
    }
    if (policy.horizontal_flip && flip) {
      for (int y = 0; y < h; ++y) std::reverse(dst + y * w, dst + (y + 1) * w);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hierarchy

Prediction compose_hierarchical(double p1, double p2, double threshold) {
  if (!(p1 >= 0 && p1 <= 1 && p2 >= 0 && p2 <= 1)) throw ConfigError("probabilities must lie in [0, 1]");
  if (!(threshold > 0 && threshold < 1)) throw ConfigError("threshold must lie in (0, 1)");
  Prediction out;
  out.p = {1.0 - p1, p1 * (1.0 - p2), p1 * p2};
  auto& p = out.p;
  const auto sum = [&] { return (p[0] + p[1]) + p[2]; };
  if (sum() != 1.0) {
    // Solve for one component and walk a few ulps when rounding of the partial
    // sum still misses. Ties in p[0] + p[1] can rule out every value of one
    // component, so fall back to the others largest first.
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    const std::vector<double> closed = p;
    bool done = false;
    for (const std::size_t k : order) {
      p = closed;
      const double base = k == 2 ? 1.0 - (p[0] + p[1]) : (1.0 - p[2]) - p[1 - k];
      for (int step = 0; step <= 64 && !done; ++step) {
        double v = base;
        for (int s = 0; s < (step + 1) / 2; ++s) v = std::nextafter(v, step % 2 ? 2.0 : -1.0);
        p[k] = v;
        done = v >= 0.0 && v <= 1.0 && sum() == 1.0;
      }
      if (done) break;
    }
    if (!done) throw Error("hierarchical composite could not be normalized");
  }
  if (p1 < threshold) {
    out.predicted = Label::Normal;
  } else {
    out.predicted = p2 < threshold ? Label::Cap : Label::Cp;
  }
  return out;
}

Prediction predict_hierarchical(Classifier& level1, Classifier& level2, const enhance::ChannelStack& stack,
                                double threshold) {
  if (level1.outputs() != 1 || level1.spec().task != Task::Level1) {
    throw ConfigError("level-1 model must be a sigmoid-1 normal/pneumonia classifier");
  }
  if (level2.outputs() != 1 || level2.spec().task != Task::Level2) {
    throw ConfigError("level-2 model must be a sigmoid-1 CAP/CP classifier");
  }
  const double p1 = level1.predict(stack).p[0];
  const double p2 = level2.predict(stack).p[0];
  return compose_hierarchical(p1, p2, threshold);
}

}  // namespace cxnet::models
