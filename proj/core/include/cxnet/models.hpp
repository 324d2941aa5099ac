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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cxnet/enhance.hpp"
#include "cxnet/ingest.hpp"
#include "cxnet/labels.hpp"
#include "cxnet/networks.hpp"

namespace cxnet::models {

enum class ModelKind { BaseCnn, BackboneBinary, BackboneMulticlass, Unet };
enum class BackboneWeights { None, Imagenet, Chexnet };
enum class OutputHead { Sigmoid1, Softmax3 };
/// Per-channel input normalization applied after resizing.
enum class InputNorm { None, Imagenet };

std::string_view kind_name(ModelKind kind);
std::optional<ModelKind> parse_kind(std::string_view token);
std::string_view weights_name(BackboneWeights weights);
std::optional<BackboneWeights> parse_weights(std::string_view token);
std::string_view head_name(OutputHead head);
std::optional<OutputHead> parse_head(std::string_view token);

struct HeadConfig {
  int hidden_units = 10;
  double dropout_rate = 0.2;
  OutputHead output = OutputHead::Sigmoid1;

  int arity() const noexcept { return output == OutputHead::Sigmoid1 ? 1 : 3; }
};

/// Everything needed to rebuild a network: architecture, native input size,
/// task, and the pretrained weights it was initialized from.
struct ModelSpec {
  ModelKind kind = ModelKind::BaseCnn;
  int height = 320;
  int width = 320;
  int channels = 1;
  Task task = Task::Binary;
  HeadConfig head;
  BackboneWeights weights = BackboneWeights::None;
  std::string weights_path;
  std::string weights_sha256;
  InputNorm normalization = InputNorm::None;
  bool train_backbone = true;
  std::uint64_t init_seed = 0;

  // Base CNN.
  std::vector<nn::ConvLayerSpec> conv;
  std::vector<int> hidden;
  bool global_pool = false;  // average-pool the last conv instead of flattening
  // Backbone.
  nn::DenseNetConfig backbone;
  // Segmenter.
  nn::UNetConfig unet;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

/// Five 32-filter 3x3 ReLU convolutions, flatten, FC(10), FC(10), FC(1).
/// `stride` applies to every convolution; 1 reproduces the reference design.
ModelSpec build_base_cnn(int height, int width, int channels = 1, int stride = 1);

/// Densely connected backbone (121 layers by default) with a
/// GAP / FC(hidden) / dropout / output head. `weights_path` must name an
/// archive of converted backbone weights when `weights` is not None; when it is
/// empty the file is looked up in CXNET_WEIGHTS_DIR.
ModelSpec build_backbone_model(const HeadConfig& head, BackboneWeights weights, int height = 224, int width = 224,
                               const std::string& weights_path = "");

/// Task whose class count matches `head`; throws ConfigError when they disagree.
void check_head_task(const HeadConfig& head, Task task);

/// Default file name of a converted weight archive inside the weights directory.
std::string default_weights_file(BackboneWeights weights);
/// Explicit path if given, else CXNET_WEIGHTS_DIR/<default file>. Throws
/// IoError when no file is found.
std::filesystem::path resolve_weights_path(BackboneWeights weights, const std::string& explicit_path);

struct Prediction {
  std::vector<double> p;  // 1 entry (positive-class probability) or one per class
  Label predicted = Label::Normal;
};

/// Network plus the input handling its spec prescribes.
class Classifier {
 public:
  explicit Classifier(ModelSpec spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  nn::Network& network() noexcept { return *net_; }
  const nn::Network& network() const noexcept { return *net_; }
  int outputs() const noexcept;

  /// Loads the pretrained backbone named by spec().weights, records the file's
  /// SHA-256 in the spec and returns the load report.
  nn::ParamStore::LoadReport load_pretrained();
  /// Applies spec().train_backbone to the parameter set.
  void apply_trainable();

  /// Channel selection, resize to the native input size, normalization.
  nn::Tensor prepare(std::span<const enhance::ChannelStack> stacks) const;
  /// Same, from a (N, 3, H, W) stack batch.
  nn::Tensor prepare(const nn::Tensor& stack_batch) const;

  nn::Var logits(const nn::Tensor& prepared, nn::ForwardContext& ctx);
  /// Class probabilities of an (N, outputs) logit tensor.
  std::vector<Prediction> to_predictions(const nn::Tensor& logits) const;

  std::vector<Prediction> predict(std::span<const enhance::ChannelStack> stacks, int batch_size = 16);
  Prediction predict(const enhance::ChannelStack& stack);

 private:
  ModelSpec spec_;
  std::unique_ptr<nn::Network> net_;
};

std::unique_ptr<nn::Network> build_network(const ModelSpec& spec);
std::size_t trainable_parameter_count(const ModelSpec& spec);
std::vector<nn::LayerInfo> layer_listing(const ModelSpec& spec);

/// Weights, architecture, training configuration, metric log and the
/// fingerprint of the preprocessing that produced the inputs.
struct Checkpoint {
  ModelSpec spec;
  std::map<std::string, nn::Tensor> weights;
  nlohmann::json train_config = nlohmann::json::object();
  nlohmann::json log = nlohmann::json::array();
  std::string pipeline_fingerprint;
  nlohmann::json preprocess = nlohmann::json::object();  // settings behind the fingerprint
  double threshold = 0.5;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
  /// Content id: SHA-256 of the serialized weights.
  std::string id() const;
};

Checkpoint make_checkpoint(const Classifier& model);
Classifier restore(const Checkpoint& ckpt);

/// loss(logits, class indices) -> scalar.
using LossFn = std::function<nn::Var(const nn::Var& logits, const std::vector<int>& targets)>;

/// Cross-entropy whose targets are mixed toward uniform by `smoothing`
/// (binary target 1 becomes 1 - smoothing / 2), each sample weighted by the
/// weight of its true class. Sigmoid-1 for two-class tasks, softmax otherwise.
LossFn make_loss(Task task, const ingest::ClassWeights& weights, double smoothing);

struct AugmentPolicy {
  double zoom = 0.0;        // scale drawn from [1 - zoom, 1 + zoom]
  double brightness = 0.0;  // gain drawn from [1 - brightness, 1 + brightness]
  bool horizontal_flip = false;

  bool identity() const noexcept { return zoom == 0.0 && brightness == 0.0 && !horizontal_flip; }
};

/// Random zoom about the centre (edge-replicated), brightness gain clipped to
/// [0, 1] and an optional mirror. Draws exactly three numbers from `rng`.
nn::Tensor augment(const nn::Tensor& stack, const AugmentPolicy& policy, Rng& rng);

/// Normal / pneumonia routing. Components (1 - p1, p1 (1 - p2), p1 p2) for
/// (NORMAL, CAP, CP). A few-ulp correction of one component (the largest that
/// admits one) absorbs the floating-point residual so the vector sums to
/// exactly 1 left to right.
Prediction compose_hierarchical(double p1, double p2, double threshold = 0.5);
Prediction predict_hierarchical(Classifier& level1, Classifier& level2, const enhance::ChannelStack& stack,
                                double threshold = 0.5);

}  // namespace cxnet::models
