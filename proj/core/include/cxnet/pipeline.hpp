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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cxnet/enhance.hpp"
#include "cxnet/explain.hpp"
#include "cxnet/ingest.hpp"
#include "cxnet/lungseg.hpp"
#include "cxnet/models.hpp"
#include "cxnet/training.hpp"

namespace cxnet::pipeline {

inline constexpr int kSchemaVersion = 1;

struct PreprocessConfig {
  bool segmentation = false;
  std::string segmenter;  // segmentation checkpoint path
  int dilation_radius = 5;
  int margin = 10;
  bool segment_first = true;  // false: enhance the full image, then mask the planes
  enhance::StackParams stack;

  nlohmann::json to_json() const;
  static PreprocessConfig from_json(const nlohmann::json& j);
};

/// Model choice as configured; turned into a ModelSpec by build_spec().
struct ModelConfig {
  std::string kind = "backbone";  // "base-cnn" or "backbone"
  std::string task = "binary";    // binary, multiclass, hierarchical
  int height = 224;
  int width = 224;
  int channels = 3;
  int stride = 1;  // base CNN only
  models::HeadConfig head;
  std::string weights = "chexnet";
  std::string weights_path;
  bool train_backbone = true;
  std::optional<std::vector<int>> block_layers;  // backbone depth override
  std::optional<int> growth_rate;
  std::optional<int> init_features;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool hierarchical() const noexcept { return task == "hierarchical"; }
  /// Spec for `task` (the level task for hierarchical runs).
  models::ModelSpec build_spec(Task task) const;
  Task primary_task() const;
};

struct SegmenterConfig {
  int height = 256;
  int width = 256;
  int depth = 4;
  int base_filters = 32;
  lungseg::SegTrainConfig train;

  nlohmann::json to_json() const;
  static SegmenterConfig from_json(const nlohmann::json& j);
};

struct ExplainConfig {
  std::string method = "gradcam";
  std::string target = "CP";
  int layer = -1;
  std::string colormap = "jet";
  double alpha = 0.4;
  explain::LimeOptions lime;

  nlohmann::json to_json() const;
  static ExplainConfig from_json(const nlohmann::json& j);
};

/// Every setting of a run; serializes to a versioned JSON document.
struct PipelineConfig {
  std::string manifest;
  std::string split;  // existing split file; empty: derive from the manifest
  std::uint64_t split_seed = 0;
  ingest::SplitFractions fractions;
  std::size_t limit = 0;  // cap on samples per partition (0: all)
  PreprocessConfig preprocess;
  ModelConfig model;
  models::TrainConfig train;
  int level2_epochs = 20;
  int runs = 1;
  SegmenterConfig segmenter;
  ExplainConfig explain;
  std::string output_dir = "runs";
  std::string tag;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);
};

/// Applies segmentation and enhancement in the configured order.
class Preprocessor {
 public:
  explicit Preprocessor(PreprocessConfig config);

  const PreprocessConfig& config() const noexcept { return config_; }
  enhance::ChannelStack operator()(const GrayImage& img) const;
  /// The stack plus the lung mask used (at the stack size), when segmenting.
  enhance::ChannelStack run(const GrayImage& img, BinaryGrid* mask) const;
  /// SHA-256 over the preprocessing settings and the segmenter checkpoint id.
  const std::string& fingerprint() const noexcept { return fingerprint_; }

 private:
  PreprocessConfig config_;
  std::shared_ptr<lungseg::Segmenter> segmenter_;
  std::string fingerprint_;
};

/// Decodes and preprocesses the records (first `limit` if nonzero).
models::Dataset load_dataset(const std::vector<ingest::ImageRecord>& records, const Preprocessor& pre,
                             std::size_t limit = 0);

/// Records of each split partition, frontal only, limited per partition so
/// every class keeps at least one sample where possible.
std::vector<ingest::ImageRecord> limit_records(const std::vector<ingest::ImageRecord>& records, std::size_t limit);

}  // namespace cxnet::pipeline
