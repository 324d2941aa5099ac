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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cxnet/ingest.hpp"
#include "cxnet/pipeline.hpp"

namespace cxnet::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kConfigError = 2 };

/// Command-line overrides of PipelineConfig fields. Unset options leave the
/// value from --config (or the default) alone.
struct PipelineFlags {
  std::string config_path;
  bool dump_config = false;
  std::string out;

  std::optional<std::string> output_dir, tag;
  std::optional<std::string> manifest, split;
  std::optional<std::uint64_t> split_seed;
  std::optional<double> train_fraction;
  std::optional<std::size_t> limit;

  std::optional<std::string> segmenter, order;
  bool no_segmentation = false;
  std::optional<int> dilation, margin, stack_size, tile;
  std::optional<std::string> clip;
  std::optional<double> gamma;

  std::optional<std::string> kind, task, weights, weights_path, head_output;
  std::optional<int> input_size, channels, stride, hidden_units, growth_rate, init_features;
  std::optional<std::vector<int>> block_layers;
  std::optional<double> dropout;
  bool freeze_backbone = false;
  std::optional<std::uint64_t> model_seed;

  std::optional<int> epochs, batch_size, level2_epochs, runs;
  std::optional<double> lr, smoothing, zoom, brightness;
  bool flip = false;
  bool uniform_weights = false;
  std::optional<std::uint64_t> seed;

  std::optional<int> seg_size, seg_depth, seg_filters, seg_epochs, seg_batch;
  std::optional<double> seg_lr, seg_val_fraction;
  std::optional<std::string> seg_loss;

  std::optional<std::string> method, target, colormap;
  std::optional<int> layer, segments, samples, top_k;
  std::optional<double> alpha, kernel_width;
  std::optional<std::uint64_t> lime_seed;
};

enum FlagGroup : unsigned {
  kDataFlags = 1u << 0,
  kPreprocessFlags = 1u << 1,
  kModelFlags = 1u << 2,
  kTrainFlags = 1u << 3,
  kSegmenterFlags = 1u << 4,
  kExplainFlags = 1u << 5,
};

void add_pipeline_flags(CLI::App& app, PipelineFlags& flags, unsigned groups);
/// --config (or defaults) with the flag overrides applied.
pipeline::PipelineConfig resolve_config(const PipelineFlags& flags);

/// --out if given, else <output_dir>/<YYYYmmdd-HHMMSS>-<tag or command>; created.
std::filesystem::path make_run_dir(const pipeline::PipelineConfig& cfg, const PipelineFlags& flags,
                                   const std::string& command);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
/// Machine-readable summary on stdout.
void print_summary(const nlohmann::json& j);

struct Partitions {
  std::vector<ingest::ImageRecord> train;
  std::vector<ingest::ImageRecord> test;
  ingest::DatasetSplit split;
};

/// Task used to filter manifest records for a model configuration; the
/// hierarchical and multiclass runs keep all three labels.
Task selection_task(const pipeline::ModelConfig& model);
/// Manifest records of the task, divided by the split file or a derived split.
Partitions load_partitions(const pipeline::PipelineConfig& cfg, Task selection);

/// Preprocessing stored with a checkpoint, falling back to `fallback` for
/// checkpoints written without it.
pipeline::PreprocessConfig checkpoint_preprocess(const models::Checkpoint& ckpt,
                                                 const pipeline::PreprocessConfig& fallback);

}  // namespace cxnet::cli
