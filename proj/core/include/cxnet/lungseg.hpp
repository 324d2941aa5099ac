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
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cxnet/image.hpp"
#include "cxnet/models.hpp"

namespace cxnet::lungseg {

struct LungMask {
  BinaryGrid mask;
  int dilation_radius = 0;
  int margin = 0;
  std::string source_checkpoint;
  int components = 0;        // connected components of the raw prediction
  bool flagged_empty = false;

  int rows() const noexcept { return mask.rows(); }
  int cols() const noexcept { return mask.cols(); }
  std::size_t area() const;
};

/// U-Net spec with one grayscale input channel and a single logit output.
models::ModelSpec build_unet(int height = 256, int width = 256, int depth = 4, int base_filters = 32,
                             std::uint64_t seed = 0);

enum class SegLoss { Dice, BceDice };

struct SegTrainConfig {
  int epochs = 50;
  int batch_size = 4;
  double learning_rate = 1e-3;
  SegLoss loss = SegLoss::BceDice;
  double validation_fraction = 0.1;  // 0: validate on the training pairs
  std::uint64_t seed = 0;
  double threshold = 0.5;

  void validate() const;
  nlohmann::json to_json() const;
  static SegTrainConfig from_json(const nlohmann::json& j);
};

struct SegEpoch {
  int epoch = 0;
  double train_loss = 0;
  double train_dice = 0;
  double val_dice = 0;
};

struct SegTrainResult {
  models::Checkpoint best;  // weights of the epoch with the highest validation Dice
  int best_epoch = 0;
  std::vector<SegEpoch> log;
  std::vector<std::size_t> validation_indices;
};

struct SegPair {
  GrayImage image;
  BinaryGrid mask;
};

/// Trains the U-Net of `spec` on the pairs, each resized to the spec's input
/// size. `after_epoch_update` may modify the network before each validation.
SegTrainResult train_segmenter(const std::vector<SegPair>& pairs, const models::ModelSpec& spec,
                               const SegTrainConfig& cfg,
                               const std::function<void(int, nn::Network&)>& after_epoch_update = {});

/// Loaded segmentation checkpoint.
class Segmenter {
 public:
  explicit Segmenter(const models::Checkpoint& ckpt);

  const models::ModelSpec& spec() const noexcept { return spec_; }
  double threshold() const noexcept { return threshold_; }
  const std::string& id() const noexcept { return id_; }

  /// Per-pixel foreground probability; the image must have the checkpoint's size.
  Plane probabilities(const GrayImage& img);

 private:
  models::ModelSpec spec_;
  std::unique_ptr<nn::Network> net_;
  double threshold_;
  std::string id_;
};

/// Thresholded sigmoid output (probability >= threshold); no postprocessing.
LungMask predict_mask(const GrayImage& img, Segmenter& seg, double threshold);

/// Keeps the two largest 8-connected components, dilates them with a disk of
/// `dilation_radius`, then (when margin > 0) fills each kept component's
/// bounding box grown by `margin`. An empty input comes back empty and flagged.
LungMask postprocess_mask(const LungMask& mask, int dilation_radius, int margin);

/// Zeroes pixels outside the mask. Warns when the mask is empty.
GrayImage apply_roi(const GrayImage& img, const BinaryGrid& mask);

/// Predicts at the checkpoint size, postprocesses, and maps the mask back to
/// the image size (nearest neighbour).
LungMask segment(const GrayImage& img, Segmenter& seg, int dilation_radius, int margin);

double dice(const BinaryGrid& a, const BinaryGrid& b);
/// Labels of 8-connected foreground components (0 = background); returns the count.
int label_components(const BinaryGrid& mask, Grid<int>& labels);
BinaryGrid resize_nearest(const BinaryGrid& mask, int rows, int cols);

}  // namespace cxnet::lungseg
