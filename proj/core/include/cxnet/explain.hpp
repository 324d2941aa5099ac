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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "cxnet/enhance.hpp"
#include "cxnet/image.hpp"
#include "cxnet/models.hpp"

namespace cxnet::explain {

struct Heatmap {
  Plane grid;  // values in [0, 1]
  Label target = Label::Normal;
  bool all_zero = false;
  int layer = -1;  // feature tap the map was computed from
};

/// Grad-CAM at feature tap `layer` (-1: the last one). The target score is
/// the logit for softmax heads; for sigmoid heads it is the logit for the
/// positive class and its negation for the other. The map is upsampled
/// bilinearly to the stack size and divided by its maximum.
Heatmap grad_cam(models::Classifier& model, const enhance::ChannelStack& stack, Label target, int layer = -1);

/// Superpixel segmentation: k-means over (intensity, position) seeded on a
/// regular grid, followed by a connectivity pass. Labels are 0..n-1.
struct SlicOptions {
  int n_segments = 100;
  double compactness = 0.1;  // weight of spatial distance against intensity in [0, 1]
  int iterations = 10;
};
Grid<int> slic(const Plane& image, const SlicOptions& options, int* n_labels = nullptr);

struct SuperpixelExplanation {
  Grid<int> segments;
  int n_segments = 0;
  std::vector<double> weights;  // one per segment
  double intercept = 0;
  std::vector<std::pair<int, int>> top_k;  // (segment, sign) ordered by |weight|
  Label target = Label::Normal;
};

struct LimeOptions {
  int n_segments = 100;
  int n_samples = 1000;
  double kernel_width = 0.25;
  double ridge = 1e-6;
  int top_k = 5;
  std::uint64_t seed = 0;
  int batch_size = 32;
  SlicOptions slic;  // n_segments overridden by the field above
};

/// Target-class score for each perturbed stack.
using PredictFn = std::function<std::vector<double>(const std::vector<enhance::ChannelStack>&)>;

/// Segments plane 0 into superpixels, scores random on/off occlusions (off
/// segments take each plane's mean), weights samples by an exponential kernel
/// of the cosine distance to the unoccluded image and fits a weighted ridge
/// regression of score on the on/off indicators.
SuperpixelExplanation lime_explain(const PredictFn& predict, const enhance::ChannelStack& stack,
                                   const LimeOptions& options = {});
SuperpixelExplanation lime_explain(models::Classifier& model, const enhance::ChannelStack& stack, Label target,
                                   const LimeOptions& options = {});

enum class Colormap { Jet, Hot };
std::optional<Colormap> parse_colormap(std::string_view token);
std::array<std::uint8_t, 3> colormap_color(Colormap cmap, double v);

/// (1 - alpha) * gray + alpha * color(map). When `roi` is given the map is
/// zeroed outside it first.
RgbImage render_overlay(const GrayImage& img, const Plane& map, Colormap cmap, double alpha = 0.4,
                        const BinaryGrid* roi = nullptr);
/// Tints the top-k segments: green for support of the target, red against.
RgbImage render_superpixels(const GrayImage& img, const SuperpixelExplanation& expl, double alpha = 0.4);

}  // namespace cxnet::explain
