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
#include <limits>
#include <vector>

#include "cxnet/image.hpp"
#include "cxnet/tensor.hpp"

namespace cxnet::enhance {

/// Intensity lookup table over the 8-bit range.
using Lut = std::array<std::uint8_t, kLevels>;

GrayImage apply_lut(const GrayImage& img, const Lut& lut);

/// Classic equalization map round(255 * (cdf(v) - cdf_min) / (N - cdf_min)),
/// where cdf_min is the count of the darkest occupied level. A single-level
/// histogram yields the identity map.
Lut equalization_lut(const std::vector<std::size_t>& hist);

GrayImage hist_equalize(const GrayImage& img);

inline constexpr double kNoClip = std::numeric_limits<double>::infinity();

struct ClaheParams {
  int grid_rows = 8;  // tiles per column
  int grid_cols = 8;  // tiles per row
  double clip_limit = 2.0;  // multiple of the mean bin height; kNoClip gives plain AHE
};

/// Per-tile mappings computed by CLAHE before interpolation.
struct ClaheTiles {
  int grid_rows = 0;
  int grid_cols = 0;
  int tile_rows = 0;
  int tile_cols = 0;
  std::vector<Lut> luts;  // row-major over the tile grid

  const Lut& at(int tr, int tc) const { return luts[static_cast<std::size_t>(tr) * grid_cols + tc]; }
};

ClaheTiles clahe_tiles(const GrayImage& img, const ClaheParams& params);
/// Contrast-limited adaptive equalization. The image is padded (reflect-101) at
/// the bottom/right edge to a multiple of the grid; each tile's histogram is clipped
/// at clip_limit * area / 256 with the excess spread uniformly, equalized, and
/// pixel outputs are bilinear blends of the four nearest tile mappings.
GrayImage clahe(const GrayImage& img, const ClaheParams& params = {});
/// Adaptive equalization without clipping.
GrayImage ahe(const GrayImage& img, int grid_rows = 8, int grid_cols = 8);

struct BeasfParams {
  double gamma = 1.5;  // sigmoid slope
};

/// Bi-histogram equalization with adaptive sigmoid functions.
Lut beasf_lut(const GrayImage& img, const BeasfParams& params);
GrayImage beasf(const GrayImage& img, const BeasfParams& params = {});

/// Maps each level v to the smallest level u with CDF_ref(u) >= CDF_img(v).
Lut histogram_match_lut(const GrayImage& img, const GrayImage& reference);
GrayImage histogram_match(const GrayImage& img, const GrayImage& reference);

/// Three-plane model input. Plane order: raw, CLAHE, BEASF.
struct ChannelStack {
  std::array<Plane, 3> planes;

  int rows() const noexcept { return planes[0].rows(); }
  int cols() const noexcept { return planes[0].cols(); }
  /// (1, 3, rows, cols) tensor.
  nn::Tensor to_tensor() const;
  static ChannelStack from_tensor(const nn::Tensor& t);

  friend bool operator==(const ChannelStack&, const ChannelStack&) = default;
};

struct StackParams {
  int rows = 320;
  int cols = 320;
  ClaheParams clahe;
  BeasfParams beasf{1.5};
};

inline constexpr int kMinStackSide = 16;

/// Area-resizes to (rows, cols) at 8 bits, then stacks the resized image,
/// its CLAHE and its BEASF enhancement, each scaled into [0, 1].
ChannelStack build_stack(const GrayImage& img, const StackParams& params = {});

}  // namespace cxnet::enhance
