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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cxnet/error.hpp"

namespace cxnet {

/// Row-major 2-D grid of samples.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}
  Grid(int rows, int cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checked_size(rows, cols)) {
      throw ShapeError("grid data size does not match rows*cols");
    }
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int r, int c) noexcept { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const noexcept {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  bool same_shape(const auto& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static std::size_t checked_size(int rows, int cols) {
    if (rows < 0 || cols < 0) throw ShapeError("negative grid dimension");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

/// 8-bit grayscale radiograph, intensities 0..255.
using GrayImage = Grid<std::uint8_t>;
/// Real-valued plane, nominally in [0, 1].
using Plane = Grid<double>;
/// Binary mask with values in {0, 1}.
using BinaryGrid = Grid<std::uint8_t>;

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> rgb;  // rows * cols * 3

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

inline constexpr int kLevels = 256;

Plane to_plane(const GrayImage& img);
/// Rounds to nearest and clamps into 0..255.
GrayImage to_gray(const Plane& plane);

/// Box-filter (pixel-area overlap) resampling; the downscaling behaviour matches area interpolation.
Plane resize_area(const Plane& src, int rows, int cols);
GrayImage resize_area(const GrayImage& src, int rows, int cols);
/// Bilinear resampling with pixel-center alignment and edge clamping.
Plane resize_bilinear(const Plane& src, int rows, int cols);

/// 256-bin intensity histogram.
std::vector<std::size_t> histogram(const GrayImage& img);

}  // namespace cxnet
