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

#include "cxnet/image.hpp"

#include <algorithm>
#include <cmath>

namespace cxnet {

namespace {

struct Tap {
  int index;
  double weight;
};

// Per output index, the source samples it overlaps and the overlap lengths,
// normalized so each output's weights sum to 1.
std::vector<std::vector<Tap>> area_taps(int src, int dst) {
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int o = 0; o < dst; ++o) {
    const double lo = o * scale;
    const double hi = (o + 1) * scale;
    double total = 0.0;
    for (int s = static_cast<int>(std::floor(lo)); s < src && s < hi; ++s) {
      const double w = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      if (w > 1e-12) {
        taps[o].push_back({s, w});
        total += w;
      }
    }
    for (auto& t : taps[o]) t.weight /= total;
  }
  return taps;
}

}  // namespace

Plane to_plane(const GrayImage& img) {
  Plane out(img.rows(), img.cols());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] / 255.0;
  return out;
}

GrayImage to_gray(const Plane& plane) {
  GrayImage out(plane.rows(), plane.cols());
  auto src = plane.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = std::round(std::clamp(src[i], 0.0, 1.0) * 255.0);
    dst[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

Plane resize_area(const Plane& src, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw ShapeError("resize target must be positive");
  if (src.empty()) throw ShapeError("cannot resize an empty plane");
  if (src.rows() == rows && src.cols() == cols) return src;
  const auto row_taps = area_taps(src.rows(), rows);
  const auto col_taps = area_taps(src.cols(), cols);

  Plane horizontal(src.rows(), cols);
  for (int r = 0; r < src.rows(); ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (const auto& t : col_taps[c]) acc += t.weight * src(r, t.index);
      horizontal(r, c) = acc;
    }
  }
  Plane out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (const auto& t : row_taps[r]) acc += t.weight * horizontal(t.index, c);
      out(r, c) = acc;
    }
  }
  return out;
}

GrayImage resize_area(const GrayImage& src, int rows, int cols) {
  if (src.rows() == rows && src.cols() == cols) return src;
  return to_gray(resize_area(to_plane(src), rows, cols));
}

Plane resize_bilinear(const Plane& src, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw ShapeError("resize target must be positive");
  if (src.empty()) throw ShapeError("cannot resize an empty plane");
  if (src.rows() == rows && src.cols() == cols) return src;
  Plane out(rows, cols);
  const double sy = static_cast<double>(src.rows()) / rows;
  const double sx = static_cast<double>(src.cols()) / cols;
  for (int r = 0; r < rows; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, src.rows() - 1.0);
    const int y0 = static_cast<int>(std::floor(y));
    const int y1 = std::min(y0 + 1, src.rows() - 1);
    const double fy = y - y0;
    for (int c = 0; c < cols; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, src.cols() - 1.0);
      const int x0 = static_cast<int>(std::floor(x));
      const int x1 = std::min(x0 + 1, src.cols() - 1);
      const double fx = x - x0;
      const double top = src(y0, x0) * (1 - fx) + src(y0, x1) * fx;
      const double bottom = src(y1, x0) * (1 - fx) + src(y1, x1) * fx;
      out(r, c) = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

std::vector<std::size_t> histogram(const GrayImage& img) {
  std::vector<std::size_t> hist(kLevels, 0);
  for (auto v : img.pixels()) ++hist[v];
  return hist;
}

}  // namespace cxnet
