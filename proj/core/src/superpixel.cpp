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

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cxnet/error.hpp"
#include "cxnet/explain.hpp"

namespace cxnet::explain {

namespace {

struct Center {
  double y = 0;
  double x = 0;
  double v = 0;
};

// Relabels 4-connected runs of equal cluster ids; regions below `min_size`
// join the label of their already-visited neighbour.
int enforce_connectivity(const Grid<int>& clusters, int min_size, Grid<int>& out) {
  const int rows = clusters.rows();
  const int cols = clusters.cols();
  out = Grid<int>(rows, cols, -1);
  constexpr int dy[4] = {-1, 0, 1, 0};
  constexpr int dx[4] = {0, -1, 0, 1};
  int next = 0;
  std::vector<std::pair<int, int>> region;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (out(r, c) >= 0) continue;
      int adjacent = -1;
      for (int k = 0; k < 4; ++k) {
        const int y = r + dy[k];
        const int x = c + dx[k];
        if (y >= 0 && x >= 0 && y < rows && x < cols && out(y, x) >= 0) adjacent = out(y, x);
      }
      region.clear();
      region.emplace_back(r, c);
      out(r, c) = next;
      for (std::size_t i = 0; i < region.size(); ++i) {
        const auto [py, px] = region[i];
        for (int k = 0; k < 4; ++k) {
          const int y = py + dy[k];
          const int x = px + dx[k];
          if (y < 0 || x < 0 || y >= rows || x >= cols) continue;
          if (out(y, x) < 0 && clusters(y, x) == clusters(r, c)) {
            out(y, x) = next;
            region.emplace_back(y, x);
          }
        }
      }
      if (static_cast<int>(region.size()) < min_size && adjacent >= 0) {
        for (const auto& [y, x] : region) out(y, x) = adjacent;
      } else {
        ++next;
      }
    }
  }
  return next;
}

}  // namespace

Grid<int> slic(const Plane& image, const SlicOptions& options, int* n_labels) {
  if (options.n_segments < 1) throw ConfigError("superpixel count must be positive");
  if (image.empty()) throw ShapeError("cannot segment an empty image");
  const int rows = image.rows();
  const int cols = image.cols();
  const double step = std::max(1.0, std::sqrt(static_cast<double>(rows) * cols / options.n_segments));

  std::vector<Center> centers;
  for (double y = step / 2; y < rows; y += step) {
    for (double x = step / 2; x < cols; x += step) {
      const int iy = std::min(rows - 1, static_cast<int>(y));
      const int ix = std::min(cols - 1, static_cast<int>(x));
      centers.push_back({static_cast<double>(iy), static_cast<double>(ix), image(iy, ix)});
    }
  }

  Grid<int> assign(rows, cols, 0);
  Plane dist(rows, cols);
  const double spatial = options.compactness / step;
  const int window = static_cast<int>(std::ceil(step));
  for (int iter = 0; iter < options.iterations; ++iter) {
    dist = Plane(rows, cols, std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& ct = centers[k];
      const int y0 = std::max(0, static_cast<int>(ct.y) - window);
      const int y1 = std::min(rows - 1, static_cast<int>(ct.y) + window);
      const int x0 = std::max(0, static_cast<int>(ct.x) - window);
      const int x1 = std::min(cols - 1, static_cast<int>(ct.x) + window);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dv = image(y, x) - ct.v;
          const double ds = std::hypot(y - ct.y, x - ct.x) * spatial;
          const double d = dv * dv + ds * ds;
          if (d < dist(y, x)) {
            dist(y, x) = d;
            assign(y, x) = static_cast<int>(k);
          }
        }
      }
    }
    std::vector<Center> sums(centers.size());
    std::vector<int> counts(centers.size(), 0);
    for (int y = 0; y < rows; ++y) {
      for (int x = 0; x < cols; ++x) {
        const auto k = static_cast<std::size_t>(assign(y, x));
        sums[k].y += y;
        sums[k].x += x;
        sums[k].v += image(y, x);
        ++counts[k];
      }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      centers[k] = {sums[k].y / counts[k], sums[k].x / counts[k], sums[k].v / counts[k]};
    }
  }

  Grid<int> labels;
  const int min_size = std::max(1, static_cast<int>(step * step / 4));
  const int n = enforce_connectivity(assign, min_size, labels);
  if (n_labels) *n_labels = n;
  return labels;
}

}  // namespace cxnet::explain
