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

#include "cxnet/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cxnet/error.hpp"

namespace cxnet::enhance {

namespace {

void require_nonempty(const GrayImage& img, const char* op) {
  if (img.empty()) throw ShapeError(std::string(op) + ": empty image");
}

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    i = i < 0 ? -i : 2 * n - 2 - i;
  }
  return i;
}

std::vector<std::size_t> clip_histogram(std::vector<std::size_t> hist, std::size_t limit) {
  std::size_t excess = 0;
  for (auto& h : hist) {
    if (h > limit) {
      excess += h - limit;
      h = limit;
    }
  }
  const std::size_t batch = excess / kLevels;
  std::size_t residual = excess - batch * kLevels;
  for (auto& h : hist) h += batch;
  if (residual > 0) {
    const std::size_t step = std::max<std::size_t>(kLevels / residual, 1);
    for (std::size_t i = 0; i < hist.size() && residual > 0; i += step, --residual) ++hist[i];
  }
  return hist;
}

// Sigmoid-shaped monotone map of [lo, hi] onto itself, centered on the level
// where the sub-histogram CDF first reaches one half.
void beasf_segment(const std::vector<std::size_t>& hist, int lo, int hi, double gamma, Lut& lut) {
  if (hi < lo) return;
  if (hi == lo) {
    lut[lo] = static_cast<std::uint8_t>(lo);
    return;
  }
  std::size_t total = 0;
  for (int v = lo; v <= hi; ++v) total += hist[v];
  double center = 0.5 * (lo + hi);
  if (total > 0) {
    std::size_t run = 0;
    for (int v = lo; v <= hi; ++v) {
      run += hist[v];
      if (2 * run >= total) {
        center = v;
        break;
      }
    }
  }
  const double width = hi - lo;
  auto sigmoid = [&](double t) { return 1.0 / (1.0 + std::exp(-gamma * 5.0 * (t - center) / width)); };
  const double s_lo = sigmoid(lo);
  const double s_hi = sigmoid(hi);
  for (int v = lo; v <= hi; ++v) {
    const double mapped = lo + width * (sigmoid(v) - s_lo) / (s_hi - s_lo);
    lut[v] = static_cast<std::uint8_t>(std::clamp(std::round(mapped), double(lo), double(hi)));
  }
}

}  // namespace

GrayImage apply_lut(const GrayImage& img, const Lut& lut) {
  GrayImage out(img.rows(), img.cols());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[src[i]];
  return out;
}

Lut equalization_lut(const std::vector<std::size_t>& hist) {
  Lut lut{};
  const std::size_t total = std::accumulate(hist.begin(), hist.end(), std::size_t{0});
  std::size_t cdf_min = 0;
  for (auto h : hist) {
    if (h) {
      cdf_min = h;
      break;
    }
  }
  if (total == cdf_min) {
    for (int v = 0; v < kLevels; ++v) lut[v] = static_cast<std::uint8_t>(v);
    return lut;
  }
  std::size_t cdf = 0;
  const double denom = static_cast<double>(total - cdf_min);
  for (int v = 0; v < kLevels; ++v) {
    cdf += hist[v];
    const double num = cdf > cdf_min ? static_cast<double>(cdf - cdf_min) : 0.0;
    lut[v] = static_cast<std::uint8_t>(std::lround(255.0 * num / denom));
  }
  return lut;
}

GrayImage hist_equalize(const GrayImage& img) {
  require_nonempty(img, "hist_equalize");
  return apply_lut(img, equalization_lut(histogram(img)));
}

ClaheTiles clahe_tiles(const GrayImage& img, const ClaheParams& params) {
  require_nonempty(img, "clahe");
  if (params.grid_rows < 1 || params.grid_cols < 1) throw ConfigError("clahe: tile grid must be positive");
  if (params.grid_rows > img.rows() || params.grid_cols > img.cols()) {
    throw ConfigError("clahe: tile grid " + std::to_string(params.grid_rows) + "x" +
                      std::to_string(params.grid_cols) + " is larger than the image");
  }
  if (!(params.clip_limit >= 1.0)) throw ConfigError("clahe: clip limit must be >= 1");

  ClaheTiles tiles;
  tiles.grid_rows = params.grid_rows;
  tiles.grid_cols = params.grid_cols;
  tiles.tile_rows = (img.rows() + params.grid_rows - 1) / params.grid_rows;
  tiles.tile_cols = (img.cols() + params.grid_cols - 1) / params.grid_cols;
  const std::size_t area = static_cast<std::size_t>(tiles.tile_rows) * tiles.tile_cols;
  const bool clip = std::isfinite(params.clip_limit);
  const auto limit = std::max<std::size_t>(
      1, clip ? static_cast<std::size_t>(params.clip_limit * static_cast<double>(area) / kLevels) : area);

  tiles.luts.reserve(static_cast<std::size_t>(tiles.grid_rows) * tiles.grid_cols);
  std::vector<std::size_t> hist(kLevels);
  for (int tr = 0; tr < tiles.grid_rows; ++tr) {
    for (int tc = 0; tc < tiles.grid_cols; ++tc) {
      std::fill(hist.begin(), hist.end(), 0);
      for (int y = tr * tiles.tile_rows; y < (tr + 1) * tiles.tile_rows; ++y) {
        const int sy = reflect101(y, img.rows());
        for (int x = tc * tiles.tile_cols; x < (tc + 1) * tiles.tile_cols; ++x) {
          ++hist[img(sy, reflect101(x, img.cols()))];
        }
      }
      tiles.luts.push_back(equalization_lut(clip ? clip_histogram(hist, limit) : hist));
    }
  }
  return tiles;
}

GrayImage clahe(const GrayImage& img, const ClaheParams& params) {
  const ClaheTiles tiles = clahe_tiles(img, params);
  GrayImage out(img.rows(), img.cols());
  const double inv_th = 1.0 / tiles.tile_rows;
  const double inv_tw = 1.0 / tiles.tile_cols;

  struct Axis {
    int a, b;
    double frac;
  };
  auto axis = [](int i, double inv, int n) {
    const double f = i * inv - 0.5;
    const int a = static_cast<int>(std::floor(f));
    return Axis{std::max(a, 0), std::min(a + 1, n - 1), f - a};
  };
  std::vector<Axis> cols(static_cast<std::size_t>(img.cols()));
  for (int x = 0; x < img.cols(); ++x) cols[x] = axis(x, inv_tw, tiles.grid_cols);

  for (int y = 0; y < img.rows(); ++y) {
    const Axis ry = axis(y, inv_th, tiles.grid_rows);
    for (int x = 0; x < img.cols(); ++x) {
      const Axis& rx = cols[x];
      const int v = img(y, x);
      const double top = tiles.at(ry.a, rx.a)[v] * (1.0 - rx.frac) + tiles.at(ry.a, rx.b)[v] * rx.frac;
      const double bottom = tiles.at(ry.b, rx.a)[v] * (1.0 - rx.frac) + tiles.at(ry.b, rx.b)[v] * rx.frac;
      out(y, x) = static_cast<std::uint8_t>(std::clamp(std::round(top * (1.0 - ry.frac) + bottom * ry.frac), 0.0, 255.0));
    }
  }
  return out;
}

GrayImage ahe(const GrayImage& img, int grid_rows, int grid_cols) {
  return clahe(img, ClaheParams{grid_rows, grid_cols, kNoClip});
}

// The histogram is split at the integer part of the global mean m into
// [0, m] and [m+1, 255]. Each part is remapped onto itself by a sigmoid of
// slope gamma whose center is that part's median level, with the abscissa
// scaled so the part spans 5 units; the sigmoid stands in for the part's CDF.
// The median center follows the original bi-histogram sigmoid method rather
// than the midpoint of the sub-range.
Lut beasf_lut(const GrayImage& img, const BeasfParams& params) {
  require_nonempty(img, "beasf");
  if (!(params.gamma > 0.0)) throw ConfigError("beasf: gamma must be positive");
  const auto hist = histogram(img);
  double sum = 0.0;
  for (int v = 0; v < kLevels; ++v) sum += static_cast<double>(v) * static_cast<double>(hist[v]);
  const int mean = static_cast<int>(std::floor(sum / static_cast<double>(img.size())));
  Lut lut{};
  beasf_segment(hist, 0, mean, params.gamma, lut);
  beasf_segment(hist, mean + 1, kLevels - 1, params.gamma, lut);
  return lut;
}

GrayImage beasf(const GrayImage& img, const BeasfParams& params) { return apply_lut(img, beasf_lut(img, params)); }

Lut histogram_match_lut(const GrayImage& img, const GrayImage& reference) {
  require_nonempty(img, "histogram_match");
  require_nonempty(reference, "histogram_match reference");
  const auto hs = histogram(img);
  const auto hr = histogram(reference);
  const double ns = static_cast<double>(img.size());
  const double nr = static_cast<double>(reference.size());
  Lut lut{};
  std::size_t cs = 0;
  std::size_t cr = hr[0];
  int u = 0;
  for (int v = 0; v < kLevels; ++v) {
    cs += hs[v];
    // Compare cs/ns <= cr/nr exactly in integer arithmetic.
    while (u < kLevels - 1 && static_cast<double>(cr) * ns < static_cast<double>(cs) * nr) {
      ++u;
      cr += hr[u];
    }
    lut[v] = static_cast<std::uint8_t>(u);
  }
  return lut;
}

GrayImage histogram_match(const GrayImage& img, const GrayImage& reference) {
  return apply_lut(img, histogram_match_lut(img, reference));
}

nn::Tensor ChannelStack::to_tensor() const {
  const int h = rows();
  const int w = cols();
  nn::Tensor t({1, 3, h, w});
  for (int p = 0; p < 3; ++p) {
    if (!planes[p].same_shape(planes[0])) throw ShapeError("channel stack planes disagree in shape");
    std::copy(planes[p].pixels().begin(), planes[p].pixels().end(),
              t.data() + static_cast<std::size_t>(p) * h * w);
  }
  return t;
}

ChannelStack ChannelStack::from_tensor(const nn::Tensor& t) {
  const auto& s = t.shape();
  const bool batched = s.size() == 4 && s[0] == 1 && s[1] == 3;
  const bool plain = s.size() == 3 && s[0] == 3;
  if (!batched && !plain) throw ShapeError("channel stack tensor must be (3,H,W) or (1,3,H,W), got " + nn::shape_string(s));
  const int h = s[s.size() - 2];
  const int w = s[s.size() - 1];
  ChannelStack stack;
  for (int p = 0; p < 3; ++p) {
    const double* src = t.data() + static_cast<std::size_t>(p) * h * w;
    stack.planes[p] = Plane(h, w, std::vector<double>(src, src + static_cast<std::size_t>(h) * w));
  }
  return stack;
}

ChannelStack build_stack(const GrayImage& img, const StackParams& params) {
  require_nonempty(img, "build_stack");
  if (img.rows() < kMinStackSide || img.cols() < kMinStackSide || params.rows < kMinStackSide ||
      params.cols < kMinStackSide) {
    throw ShapeError("build_stack: images must be at least 16x16");
  }
  const GrayImage resized = resize_area(img, params.rows, params.cols);
  ChannelStack stack;
  stack.planes[0] = to_plane(resized);
  stack.planes[1] = to_plane(clahe(resized, params.clahe));
  stack.planes[2] = to_plane(beasf(resized, params.beasf));
  return stack;
}

}  // namespace cxnet::enhance
