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

#include "cxnet/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "cxnet/error.hpp"

namespace cxnet::explain {

using nn::Tensor;

// ---------------------------------------------------------------------------
// Grad-CAM

Heatmap grad_cam(models::Classifier& model, const enhance::ChannelStack& stack, Label target, int layer) {
  const int taps = model.network().feature_taps();
  if (taps == 0) throw ConfigError("Grad-CAM needs a model with a convolutional layer");
  if (layer < 0) layer = taps - 1;
  if (layer >= taps) throw ConfigError("feature layer " + std::to_string(layer) + " out of range");
  const Task task = model.spec().task;
  const auto cls = task_target(task, target);
  if (!cls) {
    throw ConfigError("target " + std::string(label_name(target)) + " is not a class of task " +
                      std::string(task_name(task)));
  }

  nn::ForwardContext ctx;
  ctx.param_grads = false;
  ctx.capture = layer;
  const nn::Var z = model.logits(model.prepare(std::span(&stack, 1)), ctx);
  Tensor coeff = Tensor::zeros_like(z.value());
  if (model.outputs() == 1) {
    coeff[0] = *cls == 1 ? 1.0 : -1.0;
  } else {
    coeff[static_cast<std::size_t>(*cls)] = 1.0;
  }
  nn::backward(nn::weighted_sum(z, coeff));

  const Tensor& a = ctx.captured.value();
  const Tensor g = ctx.captured.grad();
  const int k = a.dim(1);
  const int h = a.dim(2);
  const int w = a.dim(3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  Plane cam(h, w, 0.0);
  for (int c = 0; c < k; ++c) {
    const double* gc = g.data() + c * plane;
    const double alpha = std::accumulate(gc, gc + plane, 0.0) / static_cast<double>(plane);
    const double* ac = a.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) cam.pixels()[i] += alpha * ac[i];
  }
  for (auto& v : cam.pixels()) v = std::max(v, 0.0);

  Heatmap out;
  out.target = target;
  out.layer = layer;
  out.grid = resize_bilinear(cam, stack.rows(), stack.cols());
  const double peak = *std::max_element(out.grid.pixels().begin(), out.grid.pixels().end());
  if (!(peak > 0)) {
    out.grid = Plane(stack.rows(), stack.cols(), 0.0);
    out.all_zero = true;
    return out;
  }
  for (auto& v : out.grid.pixels()) v /= peak;
  return out;
}

// ---------------------------------------------------------------------------
// LIME

SuperpixelExplanation lime_explain(const PredictFn& predict, const enhance::ChannelStack& stack,
                                   const LimeOptions& o) {
  if (o.n_segments < 2) throw ConfigError("LIME needs at least 2 segments");
  if (o.n_samples < 10 * o.n_segments) throw ConfigError("LIME needs at least 10 samples per segment");
  if (!(o.kernel_width > 0)) throw ConfigError("kernel width must be positive");

  SuperpixelExplanation out;
  SlicOptions so = o.slic;
  so.n_segments = o.n_segments;
  out.segments = slic(stack.planes[0], so, &out.n_segments);
  const int n_seg = out.n_segments;
  if (n_seg < 2) throw ConfigError("superpixel segmentation is degenerate (1 segment)");

  std::array<double, 3> fill{};
  for (std::size_t p = 0; p < 3; ++p) {
    const auto px = stack.planes[p].pixels();
    fill[p] = std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size());
  }

  Rng rng(o.seed);
  const int n = o.n_samples;
  Eigen::MatrixXd z(n, n_seg);
  for (int j = 0; j < n_seg; ++j) z(0, j) = 1.0;
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < n_seg; ++j) z(i, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }

  Eigen::VectorXd y(n);
  for (int start = 0; start < n; start += o.batch_size) {
    const int count = std::min(o.batch_size, n - start);
    std::vector<enhance::ChannelStack> batch;
    batch.reserve(static_cast<std::size_t>(count));
    for (int i = start; i < start + count; ++i) {
      enhance::ChannelStack s = stack;
      for (std::size_t p = 0; p < 3; ++p) {
        auto px = s.planes[p].pixels();
        const auto seg = out.segments.pixels();
        for (std::size_t q = 0; q < px.size(); ++q) {
          if (z(i, seg[q]) == 0.0) px[q] = fill[p];
        }
      }
      batch.push_back(std::move(s));
    }
    const auto scores = predict(batch);
    if (static_cast<int>(scores.size()) != count) throw ShapeError("predict function returned the wrong count");
    for (int i = 0; i < count; ++i) y(start + i) = scores[static_cast<std::size_t>(i)];
  }

  Eigen::VectorXd kw(n);
  for (int i = 0; i < n; ++i) {
    const double on = z.row(i).sum();
    const double d = on > 0 ? 1.0 - on / (std::sqrt(on) * std::sqrt(static_cast<double>(n_seg))) : 1.0;
    kw(i) = std::sqrt(std::exp(-d * d / (o.kernel_width * o.kernel_width)));
  }

  Eigen::MatrixXd x(n, n_seg + 1);
  x.col(0).setOnes();
  x.rightCols(n_seg) = z;
  Eigen::MatrixXd a = x.transpose() * kw.asDiagonal() * x;
  for (int j = 1; j <= n_seg; ++j) a(j, j) += o.ridge;
  const Eigen::VectorXd b = x.transpose() * kw.asDiagonal() * y;
  const Eigen::VectorXd beta = a.ldlt().solve(b);

  out.intercept = beta(0);
  out.weights.assign(beta.data() + 1, beta.data() + 1 + n_seg);
  std::vector<int> order(static_cast<std::size_t>(n_seg));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int l, int r) {
    return std::abs(out.weights[static_cast<std::size_t>(l)]) > std::abs(out.weights[static_cast<std::size_t>(r)]);
  });
  for (int k = 0; k < std::min(o.top_k, n_seg); ++k) {
    const int s = order[static_cast<std::size_t>(k)];
    out.top_k.emplace_back(s, out.weights[static_cast<std::size_t>(s)] >= 0 ? 1 : -1);
  }
  return out;
}

SuperpixelExplanation lime_explain(models::Classifier& model, const enhance::ChannelStack& stack, Label target,
                                   const LimeOptions& options) {
  const auto cls = task_target(model.spec().task, target);
  if (!cls) throw ConfigError("target " + std::string(label_name(target)) + " is not a class of the model's task");
  const int idx = *cls;
  PredictFn fn = [&model, idx](const std::vector<enhance::ChannelStack>& batch) {
    const auto preds = model.predict(batch, static_cast<int>(batch.size()));
    std::vector<double> out;
    out.reserve(preds.size());
    for (const auto& p : preds) {
      out.push_back(p.p.size() == 1 ? (idx == 1 ? p.p[0] : 1.0 - p.p[0]) : p.p[static_cast<std::size_t>(idx)]);
    }
    return out;
  };
  auto expl = lime_explain(fn, stack, options);
  expl.target = target;
  return expl;
}

// ---------------------------------------------------------------------------
// Rendering

std::optional<Colormap> parse_colormap(std::string_view token) {
  if (token == "jet") return Colormap::Jet;
  if (token == "hot") return Colormap::Hot;
  return std::nullopt;
}

std::array<std::uint8_t, 3> colormap_color(Colormap cmap, double v) {
  v = std::clamp(v, 0.0, 1.0);
  auto byte = [](double x) { return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(x, 0.0, 1.0))); };
  if (cmap == Colormap::Hot) return {byte(3 * v), byte(3 * v - 1), byte(3 * v - 2)};
  return {byte(1.5 - std::abs(4 * v - 3)), byte(1.5 - std::abs(4 * v - 2)), byte(1.5 - std::abs(4 * v - 1))};
}

RgbImage render_overlay(const GrayImage& img, const Plane& map, Colormap cmap, double alpha, const BinaryGrid* roi) {
  if (!img.same_shape(map)) throw ShapeError("overlay: image and heatmap shapes differ");
  if (roi && !img.same_shape(*roi)) throw ShapeError("overlay: ROI shape differs from the image");
  if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("overlay alpha must lie in [0, 1]");
  RgbImage out{img.rows(), img.cols(), std::vector<std::uint8_t>(img.size() * 3)};
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = (roi && !roi->pixels()[i]) ? 0.0 : map.pixels()[i];
    const auto color = colormap_color(cmap, v);
    const double gray = img.pixels()[i];
    for (std::size_t c = 0; c < 3; ++c) {
      out.rgb[i * 3 + c] = static_cast<std::uint8_t>(std::lround((1 - alpha) * gray + alpha * color[c]));
    }
  }
  return out;
}

RgbImage render_superpixels(const GrayImage& img, const SuperpixelExplanation& expl, double alpha) {
  if (!img.same_shape(expl.segments)) throw ShapeError("overlay: image and segment shapes differ");
  std::vector<int> sign(static_cast<std::size_t>(expl.n_segments), 0);
  for (const auto& [seg, s] : expl.top_k) sign[static_cast<std::size_t>(seg)] = s;
  RgbImage out{img.rows(), img.cols(), std::vector<std::uint8_t>(img.size() * 3)};
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double gray = img.pixels()[i];
    const int s = sign[static_cast<std::size_t>(expl.segments.pixels()[i])];
    const std::array<double, 3> tint = s > 0 ? std::array<double, 3>{0, 255, 0} : std::array<double, 3>{255, 0, 0};
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = s == 0 ? gray : (1 - alpha) * gray + alpha * tint[c];
      out.rgb[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return out;
}

}  // namespace cxnet::explain
