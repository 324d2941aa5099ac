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

#include "cxnet/lungseg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "cxnet/error.hpp"
#include "cxnet/log.hpp"
#include "cxnet/optim.hpp"

namespace cxnet::lungseg {

using nlohmann::json;
using nn::Tensor;

std::size_t LungMask::area() const {
  return static_cast<std::size_t>(std::count(mask.pixels().begin(), mask.pixels().end(), std::uint8_t{1}));
}

models::ModelSpec build_unet(int height, int width, int depth, int base_filters, std::uint64_t seed) {
  if (depth < 1) throw ConfigError("U-Net depth must be at least 1");
  if (base_filters < 1) throw ConfigError("U-Net base filters must be positive");
  const int div = 1 << depth;
  if (height < div || width < div || height % div || width % div) {
    throw ConfigError("U-Net input " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by 2^" + std::to_string(depth));
  }
  models::ModelSpec s;
  s.kind = models::ModelKind::Unet;
  s.height = height;
  s.width = width;
  s.channels = 1;
  s.unet = {1, depth, base_filters};
  s.init_seed = seed;
  return s;
}

// ---------------------------------------------------------------------------
// SegTrainConfig

void SegTrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("segmentation epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("segmentation batch size must be at least 1");
  if (!(learning_rate > 0)) throw ConfigError("segmentation learning rate must be positive");
  if (!(validation_fraction >= 0 && validation_fraction < 1)) throw ConfigError("validation fraction must lie in [0, 1)");
  if (!(threshold > 0 && threshold < 1)) throw ConfigError("threshold must lie in (0, 1)");
}

json SegTrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"loss", loss == SegLoss::Dice ? "dice" : "bce-dice"},
          {"validation_fraction", validation_fraction},
          {"seed", seed},
          {"threshold", threshold},
          {"checkpoint_policy", "keep-best-by-validation-dice"}};
}

SegTrainConfig SegTrainConfig::from_json(const json& j) {
  try {
    SegTrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    const std::string loss = j.value("loss", "bce-dice");
    if (loss != "dice" && loss != "bce-dice") throw ConfigError("segmentation loss must be dice or bce-dice");
    c.loss = loss == "dice" ? SegLoss::Dice : SegLoss::BceDice;
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.seed = j.value("seed", c.seed);
    c.threshold = j.value("threshold", c.threshold);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid segmentation config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Helpers

double dice(const BinaryGrid& a, const BinaryGrid& b) {
  if (!a.same_shape(b)) throw ShapeError("dice: mask shapes differ");
  std::size_t inter = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a.pixels()[i] && b.pixels()[i]) ? 1 : 0;
    total += (a.pixels()[i] ? 1 : 0) + (b.pixels()[i] ? 1 : 0);
  }
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

int label_components(const BinaryGrid& mask, Grid<int>& labels) {
  labels = Grid<int>(mask.rows(), mask.cols(), 0);
  int count = 0;
  std::deque<std::pair<int, int>> queue;
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      if (!mask(r, c) || labels(r, c)) continue;
      ++count;
      labels(r, c) = count;
      queue.emplace_back(r, c);
      while (!queue.empty()) {
        const auto [y, x] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = y + dy;
            const int nx = x + dx;
            if (ny < 0 || nx < 0 || ny >= mask.rows() || nx >= mask.cols()) continue;
            if (mask(ny, nx) && !labels(ny, nx)) {
              labels(ny, nx) = count;
              queue.emplace_back(ny, nx);
            }
          }
        }
      }
    }
  }
  return count;
}

BinaryGrid resize_nearest(const BinaryGrid& mask, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw ShapeError("resize target must be positive");
  if (mask.rows() == rows && mask.cols() == cols) return mask;
  BinaryGrid out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int sr = std::min(mask.rows() - 1, static_cast<int>((r + 0.5) * mask.rows() / rows));
    for (int c = 0; c < cols; ++c) {
      const int sc = std::min(mask.cols() - 1, static_cast<int>((c + 0.5) * mask.cols() / cols));
      out(r, c) = mask(sr, sc);
    }
  }
  return out;
}

namespace {

void check_binary(const BinaryGrid& m, std::size_t index) {
  for (auto v : m.pixels()) {
    if (v > 1) throw ConfigError("mask " + std::to_string(index) + " is not binary");
  }
}

Tensor image_tensor(const GrayImage& img, int rows, int cols) {
  const GrayImage resized = resize_area(img, rows, cols);
  Tensor t({1, 1, rows, cols});
  for (std::size_t i = 0; i < resized.size(); ++i) t[i] = resized.pixels()[i] / 255.0;
  return t;
}

Tensor mask_tensor(const BinaryGrid& mask, int rows, int cols) {
  Tensor t({1, 1, rows, cols});
  if (mask.rows() == rows && mask.cols() == cols) {
    for (std::size_t i = 0; i < mask.size(); ++i) t[i] = mask.pixels()[i];
    return t;
  }
  Plane p(mask.rows(), mask.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) p.pixels()[i] = mask.pixels()[i];
  const Plane r = resize_area(p, rows, cols);
  for (std::size_t i = 0; i < r.size(); ++i) t[i] = r.pixels()[i] >= 0.5 ? 1.0 : 0.0;
  return t;
}

BinaryGrid threshold_logits(const Tensor& logits, int index, int rows, int cols, double threshold) {
  BinaryGrid out(rows, cols);
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  const double* z = logits.data() + static_cast<std::size_t>(index) * plane;
  for (std::size_t i = 0; i < plane; ++i) out.pixels()[i] = 1.0 / (1.0 + std::exp(-z[i])) >= threshold ? 1 : 0;
  return out;
}

BinaryGrid tensor_mask(const Tensor& t, int rows, int cols) {
  BinaryGrid out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.pixels()[i] = t[i] > 0.5 ? 1 : 0;
  return out;
}

double mean_dice(nn::Network& net, const std::vector<Tensor>& images, const std::vector<Tensor>& masks,
                 const std::vector<std::size_t>& idx, int rows, int cols, double threshold) {
  if (idx.empty()) return 0.0;
  double sum = 0;
  for (auto i : idx) {
    nn::ForwardContext ctx;
    ctx.param_grads = false;
    const nn::Var z = net.forward(nn::Var(images[i], false), ctx);
    sum += dice(threshold_logits(z.value(), 0, rows, cols, threshold), tensor_mask(masks[i], rows, cols));
  }
  return sum / static_cast<double>(idx.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Training

SegTrainResult train_segmenter(const std::vector<SegPair>& pairs, const models::ModelSpec& spec,
                               const SegTrainConfig& cfg, const std::function<void(int, nn::Network&)>& after_epoch_update) {
  cfg.validate();
  if (spec.kind != models::ModelKind::Unet) throw ConfigError("segmentation needs a U-Net spec");
  if (pairs.size() < 2) throw ConfigError("segmentation training needs at least 2 image/mask pairs");
  const int rows = spec.height;
  const int cols = spec.width;
  std::vector<Tensor> images;
  std::vector<Tensor> masks;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!pairs[i].image.same_shape(pairs[i].mask)) throw ShapeError("pair " + std::to_string(i) + ": image/mask shapes differ");
    check_binary(pairs[i].mask, i);
    images.push_back(image_tensor(pairs[i].image, rows, cols));
    masks.push_back(mask_tensor(pairs[i].mask, rows, cols));
  }

  SegTrainResult result;
  std::vector<std::size_t> all(pairs.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> train_idx = all;
  std::vector<std::size_t> val_idx = all;
  if (cfg.validation_fraction > 0) {
    Rng split_rng(derive_seed(cfg.seed, 0x5E6));
    std::vector<std::size_t> shuffled = all;
    split_rng.shuffle(shuffled.begin(), shuffled.end());
    const auto n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(pairs.size()))), 1,
        pairs.size() - 1);
    val_idx.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_idx.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val), shuffled.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
  }
  result.validation_indices = val_idx;

  auto net = models::build_network(spec);
  nn::Adam optimizer(net->params().trainable(), nn::AdamOptions{cfg.learning_rate});
  const double bce_weight = cfg.loss == SegLoss::BceDice ? 1.0 : 0.0;
  double best_dice = -1;
  std::map<std::string, Tensor> best_weights;
  json log_json = json::array();
  std::vector<std::size_t> order = train_idx;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, 0x5E7, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto count = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      std::vector<Tensor> xb;
      std::vector<Tensor> yb;
      for (std::size_t k = 0; k < count; ++k) {
        xb.push_back(images[order[start + k]]);
        yb.push_back(masks[order[start + k]]);
      }
      nn::ForwardContext ctx;
      ctx.training = true;
      const nn::Var z = net->forward(nn::Var(Tensor::stack0(xb), false), ctx);
      const nn::Var l = nn::dice_bce_loss(z, Tensor::stack0(yb), bce_weight);
      net->params().zero_grad();
      nn::backward(l);
      optimizer.step();
      loss_sum += l.value()[0] * static_cast<double>(count);
    }
    if (after_epoch_update) after_epoch_update(epoch, *net);

    SegEpoch rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_dice = mean_dice(*net, images, masks, train_idx, rows, cols, cfg.threshold);
    rec.val_dice = val_idx == train_idx ? rec.train_dice : mean_dice(*net, images, masks, val_idx, rows, cols, cfg.threshold);
    if (rec.val_dice > best_dice) {
      best_dice = rec.val_dice;
      best_weights = net->params().state();
      result.best_epoch = epoch;
    }
    result.log.push_back(rec);
    log_json.push_back(
        {{"epoch", epoch}, {"train_loss", rec.train_loss}, {"train_dice", rec.train_dice}, {"val_dice", rec.val_dice}});
    log::info("segmenter epoch " + std::to_string(epoch + 1) + " dice " + std::to_string(rec.val_dice));
  }

  result.best.spec = spec;
  result.best.weights = std::move(best_weights);
  result.best.train_config = cfg.to_json();
  result.best.log = log_json;
  result.best.threshold = cfg.threshold;
  return result;
}

// ---------------------------------------------------------------------------
// Inference

Segmenter::Segmenter(const models::Checkpoint& ckpt)
    : spec_(ckpt.spec), net_(models::build_network(ckpt.spec)), threshold_(ckpt.threshold), id_(ckpt.id()) {
  if (spec_.kind != models::ModelKind::Unet) throw ConfigError("checkpoint is not a segmentation model");
  const auto report = net_->params().load_state(ckpt.weights);
  if (!report.missing.empty()) throw IoError("segmentation checkpoint lacks tensor " + report.missing.front());
}

Plane Segmenter::probabilities(const GrayImage& img) {
  if (img.rows() != spec_.height || img.cols() != spec_.width) {
    throw ShapeError("segmenter expects " + std::to_string(spec_.height) + "x" + std::to_string(spec_.width) +
                     " input, got " + std::to_string(img.rows()) + "x" + std::to_string(img.cols()));
  }
  nn::ForwardContext ctx;
  ctx.param_grads = false;
  const nn::Var z = net_->forward(nn::Var(image_tensor(img, img.rows(), img.cols()), false), ctx);
  Plane out(img.rows(), img.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.pixels()[i] = 1.0 / (1.0 + std::exp(-z.value()[i]));
  return out;
}

LungMask predict_mask(const GrayImage& img, Segmenter& seg, double threshold) {
  if (!(threshold > 0 && threshold < 1)) throw ConfigError("threshold must lie in (0, 1)");
  const Plane p = seg.probabilities(img);
  LungMask out;
  out.mask = BinaryGrid(img.rows(), img.cols());
  for (std::size_t i = 0; i < p.size(); ++i) out.mask.pixels()[i] = p.pixels()[i] >= threshold ? 1 : 0;
  Grid<int> labels;
  out.components = label_components(out.mask, labels);
  out.flagged_empty = out.components == 0;
  out.source_checkpoint = seg.id();
  return out;
}

LungMask postprocess_mask(const LungMask& in, int dilation_radius, int margin) {
  if (dilation_radius < 0 || margin < 0) throw ConfigError("dilation radius and margin must be non-negative");
  LungMask out = in;
  out.dilation_radius = dilation_radius;
  out.margin = margin;
  const int rows = in.rows();
  const int cols = in.cols();
  out.mask = BinaryGrid(rows, cols);
  Grid<int> labels;
  const int count = label_components(in.mask, labels);
  out.components = count;
  if (count == 0) {
    out.flagged_empty = true;
    return out;
  }
  out.flagged_empty = false;

  std::vector<std::size_t> sizes(static_cast<std::size_t>(count) + 1, 0);
  for (auto l : labels.pixels()) ++sizes[static_cast<std::size_t>(l)];
  std::vector<int> ids(static_cast<std::size_t>(count));
  std::iota(ids.begin(), ids.end(), 1);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) { return sizes[static_cast<std::size_t>(a)] > sizes[static_cast<std::size_t>(b)]; });
  ids.resize(std::min<std::size_t>(2, ids.size()));

  std::vector<std::pair<int, int>> disk;
  for (int dy = -dilation_radius; dy <= dilation_radius; ++dy) {
    for (int dx = -dilation_radius; dx <= dilation_radius; ++dx) {
      if (dx * dx + dy * dy <= dilation_radius * dilation_radius) disk.emplace_back(dy, dx);
    }
  }

  for (const int id : ids) {
    int top = rows, left = cols, bottom = -1, right = -1;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (labels(r, c) != id) continue;
        top = std::min(top, r);
        bottom = std::max(bottom, r);
        left = std::min(left, c);
        right = std::max(right, c);
        for (const auto& [dy, dx] : disk) {
          const int y = r + dy;
          const int x = c + dx;
          if (y >= 0 && x >= 0 && y < rows && x < cols) out.mask(y, x) = 1;
        }
      }
    }
    if (margin > 0) {
      const int grow = dilation_radius + margin;
      for (int r = std::max(0, top - grow); r <= std::min(rows - 1, bottom + grow); ++r) {
        for (int c = std::max(0, left - grow); c <= std::min(cols - 1, right + grow); ++c) out.mask(r, c) = 1;
      }
    }
  }
  return out;
}

GrayImage apply_roi(const GrayImage& img, const BinaryGrid& mask) {
  if (!img.same_shape(mask)) throw ShapeError("apply_roi: image and mask shapes differ");
  GrayImage out = img;
  bool any = false;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask.pixels()[i]) {
      any = true;
    } else {
      out.pixels()[i] = 0;
    }
  }
  if (!any) log::warn("lung mask is empty; the ROI image is all zero");
  return out;
}

LungMask segment(const GrayImage& img, Segmenter& seg, int dilation_radius, int margin) {
  const GrayImage small = resize_area(img, seg.spec().height, seg.spec().width);
  LungMask m = postprocess_mask(predict_mask(small, seg, seg.threshold()), dilation_radius, margin);
  m.mask = resize_nearest(m.mask, img.rows(), img.cols());
  return m;
}

}  // namespace cxnet::lungseg
