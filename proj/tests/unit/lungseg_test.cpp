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

#include <gtest/gtest.h>

#include <set>

#include "cxnet/image_io.hpp"
#include "cxnet/log.hpp"
#include "cxnet/lungseg.hpp"
#include "support.hpp"

namespace cxnet::lungseg {
namespace {

std::vector<SegPair> fixture_pairs(int rows, int cols) {
  std::vector<SegPair> pairs;
  for (const char* name : {"nihcxr01", "nihcxr02", "nihcxr03", "nihcxr04", "nihcxr05", "cohen01", "cohen02", "cohen03",
                           "cohen04", "cohen05"}) {
    const auto img = io::read_gray(test::fixture(std::string("images/") + name + ".png"));
    const auto mask = io::read_mask(test::fixture(std::string("masks/") + name + ".png"));
    pairs.push_back({resize_area(img, rows, cols), resize_nearest(mask, rows, cols)});
  }
  return pairs;
}

SegTrainConfig memorize_config(int epochs) {
  SegTrainConfig c;
  c.epochs = epochs;
  c.batch_size = 2;
  c.learning_rate = 1e-2;
  c.validation_fraction = 0;
  c.seed = 3;
  return c;
}

// One training run shared by the memorization checks.
const SegTrainResult& memorized() {
  static const SegTrainResult r = train_segmenter(fixture_pairs(32, 32), build_unet(32, 32, 2, 8, 1), memorize_config(50));
  return r;
}

TEST(Segmenter, MemorizesTenPairs) {
  const auto& r = memorized();
  double best = 0;
  for (const auto& e : r.log) best = std::max(best, e.train_dice);
  EXPECT_GT(best, 0.95);
  Segmenter seg(r.best);
  const auto pairs = fixture_pairs(32, 32);
  for (const auto& p : pairs) EXPECT_GT(dice(predict_mask(p.image, seg, 0.5).mask, p.mask), 0.95);
}

TEST(Segmenter, ReturnedCheckpointHoldsTheBestValidationDice) {
  const auto& r = memorized();
  double best = -1;
  for (const auto& e : r.log) best = std::max(best, e.val_dice);
  EXPECT_EQ(r.log[static_cast<std::size_t>(r.best_epoch)].val_dice, best);
  EXPECT_EQ(r.best.log.size(), r.log.size());
}

TEST(Segmenter, WorseFinalEpochDoesNotReplaceTheBest) {
  auto pairs = fixture_pairs(16, 16);
  pairs.resize(4);
  auto cfg = memorize_config(20);
  const auto spec = build_unet(16, 16, 1, 4, 2);
  std::map<std::string, nn::Tensor> at_epoch18;
  const auto r = train_segmenter(pairs, spec, cfg, [&](int epoch, nn::Network& net) {
    if (epoch == 18) at_epoch18 = net.params().state();
    if (epoch == 19) {
      // Every pixel decided as background.
      auto state = net.params().state();
      for (auto& [name, t] : state) t.fill(0.0);
      state.at("seg_out/bias").fill(-50.0);
      net.params().load_state(state);
    }
  });
  EXPECT_EQ(r.log[19].val_dice, 0.0);
  EXPECT_GT(r.log[static_cast<std::size_t>(r.best_epoch)].val_dice, 0.5);
  EXPECT_NE(r.best_epoch, 19);
  if (r.best_epoch == 18) {
    EXPECT_EQ(r.best.weights, at_epoch18);
  }
}

TEST(Segmenter, IdenticalPairsReachFullValidationDice) {
  auto pairs = fixture_pairs(16, 16);
  pairs = {pairs[0], pairs[0]};
  auto cfg = memorize_config(120);
  cfg.validation_fraction = 0.5;
  const auto r = train_segmenter(pairs, build_unet(16, 16, 1, 4, 4), cfg);
  EXPECT_EQ(r.validation_indices.size(), 1u);
  EXPECT_NEAR(r.log[static_cast<std::size_t>(r.best_epoch)].val_dice, 1.0, 0.02);
}

TEST(Segmenter, InvalidInputsAreRejected) {
  auto pairs = fixture_pairs(16, 16);
  const auto spec = build_unet(16, 16, 1, 2);
  EXPECT_THROW(train_segmenter({pairs[0]}, spec, memorize_config(1)), ConfigError);
  EXPECT_THROW(train_segmenter({}, spec, memorize_config(1)), ConfigError);
  auto bad = pairs;
  bad[1].mask(0, 0) = 255;
  EXPECT_THROW(train_segmenter(bad, spec, memorize_config(1)), ConfigError);
  EXPECT_THROW(train_segmenter(pairs, spec, memorize_config(0)), ConfigError);
  EXPECT_THROW(build_unet(18, 16, 2), ConfigError);
  EXPECT_THROW(build_unet(16, 16, 0), ConfigError);
}

TEST(SegTrainConfig, JsonRoundTripAndPolicy) {
  SegTrainConfig c;
  c.loss = SegLoss::Dice;
  c.epochs = 7;
  const auto j = c.to_json();
  EXPECT_EQ(j.at("checkpoint_policy"), "keep-best-by-validation-dice");
  EXPECT_EQ(SegTrainConfig::from_json(j).to_json(), j);
  EXPECT_THROW(SegTrainConfig::from_json({{"loss", "focal"}}), ConfigError);
  EXPECT_THROW(SegTrainConfig::from_json({{"epochs", 0}}), ConfigError);
}

models::Checkpoint constant_unet(double bias) {
  models::Checkpoint ck;
  ck.spec = build_unet(16, 16, 1, 2);
  auto net = models::build_network(ck.spec);
  ck.weights = net->params().state();
  for (auto& [name, t] : ck.weights) t.fill(0.0);
  ck.weights.at("seg_out/bias").fill(bias);
  return ck;
}

TEST(PredictMask, ZeroWeightsFollowTheBiasSign) {
  Rng rng(1);
  const auto img = test::random_image(rng, 16, 16);
  Segmenter pos(constant_unet(1.0)), neg(constant_unet(-1.0));
  const auto full = predict_mask(img, pos, 0.5);
  const auto empty = predict_mask(img, neg, 0.5);
  EXPECT_EQ(full.area(), 256u);
  EXPECT_EQ(full.components, 1);
  EXPECT_EQ(empty.area(), 0u);
  EXPECT_TRUE(empty.flagged_empty);
  EXPECT_EQ(predict_mask(img, pos, 0.5).mask, full.mask);
  EXPECT_EQ(full.source_checkpoint, pos.id());
}

TEST(PredictMask, HigherThresholdGivesSubset) {
  // Untrained network: probabilities spread around 0.5, enough to separate thresholds.
  models::Checkpoint ck;
  ck.spec = build_unet(16, 16, 1, 4, 9);
  ck.weights = models::build_network(ck.spec)->params().state();
  Segmenter seg(ck);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto img = test::random_image(rng, 16, 16);
    const auto lo = predict_mask(img, seg, 0.5);
    const auto hi = predict_mask(img, seg, 0.9);
    for (std::size_t i = 0; i < lo.mask.size(); ++i) EXPECT_LE(hi.mask.pixels()[i], lo.mask.pixels()[i]);
  }
}

TEST(PredictMask, RejectsSizeMismatchAndBadThreshold) {
  Segmenter seg(constant_unet(1.0));
  Rng rng(3);
  EXPECT_THROW(predict_mask(test::random_image(rng, 32, 32), seg, 0.5), ShapeError);
  EXPECT_THROW(predict_mask(test::random_image(rng, 16, 16), seg, 1.0), ConfigError);
  EXPECT_THROW(predict_mask(test::random_image(rng, 16, 16), seg, 0.0), ConfigError);
}

LungMask from_grid(BinaryGrid g) {
  LungMask m;
  m.mask = std::move(g);
  return m;
}

TEST(Postprocess, CenterPixelGrowsIntoDiscreteDisk) {
  BinaryGrid g(15, 15);
  g(7, 7) = 1;
  for (int radius : {0, 1, 2, 3, 5}) {
    std::size_t expected = 0;
    for (int y = -radius; y <= radius; ++y)
      for (int x = -radius; x <= radius; ++x) expected += x * x + y * y <= radius * radius ? 1 : 0;
    EXPECT_EQ(postprocess_mask(from_grid(g), radius, 0).area(), expected) << radius;
  }
  EXPECT_EQ(postprocess_mask(from_grid(g), 3, 0).area(), 29u);
}

BinaryGrid two_lungs_and_blob() {
  BinaryGrid g(40, 40);
  for (int r = 5; r < 30; ++r) {
    for (int c = 4; c < 14; ++c) g(r, c) = 1;
    for (int c = 24; c < 36; ++c) g(r, c) = 1;
  }
  g(36, 19) = 1;
  g(36, 20) = 1;
  return g;
}

TEST(Postprocess, SpuriousBlobIsRemovedAndLungsKept) {
  const auto g = two_lungs_and_blob();
  const auto out = postprocess_mask(from_grid(g), 0, 0);
  EXPECT_EQ(out.components, 3);
  EXPECT_EQ(out.mask(36, 19), 0);
  EXPECT_EQ(out.area(), 25u * 10 + 25u * 12);
  for (int r = 5; r < 30; ++r) EXPECT_EQ(out.mask(r, 4) + out.mask(r, 35), 2);
}

TEST(Postprocess, MarginFillsGrownBoundingBoxes) {
  BinaryGrid g(30, 30);
  // An L shape: its bounding box is 6x6 but only 11 pixels are set.
  for (int i = 10; i < 16; ++i) {
    g(i, 10) = 1;
    g(15, i) = 1;
  }
  const auto out = postprocess_mask(from_grid(g), 1, 2);
  EXPECT_EQ(out.area(), 12u * 12u);  // box 10..15 grown by radius + margin = 3
  EXPECT_EQ(out.mask(7, 7), 1);
  EXPECT_EQ(out.mask(6, 6), 0);
}

TEST(Postprocess, EmptyMaskIsFlagged) {
  const auto out = postprocess_mask(from_grid(BinaryGrid(8, 8)), 3, 4);
  EXPECT_TRUE(out.flagged_empty);
  EXPECT_EQ(out.area(), 0u);
  EXPECT_THROW(postprocess_mask(from_grid(BinaryGrid(8, 8)), -1, 0), ConfigError);
}

BinaryGrid random_blobs(Rng& rng, int size) {
  BinaryGrid g(size, size);
  const int blobs = 1 + static_cast<int>(rng.index(5));
  for (int b = 0; b < blobs; ++b) {
    const int r0 = static_cast<int>(rng.index(static_cast<std::size_t>(size)));
    const int c0 = static_cast<int>(rng.index(static_cast<std::size_t>(size)));
    const int h = 1 + static_cast<int>(rng.index(8)), w = 1 + static_cast<int>(rng.index(8));
    for (int r = r0; r < std::min(size, r0 + h); ++r)
      for (int c = c0; c < std::min(size, c0 + w); ++c) g(r, c) = 1;
  }
  for (int k = 0; k < 10; ++k) g(static_cast<int>(rng.index(static_cast<std::size_t>(size))), static_cast<int>(rng.index(static_cast<std::size_t>(size)))) = 1;
  return g;
}

TEST(PostprocessProperty, DilationMonotoneAndKeptComponentsIncluded) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_blobs(rng, 32);
    const auto base = postprocess_mask(from_grid(g), 0, 0);
    // At most two components survive, and they are a subset of the input.
    Grid<int> labels;
    EXPECT_LE(label_components(base.mask, labels), 2);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE(base.mask.pixels()[i], g.pixels()[i]);
    const int r1 = static_cast<int>(rng.index(4));
    const int r2 = r1 + 1 + static_cast<int>(rng.index(3));
    const int margin = static_cast<int>(rng.index(4));
    const auto m1 = postprocess_mask(from_grid(g), r1, margin);
    const auto m2 = postprocess_mask(from_grid(g), r2, margin);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_LE(m1.mask.pixels()[i], m2.mask.pixels()[i]);
      EXPECT_LE(base.mask.pixels()[i], m1.mask.pixels()[i]);
    }
    EXPECT_GE(m1.area(), base.area());
  }
}

TEST(ApplyRoi, FullEmptyAndHalfMasks) {
  Rng rng(4);
  const auto img = test::random_image(rng, 10, 12, 1, 255);
  EXPECT_EQ(apply_roi(img, BinaryGrid(10, 12, 1)), img);

  std::vector<std::string> warnings;
  log::set_sink([&](log::Level level, const std::string& msg) {
    if (level == log::Level::Warning) warnings.push_back(msg);
  });
  const auto zero = apply_roi(img, BinaryGrid(10, 12));
  log::set_sink({});
  EXPECT_EQ(zero, GrayImage(10, 12, 0));
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("empty"), std::string::npos);

  BinaryGrid half(10, 12);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 6; ++c) half(r, c) = 1;
  const auto out = apply_roi(img, half);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 12; ++c) EXPECT_EQ(out(r, c), c < 6 ? img(r, c) : 0);
  EXPECT_THROW(apply_roi(img, BinaryGrid(10, 11)), ShapeError);
}

TEST(ApplyRoiProperty, Idempotent) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto img = test::random_image(rng, 32, 32);
    auto m = random_blobs(rng, 32);
    const auto once = apply_roi(img, m);
    EXPECT_EQ(apply_roi(once, m), once);
  }
}

TEST(Segment, MapsTheMaskBackToTheImageSize) {
  Segmenter seg(constant_unet(1.0));
  Rng rng(6);
  const auto m = segment(test::random_image(rng, 48, 40), seg, 2, 1);
  EXPECT_EQ(m.rows(), 48);
  EXPECT_EQ(m.cols(), 40);
  EXPECT_EQ(m.area(), 48u * 40u);
}

TEST(Helpers, DiceAndComponents) {
  BinaryGrid a(4, 4), b(4, 4);
  EXPECT_EQ(dice(a, b), 1.0);
  a(0, 0) = 1;
  a(0, 1) = 1;
  b(0, 1) = 1;
  EXPECT_DOUBLE_EQ(dice(a, b), 2.0 / 3.0);
  a(3, 3) = 1;
  a(2, 2) = 1;  // diagonal neighbour joins (3, 3)
  Grid<int> labels;
  EXPECT_EQ(label_components(a, labels), 2);
  EXPECT_EQ(labels(2, 2), labels(3, 3));
  EXPECT_THROW(dice(a, BinaryGrid(3, 4)), ShapeError);
}

}  // namespace
}  // namespace cxnet::lungseg
