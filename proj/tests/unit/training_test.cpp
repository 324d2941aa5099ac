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

#include <fstream>

#include "cxnet/archive.hpp"
#include "cxnet/training.hpp"
#include "support.hpp"

namespace cxnet::models {
namespace {

ModelSpec small_cnn() { return build_base_cnn(32, 32, 1, 2); }

ModelSpec tiny_backbone(OutputHead head = OutputHead::Sigmoid1) {
  auto s = build_backbone_model({8, 0.2, head}, BackboneWeights::None, 32, 32);
  s.backbone = {3, 4, {2, 2}, 8, 2, 0.5};
  return s;
}

TrainConfig quick(int epochs, int batch = 4, double lr = 3e-3) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = batch;
  c.learning_rate = lr;
  c.seed = 5;
  return c;
}

TEST(Train, PlantedSetIsMemorizedByBaseCnn) {
  const auto data = test::planted_square_dataset(20, 32, 8, 1);
  Classifier model(small_cnn());
  const auto result = train(model, data, nullptr, quick(50));
  EXPECT_EQ(evaluate(model, data).accuracy, 1.0);
  EXPECT_EQ(result.log.size(), 50u);
  EXPECT_LT(result.log.back().train_loss, result.log.front().train_loss);
}

TEST(Train, PlantedSetIsMemorizedByBackboneHead) {
  const auto data = test::planted_square_dataset(20, 32, 8, 2);
  Classifier model(tiny_backbone());
  train(model, data, nullptr, quick(50));
  EXPECT_EQ(evaluate(model, data).accuracy, 1.0);
}

TEST(Train, RunLogRecordsConfigVerbatim) {
  test::TempDir dir;
  const auto data = test::planted_square_dataset(8, 32, 8, 3);
  Classifier model(small_cnn());
  TrainConfig cfg = quick(2, 16);
  TrainHooks hooks;
  hooks.run_log = dir / "run.jsonl";
  train(model, data, &data, cfg, hooks);
  std::ifstream in(hooks.run_log);
  std::string line;
  std::vector<nlohmann::json> records;
  while (std::getline(in, line)) records.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].at("train_config").at("batch_size"), 16);
  EXPECT_EQ(TrainConfig::from_json(records[0].at("train_config")).to_json(), cfg.to_json());
  EXPECT_EQ(records[0].at("type"), "config");
  EXPECT_EQ(records[1].at("epoch"), 0);
  EXPECT_TRUE(records[2].contains("val_accuracy"));
}

TEST(Train, FixedSeedReproducesBitForBit) {
  const auto data = test::planted_square_dataset(12, 32, 8, 4);
  TrainConfig cfg = quick(2);
  cfg.augmentation = {0.1, 0.1, true};
  Classifier a(tiny_backbone()), b(tiny_backbone());
  const auto ra = train(a, data, &data, cfg);
  const auto rb = train(b, data, &data, cfg);
  EXPECT_EQ(ra.log[0].train_loss, rb.log[0].train_loss);
  EXPECT_EQ(ra.final_checkpoint.id(), rb.final_checkpoint.id());
  cfg.seed = 6;
  Classifier c(tiny_backbone());
  EXPECT_NE(train(c, data, &data, cfg).log[0].train_loss, ra.log[0].train_loss);
}

TEST(Train, BestCheckpointFollowsValidationAccuracy) {
  const auto data = test::planted_square_dataset(12, 32, 8, 5);
  Classifier model(small_cnn());
  std::vector<EpochRecord> seen;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) { seen.push_back(r); };
  const auto result = train(model, data, &data, quick(6), hooks);
  ASSERT_EQ(seen.size(), 6u);
  int best = 0;
  for (int e = 1; e < 6; ++e) {
    const auto& r = seen[static_cast<std::size_t>(e)];
    const auto& b = seen[static_cast<std::size_t>(best)];
    if (*r.val_accuracy > *b.val_accuracy || (*r.val_accuracy == *b.val_accuracy && *r.val_loss < *b.val_loss)) best = e;
  }
  EXPECT_EQ(result.best_epoch, best);
  Classifier restored = restore(result.best_checkpoint);
  EXPECT_NEAR(evaluate(restored, data, 0.1).loss, *seen[static_cast<std::size_t>(best)].val_loss, 1e-9);
  EXPECT_EQ(restore(result.final_checkpoint).network().params().state(), model.network().params().state());
}

TEST(Train, ClassWeightsComeFromTrainingLabels) {
  auto data = test::planted_square_dataset(10, 32, 8, 6);
  Rng rng(1);
  data.add("extra", test::planted_square_stack(rng, 32, 8, false), Label::Normal);
  data.add("extra2", test::planted_square_stack(rng, 32, 8, false), Label::Normal);
  Classifier model(small_cnn());
  const auto result = train(model, data, nullptr, quick(1));
  EXPECT_NEAR(result.class_weights.weight(0), 12.0 / (2 * 7), 1e-12);
  EXPECT_NEAR(result.class_weights.weight(1), 12.0 / (2 * 5), 1e-12);
}

TEST(Train, InvalidConfigsAreRejected) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.label_smoothing = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  const auto data = test::planted_square_dataset(4, 32, 8, 7);
  Classifier model(tiny_backbone(OutputHead::Softmax3));
  EXPECT_THROW(train(model, data.select(Task::Binary), nullptr, quick(1)), ConfigError);  // no CAP samples
}

// Noise images with random labels: only capacity can fit them. Features of a
// frozen backbone cannot be separated by the small head, while fine-tuning
// every layer can.
TEST(Train, FrozenBackbonePlateausWhileFullFineTuningMemorizes) {
  test::TempDir dir;
  Rng rng(21);
  Dataset data;
  for (int i = 0; i < 50; ++i) {
    enhance::ChannelStack s;
    for (auto& p : s.planes) {
      p = Plane(32, 32);
      for (auto& v : p.pixels()) v = rng.uniform();
    }
    data.add("n" + std::to_string(i), s, i < 25 ? Label::Normal : Label::Cp);
  }
  rng.shuffle(data.labels.begin(), data.labels.end());

  io::TensorArchive pretrained;
  for (const auto& [name, t] : Classifier(tiny_backbone()).network().params().state())
    if (nn::DenseNet::is_backbone_param(name)) pretrained.tensors[name] = t;
  pretrained.save(dir / "backbone.cxa");

  auto accuracy = [&](bool train_backbone) {
    auto spec = tiny_backbone();
    spec.weights = BackboneWeights::Imagenet;
    spec.weights_path = (dir / "backbone.cxa").string();
    spec.train_backbone = train_backbone;
    Classifier model(spec);
    model.load_pretrained();
    TrainConfig cfg = quick(60, 10, 1e-2);
    cfg.label_smoothing = 0.0;
    train(model, data, nullptr, cfg);
    return evaluate(model, data).accuracy;
  };
  const double frozen = accuracy(false);
  const double full = accuracy(true);
  EXPECT_EQ(full, 1.0);
  EXPECT_LT(frozen, 0.9);
}

TEST(Dataset, SelectAndTargets) {
  Dataset d;
  Rng rng(1);
  for (Label l : {Label::Normal, Label::Cap, Label::Cp, Label::Cp}) d.add("x", test::planted_square_stack(rng, 16, 2, false), l);
  EXPECT_EQ(d.select(Task::Level2).size(), 3u);
  EXPECT_EQ(d.targets(Task::Level1), (std::vector<int>{0, 1, 1, 1}));
  EXPECT_EQ(d.targets(Task::Multiclass), (std::vector<int>{0, 1, 2, 2}));
  EXPECT_THROW(d.targets(Task::Binary), ConfigError);
}

TEST(Hierarchical, TwoLevelsTrainOnTheirSubsets) {
  Rng rng(8);
  Dataset d;
  for (int i = 0; i < 12; ++i) {
    const Label l = i % 3 == 0 ? Label::Normal : (i % 3 == 1 ? Label::Cap : Label::Cp);
    auto s = test::planted_square_stack(rng, 32, 8, l != Label::Normal);
    if (l == Label::Cap)
      for (auto& p : s.planes) p(31, 31) = 1.0;
    d.add("h" + std::to_string(i), s, l);
  }
  const auto result = train_hierarchical(tiny_backbone(), d, &d, quick(2), quick(3));
  EXPECT_EQ(result.level1.log.size(), 2u);
  EXPECT_EQ(result.level2.log.size(), 3u);
  EXPECT_EQ(result.level1.final_checkpoint.spec.task, Task::Level1);
  EXPECT_EQ(result.level2.final_checkpoint.spec.task, Task::Level2);
  EXPECT_EQ(result.level2.class_weights.counts, (std::vector<std::size_t>{4, 4}));
  EXPECT_EQ(result.level1.class_weights.counts, (std::vector<std::size_t>{4, 8}));
}

}  // namespace
}  // namespace cxnet::models
