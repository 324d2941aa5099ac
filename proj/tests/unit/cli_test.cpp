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
#include "cxnet/eval.hpp"
#include "cxnet/explain.hpp"
#include "cxnet/image_io.hpp"
#include "cxnet/npy.hpp"
#include "cxnet/pipeline.hpp"
#include "support.hpp"

namespace cxnet {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using test::run_cli;

std::string fx(const std::string& rel) { return test::fixture(rel).string(); }

json last_json_line(const std::string& out) {
  const auto end = out.find_last_not_of('\n');
  const auto start = out.rfind('\n', end);
  return json::parse(out.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1));
}

const std::vector<std::string> kTinyModel{"--manifest",   fx("manifest.csv"), "--kind",      "base-cnn", "--channels", "1",
                                          "--input-size", "32",              "--stride",    "2",        "--stack-size", "32",
                                          "--epochs",     "1",               "--limit",     "20",       "--batch-size", "4"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// One training run shared across the tests below.
struct TrainedRun {
  test::TempDir dir;
  test::CliResult result;
  fs::path run() const { return dir / "train"; }
};
const TrainedRun& trained() {
  static TrainedRun* r = [] {
    auto* t = new TrainedRun;
    t->result = run_cli(cat(cat({"train"}, kTinyModel), {"--out", (t->dir / "train").string()}));
    return t;
  }();
  return *r;
}

TEST(Cli, UsageErrorsExitTwoAndHelpExitsZero) {
  EXPECT_EQ(run_cli({}).exit_code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).exit_code, 2);
  EXPECT_EQ(run_cli({"--help"}).exit_code, 0);
  EXPECT_EQ(run_cli({"train", "--epochs", "many"}).exit_code, 2);
}

TEST(CliIngest, ValidManifestPrintsSummary) {
  const auto r = run_cli({"ingest", fx("manifest_small.csv")});
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("per label:"), std::string::npos);
  const auto j = last_json_line(r.out);
  EXPECT_EQ(j.at("total"), 3);
  EXPECT_EQ(j.at("lateral"), 1);
}

TEST(CliIngest, DuplicatesWarnButSucceed) {
  const auto r = run_cli({"ingest", fx("manifest_dup.csv")});
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.err.find("duplicate"), std::string::npos);
  EXPECT_EQ(last_json_line(r.out).at("duplicate_groups"), 1);
}

TEST(CliIngest, BadLabelExitsTwoWithRow) {
  const auto r = run_cli({"ingest", fx("manifest_bad.csv")});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("row "), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("covid"), std::string::npos) << r.err;
}

TEST(CliIngest, SplitFileMatchesLibrary) {
  test::TempDir dir;
  const auto r = run_cli({"ingest", fx("manifest.csv"), "--split-out", (dir / "split.json").string(), "--split-seed", "3",
                          "--out", (dir / "summary").string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "summary" / "summary.json"));
  const auto cli = ingest::load_split(dir / "split.json");
  const auto lib = ingest::make_split(ingest::load_manifest(fx("manifest.csv")), {0.8, 0.2}, 3);
  EXPECT_EQ(cli.train, lib.train);
  EXPECT_EQ(cli.test, lib.test);
}

TEST(CliEnhance, BeasfWritesADifferentImage) {
  test::TempDir dir;
  const auto out = (dir / "b.png").string();
  const auto r = run_cli({"enhance", fx("images/nihcxr03.png"), "--method", "beasf", "--gamma", "1.5", "-o", out});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto input = io::read_gray(fx("images/nihcxr03.png"));
  const auto written = io::read_gray(out);
  EXPECT_TRUE(written.same_shape(input));
  EXPECT_NE(written, input);
  EXPECT_EQ(written, enhance::beasf(input, {1.5}));
}

TEST(CliEnhance, ClaheMatchesLibraryByteForByte) {
  test::TempDir dir;
  const auto out = dir / "c.png";
  ASSERT_EQ(run_cli({"enhance", fx("images/cohen02.png"), "--method", "clahe", "--clip", "2.0", "--tile", "8", "-o", out.string()}).exit_code, 0);
  const auto lib = io::encode_png(enhance::clahe(io::read_gray(fx("images/cohen02.png")), {8, 8, 2.0}));
  EXPECT_EQ(io::read_file(out), lib);
}

TEST(CliEnhance, StackArchiveHoldsThreePlanes) {
  test::TempDir dir;
  const auto out = dir / "s.cxa";
  ASSERT_EQ(run_cli({"enhance", fx("images/nihcxr01.png"), "--method", "stack", "--size", "64", "-o", out.string()}).exit_code, 0);
  const auto archive = io::TensorArchive::load(out);
  const auto& t = archive.tensors.at("stack");
  EXPECT_EQ(t.shape(), (nn::Shape{3, 64, 64}));
  enhance::StackParams params;
  params.rows = params.cols = 64;
  const auto lib = enhance::build_stack(io::read_gray(fx("images/nihcxr01.png")), params).to_tensor();
  EXPECT_EQ(std::vector<double>(t.values().begin(), t.values().end()),
            std::vector<double>(lib.values().begin(), lib.values().end()));
}

TEST(CliEnhance, UnknownMethodAndMissingInput) {
  EXPECT_EQ(run_cli({"enhance", fx("images/nihcxr01.png"), "--method", "sharpen"}).exit_code, 2);
  EXPECT_EQ(run_cli({"enhance", "/nonexistent.png", "--method", "he"}).exit_code, 2);
  EXPECT_EQ(run_cli({"enhance", fx("images/nihcxr01.png"), "--method", "match"}).exit_code, 2);
}

TEST(CliSegment, TrainThenPredict) {
  test::TempDir dir;
  const auto r = run_cli({"segment", "train", "--pairs", fx("pairs.csv"), "--seg-size", "16", "--seg-depth", "1",
                          "--seg-filters", "2", "--seg-epochs", "2", "--out", (dir / "seg").string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto ckpt = dir / "seg" / "segmenter.cxa";
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(fs::exists(dir / "seg" / "seg_log.jsonl"));
  EXPECT_EQ(last_json_line(r.out).at("checkpoint_id"), models::Checkpoint::load(ckpt).id());

  const auto p = run_cli({"segment", "predict", "--checkpoint", ckpt.string(), fx("images/nihcxr06.png"), "--dilation", "1",
                          "--margin", "0", "--out", (dir / "pred").string()});
  ASSERT_EQ(p.exit_code, 0) << p.err;
  const auto mask = io::read_mask(dir / "pred" / "masks" / "nihcxr06.png");
  lungseg::Segmenter seg(models::Checkpoint::load(ckpt));
  const auto img = io::read_gray(fx("images/nihcxr06.png"));
  EXPECT_EQ(mask, lungseg::segment(img, seg, 1, 0).mask);
  EXPECT_TRUE(fs::exists(dir / "pred" / "roi" / "nihcxr06.png"));
  EXPECT_EQ(run_cli({"segment", "predict", "--checkpoint", (dir / "none.cxa").string(), fx("images/nihcxr06.png")}).exit_code, 1);
}

TEST(CliTrain, WritesCheckpointsAndRunLog) {
  const auto& t = trained();
  ASSERT_EQ(t.result.exit_code, 0) << t.result.err;
  for (const char* f : {"checkpoint_final.cxa", "checkpoint_best.cxa", "run_log.jsonl", "config.json", "split.json", "summary.json"})
    EXPECT_TRUE(fs::exists(t.run() / f)) << f;
  const auto summary = last_json_line(t.result.out);
  EXPECT_EQ(summary.at("train_samples"), 16);
  EXPECT_EQ(summary.at("test_samples"), 4);
}

TEST(CliTrain, MatchesTheLibraryRun) {
  const auto& t = trained();
  ASSERT_EQ(t.result.exit_code, 0);
  const auto cfg = pipeline::PipelineConfig::load(t.run() / "config.json");
  const auto records = ingest::select_for_task(ingest::load_manifest(cfg.manifest), Task::Binary);
  const auto split = ingest::load_split(t.run() / "split.json");
  const pipeline::Preprocessor pre(cfg.preprocess);
  const auto train_ds = pipeline::load_dataset(ingest::subset(records, split.train), pre, cfg.limit);
  const auto test_ds = pipeline::load_dataset(ingest::subset(records, split.test), pre, cfg.limit);
  models::Classifier model(cfg.model.build_spec(Task::Binary));
  const auto res = models::train(model, train_ds, &test_ds, cfg.train);
  EXPECT_EQ(res.final_checkpoint.id(), models::Checkpoint::load(t.run() / "checkpoint_final.cxa").id());
  EXPECT_EQ(res.best_checkpoint.id(), models::Checkpoint::load(t.run() / "checkpoint_best.cxa").id());
}

TEST(CliTrain, DumpedConfigReproducesTheRun) {
  const auto& t = trained();
  ASSERT_EQ(t.result.exit_code, 0);
  test::TempDir dir;
  const auto dumped = run_cli(cat(cat({"train"}, kTinyModel), {"--dump-config"}));
  ASSERT_EQ(dumped.exit_code, 0);
  std::ofstream(dir / "c.json") << dumped.out;
  const auto again = run_cli({"train", "--config", (dir / "c.json").string(), "--dump-config"});
  EXPECT_EQ(json::parse(again.out), json::parse(dumped.out));
  const auto rerun = run_cli({"train", "--config", (dir / "c.json").string(), "--out", (dir / "r").string()});
  ASSERT_EQ(rerun.exit_code, 0) << rerun.err;
  EXPECT_EQ(models::Checkpoint::load(dir / "r" / "checkpoint_final.cxa").id(),
            models::Checkpoint::load(t.run() / "checkpoint_final.cxa").id());
}

TEST(CliTrain, ConfigAndRuntimeErrors) {
  test::TempDir dir;
  std::ofstream(dir / "bad.json") << R"({"schema_version": 99})";
  EXPECT_EQ(run_cli({"train", "--config", (dir / "bad.json").string()}).exit_code, 2);
  EXPECT_EQ(run_cli({"train", "--kind", "base-cnn"}).exit_code, 2);  // no manifest
  // Pretrained weights that do not exist: runtime failure.
  const auto r = run_cli({"train", "--manifest", fx("manifest.csv"), "--weights", "chexnet", "--weights-path",
                          (dir / "missing.cxa").string(), "--stack-size", "32", "--input-size", "32", "--epochs", "1",
                          "--out", (dir / "o").string()});
  EXPECT_EQ(r.exit_code, 1) << r.err;
}

TEST(CliEval, ReportMatchesTheLibrary) {
  const auto& t = trained();
  ASSERT_EQ(t.result.exit_code, 0);
  test::TempDir dir;
  const auto ckpt_path = t.run() / "checkpoint_final.cxa";
  const auto r = run_cli({"eval", "--checkpoint", ckpt_path.string(), "--manifest", fx("manifest.csv"), "--split",
                          (t.run() / "split.json").string(), "--out", dir.path().string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* f : {"report.json", "confusion.txt", "roc.csv", "predictions.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto report = json::parse(test::read_text(dir / "report.json"));

  const auto ckpt = models::Checkpoint::load(ckpt_path);
  const auto records = ingest::select_for_task(ingest::load_manifest(fx("manifest.csv")), Task::Binary);
  const auto split = ingest::load_split(t.run() / "split.json");
  const pipeline::Preprocessor pre(pipeline::PreprocessConfig::from_json(ckpt.preprocess));
  const auto data = pipeline::load_dataset(ingest::subset(records, split.test), pre);
  auto model = models::restore(ckpt);
  std::vector<Label> pred;
  for (const auto& p : model.predict(data.stacks)) pred.push_back(p.predicted);
  const auto m = eval::confusion(pred, data.labels, {Label::Normal, Label::Cp});
  EXPECT_EQ(report.at("confusion_matrix").get<std::vector<std::vector<long>>>(), m.counts);
  EXPECT_EQ(report.at("samples"), data.size());
}

TEST(CliExplain, GradcamWritesOverlayAndGrid) {
  const auto& t = trained();
  ASSERT_EQ(t.result.exit_code, 0);
  test::TempDir dir;
  const auto ckpt_path = t.run() / "checkpoint_final.cxa";
  const auto image = fx("images/cohen03.png");
  const auto r = run_cli({"explain", "--method", "gradcam", "--target", "CP", "--checkpoint", ckpt_path.string(), image,
                          "--out", dir.path().string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  ASSERT_TRUE(fs::exists(dir / "cohen03_gradcam.png"));
  ASSERT_TRUE(fs::exists(dir / "cohen03_gradcam.npy"));
  EXPECT_TRUE(fs::exists(dir / "explain.json"));

  const auto ckpt = models::Checkpoint::load(ckpt_path);
  const pipeline::Preprocessor pre(pipeline::PreprocessConfig::from_json(ckpt.preprocess));
  auto model = models::restore(ckpt);
  const auto img = io::read_gray(image);
  const auto stack = pre(img);
  const auto hm = explain::grad_cam(model, stack, Label::Cp);
  const auto grid = io::read_npy(dir / "cohen03_gradcam.npy");
  EXPECT_EQ(std::vector<double>(grid.values().begin(), grid.values().end()), hm.grid.storage());
  const auto overlay = explain::render_overlay(resize_area(img, stack.rows(), stack.cols()), hm.grid, explain::Colormap::Jet, 0.4);
  EXPECT_EQ(io::read_file(dir / "cohen03_gradcam.png"), io::encode_png(overlay));
}

TEST(CliExplain, LimeWritesSegmentsAndWeights) {
  const auto& t = trained();
  ASSERT_EQ(t.result.exit_code, 0);
  test::TempDir dir;
  const auto r = run_cli({"explain", "--method", "lime", "--segments", "6", "--samples", "60", "--checkpoint",
                          (t.run() / "checkpoint_final.cxa").string(), fx("images/cohen03.png"), "--out", dir.path().string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "cohen03_lime.png"));
  EXPECT_TRUE(fs::exists(dir / "cohen03_lime_segments.npy"));
  const auto w = json::parse(test::read_text(dir / "cohen03_lime.json"));
  EXPECT_EQ(w.at("weights").size(), w.at("n_segments").get<std::size_t>());
  EXPECT_EQ(run_cli({"explain", "--method", "lime", "--samples", "5", "--checkpoint", (t.run() / "checkpoint_final.cxa").string(),
                     fx("images/cohen03.png"), "--out", (dir / "x").string()}).exit_code, 2);
}

TEST(CliLrFind, WritesTraceAndFiniteRate) {
  test::TempDir dir;
  const auto r = run_cli(cat(cat({"lrfind"}, kTinyModel), {"--lr-min", "1e-5", "--lr-max", "1", "--iterations", "30",
                                                           "--out", dir.path().string()}));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto j = json::parse(test::read_text(dir / "lrfind.json"));
  EXPECT_TRUE(std::isfinite(j.at("learning_rate").get<double>()));
  EXPECT_GT(j.at("learning_rate").get<double>(), 0.0);
  EXPECT_EQ(test::read_text(dir / "lr_trace.csv").rfind("iteration,lr,loss,smoothed\n", 0), 0u);
  EXPECT_EQ(run_cli(cat(cat({"lrfind"}, kTinyModel), {"--lr-min", "1", "--lr-max", "1"})).exit_code, 2);
}

}  // namespace
}  // namespace cxnet
