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

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "cxnet/eval.hpp"
#include "cxnet/explain.hpp"
#include "cxnet/image_io.hpp"
#include "cxnet/lr_finder.hpp"
#include "cxnet/models.hpp"
#include "cxnet/npy.hpp"
#include "cxnet/training.hpp"

namespace cxnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool dump_if_requested(const PipelineFlags& flags, const pipeline::PipelineConfig& cfg) {
  if (!flags.dump_config) return false;
  std::cout << cfg.to_json().dump(2) << std::endl;
  return true;
}

void stamp(models::Checkpoint& ckpt, const pipeline::Preprocessor& pre) {
  ckpt.preprocess = pre.config().to_json();
  ckpt.pipeline_fingerprint = pre.fingerprint();
}

/// Composite predictions of a level1/level2 pair.
std::vector<models::Prediction> hierarchical_predictions(models::Classifier& level1, models::Classifier& level2,
                                                         const models::Dataset& data, double threshold) {
  const auto p1 = level1.predict(data.stacks);
  const auto p2 = level2.predict(data.stacks);
  std::vector<models::Prediction> out;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    out.push_back(models::compose_hierarchical(p1[i].p[0], p2[i].p[0], threshold));
  }
  return out;
}

double accuracy_of(const std::vector<models::Prediction>& preds, const std::vector<Label>& labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i].predicted == labels[i];
  return preds.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  PipelineFlags flags;
};

/// One training run into `dir`; returns the summary, including test accuracy
/// of the final weights.
json train_once(const pipeline::PipelineConfig& cfg, const pipeline::Preprocessor& pre, const models::Dataset& train_ds,
                const models::Dataset& test_ds, const fs::path& dir) {
  const models::Dataset* val = test_ds.size() ? &test_ds : nullptr;
  models::TrainHooks hooks;
  hooks.run_log = dir / "run_log.jsonl";
  json summary = {{"output", dir.string()}, {"train_samples", train_ds.size()}, {"test_samples", test_ds.size()}};

  if (cfg.model.hierarchical()) {
    models::TrainConfig level2_cfg = cfg.train;
    level2_cfg.epochs = cfg.level2_epochs;
    auto res = models::train_hierarchical(cfg.model.build_spec(Task::Level1), train_ds, val, cfg.train, level2_cfg, hooks);
    for (auto* level : {&res.level1, &res.level2}) {
      stamp(level->final_checkpoint, pre);
      stamp(level->best_checkpoint, pre);
    }
    res.level1.final_checkpoint.save(dir / "level1_final.cxa");
    res.level1.best_checkpoint.save(dir / "level1_best.cxa");
    res.level2.final_checkpoint.save(dir / "level2_final.cxa");
    res.level2.best_checkpoint.save(dir / "level2_best.cxa");
    summary["task"] = "hierarchical";
    summary["checkpoints"] = {{"level1", res.level1.final_checkpoint.id()}, {"level2", res.level2.final_checkpoint.id()}};
    summary["best_epoch"] = {res.level1.best_epoch, res.level2.best_epoch};
    if (val) {
      auto l1 = models::restore(res.level1.final_checkpoint);
      auto l2 = models::restore(res.level2.final_checkpoint);
      summary["test_accuracy"] = accuracy_of(hierarchical_predictions(l1, l2, test_ds, 0.5), test_ds.labels);
    }
    return summary;
  }

  const Task task = cfg.model.primary_task();
  models::Classifier model(cfg.model.build_spec(task));
  if (model.spec().weights != models::BackboneWeights::None) {
    const auto report = model.load_pretrained();
    summary["pretrained"] = {{"loaded", report.loaded}, {"sha256", model.spec().weights_sha256}};
  }
  auto res = models::train(model, train_ds, val, cfg.train, hooks);
  stamp(res.final_checkpoint, pre);
  stamp(res.best_checkpoint, pre);
  res.final_checkpoint.save(dir / "checkpoint_final.cxa");
  res.best_checkpoint.save(dir / "checkpoint_best.cxa");
  summary["task"] = task_name(task);
  summary["checkpoints"] = {{"final", res.final_checkpoint.id()}, {"best", res.best_checkpoint.id()}};
  summary["best_epoch"] = res.best_epoch;
  summary["final_train_loss"] = res.log.back().train_loss;
  if (val) summary["test_accuracy"] = models::evaluate(model, test_ds, 0.0, cfg.train.batch_size).accuracy;
  return summary;
}

int run_train(const TrainArgs& a) {
  const auto cfg = resolve_config(a.flags);
  if (dump_if_requested(a.flags, cfg)) return kOk;
  cfg.train.validate();
  const auto parts = load_partitions(cfg, selection_task(cfg.model));
  const pipeline::Preprocessor pre(cfg.preprocess);
  const auto train_ds = pipeline::load_dataset(parts.train, pre, cfg.limit);
  const auto test_ds = pipeline::load_dataset(parts.test, pre, cfg.limit);

  const fs::path dir = make_run_dir(cfg, a.flags, "train");
  write_json(dir / "config.json", cfg.to_json());
  ingest::save_split(dir / "split.json", parts.split);

  if (cfg.runs == 1) {
    json summary = train_once(cfg, pre, train_ds, test_ds, dir);
    summary["pipeline_fingerprint"] = pre.fingerprint();
    write_json(dir / "summary.json", summary);
    print_summary(summary);
    return kOk;
  }

  if (test_ds.size() == 0) throw ConfigError("repeated runs need a non-empty test partition");
  const auto seeds = eval::run_seeds(cfg.train.seed, cfg.runs);
  int index = 0;
  json runs = json::array();
  auto one = [&](std::uint64_t seed) {
    pipeline::PipelineConfig c = cfg;
    c.train.seed = seed;
    c.model.seed = seed;
    const fs::path run_dir = dir / ("run_" + std::to_string(index++));
    fs::create_directories(run_dir);
    json s = train_once(c, pre, train_ds, test_ds, run_dir);
    s["seed"] = seed;
    runs.push_back(s);
    return s.at("test_accuracy").get<double>();
  };
  json summary;
  try {
    const auto rs = eval::repeated_runs(one, seeds);
    summary = {{"runs", runs}, {"summary", rs.to_json()}};
  } catch (const eval::RepeatedRunsError& e) {
    write_json(dir / "runs.json", {{"runs", runs}, {"summary", e.partial().to_json()}, {"error", e.what()}});
    throw;
  }
  summary["pipeline_fingerprint"] = pre.fingerprint();
  write_json(dir / "runs.json", summary);
  print_summary(summary["summary"]);
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  PipelineFlags flags;
  std::string checkpoint;
  std::string level2;
  std::string partition = "test";
};

int run_eval(const EvalArgs& a) {
  const auto cfg = resolve_config(a.flags);
  if (dump_if_requested(a.flags, cfg)) return kOk;
  const auto ckpt = models::Checkpoint::load(a.checkpoint);
  const bool hierarchical = !a.level2.empty();
  const Task task = ckpt.spec.task;
  if (hierarchical && task != Task::Level1) throw ConfigError("--level2 needs a level-1 checkpoint as --checkpoint");
  if (!hierarchical && (task == Task::Level1 || task == Task::Level2)) {
    throw ConfigError("hierarchy checkpoints are evaluated as --checkpoint <level1> --level2 <level2>");
  }

  const Task selection = hierarchical ? Task::Multiclass : task;
  const auto parts = load_partitions(cfg, selection);
  std::vector<ingest::ImageRecord> records;
  if (a.partition == "test" || a.partition == "all") records.insert(records.end(), parts.test.begin(), parts.test.end());
  if (a.partition == "train" || a.partition == "all") records.insert(records.end(), parts.train.begin(), parts.train.end());
  const pipeline::Preprocessor pre(checkpoint_preprocess(ckpt, cfg.preprocess));
  const auto data = pipeline::load_dataset(records, pre, cfg.limit);
  if (data.size() == 0) throw ConfigError("no samples to evaluate");

  std::vector<models::Prediction> preds;
  std::vector<Label> classes;
  if (hierarchical) {
    auto l1 = models::restore(ckpt);
    auto l2 = models::restore(models::Checkpoint::load(a.level2));
    if (l2.spec().task != Task::Level2) throw ConfigError("--level2 checkpoint is not a level-2 model");
    preds = hierarchical_predictions(l1, l2, data, ckpt.threshold);
    classes = {Label::Normal, Label::Cap, Label::Cp};
  } else {
    auto model = models::restore(ckpt);
    preds = model.predict(data.stacks);
    classes = task == Task::Multiclass ? std::vector<Label>{Label::Normal, Label::Cap, Label::Cp}
                                       : std::vector<Label>{Label::Normal, Label::Cp};
  }
  std::vector<Label> predicted;
  std::vector<std::vector<double>> probs;
  for (const auto& p : preds) {
    predicted.push_back(p.predicted);
    probs.push_back(p.p);
  }
  const auto report = eval::make_report(predicted, data.labels, probs, classes);

  const fs::path dir = make_run_dir(cfg, a.flags, "eval");
  json report_json = report.to_json();
  report_json["checkpoint"] = ckpt.id();
  report_json["partition"] = a.partition;
  report_json["samples"] = data.size();
  write_json(dir / "report.json", report_json);
  write_text(dir / "confusion.txt", eval::format_confusion(report.matrix));
  for (const auto& [label, roc] : report.roc) {
    const std::string name = report.roc.size() == 1 ? "roc.csv" : "roc_" + std::string(label_name(label)) + ".csv";
    write_text(dir / name, eval::roc_csv(roc));
  }
  std::ostringstream csv;
  csv.precision(17);
  csv << "id,actual,predicted";
  for (std::size_t k = 0; k < probs.front().size(); ++k) csv << ",p" << k;
  csv << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    csv << data.ids[i] << ',' << label_name(data.labels[i]) << ',' << label_name(predicted[i]);
    for (double v : probs[i]) csv << ',' << v;
    csv << "\n";
  }
  write_text(dir / "predictions.csv", csv.str());

  json summary = {{"output", dir.string()}, {"accuracy", report.scores.accuracy}, {"samples", data.size()}};
  for (const auto& c : report.scores.per_class) summary["f1"][std::string(label_name(c.label))] = c.f1;
  print_summary(summary);
  return kOk;
}

// ---------------------------------------------------------------------------
// explain

struct ExplainArgs {
  PipelineFlags flags;
  std::string checkpoint;
  std::vector<std::string> images;
};

int run_explain(const ExplainArgs& a) {
  const auto cfg = resolve_config(a.flags);
  if (dump_if_requested(a.flags, cfg)) return kOk;
  if (a.images.empty()) throw ConfigError("explain needs at least one image");
  const auto& e = cfg.explain;
  const Label target = *parse_label(e.target);
  const auto cmap = *explain::parse_colormap(e.colormap);

  const auto ckpt = models::Checkpoint::load(a.checkpoint);
  const pipeline::Preprocessor pre(checkpoint_preprocess(ckpt, cfg.preprocess));
  auto model = models::restore(ckpt);
  const fs::path dir = make_run_dir(cfg, a.flags, "explain");

  json outputs = json::array();
  for (const auto& path : a.images) {
    const GrayImage img = io::read_gray(path);
    BinaryGrid roi;
    const auto stack = pre.run(img, &roi);
    const GrayImage display = resize_area(img, stack.rows(), stack.cols());
    const std::string stem = fs::path(path).stem().string();
    const auto pred = model.predict(stack);
    json rec = {{"image", path}, {"target", label_name(target)}, {"method", e.method}, {"p", pred.p},
                {"predicted", label_name(pred.predicted)}};

    if (e.method == "gradcam") {
      const auto hm = explain::grad_cam(model, stack, target, e.layer);
      const BinaryGrid* mask = pre.config().segmentation ? &roi : nullptr;
      io::write_png(dir / (stem + "_gradcam.png"), explain::render_overlay(display, hm.grid, cmap, e.alpha, mask));
      io::write_npy(dir / (stem + "_gradcam.npy"), nn::Tensor({hm.grid.rows(), hm.grid.cols()}, hm.grid.storage()));
      rec["layer"] = hm.layer;
      rec["all_zero"] = hm.all_zero;
      rec["overlay"] = stem + "_gradcam.png";
      rec["grid"] = stem + "_gradcam.npy";
    } else {
      explain::LimeOptions opts = e.lime;
      const auto ex = explain::lime_explain(model, stack, target, opts);
      io::write_png(dir / (stem + "_lime.png"), explain::render_superpixels(display, ex, e.alpha));
      std::vector<double> seg(ex.segments.pixels().begin(), ex.segments.pixels().end());
      io::write_npy(dir / (stem + "_lime_segments.npy"), nn::Tensor({ex.segments.rows(), ex.segments.cols()}, seg));
      json top = json::array();
      for (const auto& [s, sign] : ex.top_k) top.push_back({{"segment", s}, {"sign", sign}});
      write_json(dir / (stem + "_lime.json"),
                 {{"n_segments", ex.n_segments}, {"weights", ex.weights}, {"intercept", ex.intercept}, {"top_k", top}});
      rec["overlay"] = stem + "_lime.png";
      rec["segments"] = stem + "_lime_segments.npy";
      rec["weights"] = stem + "_lime.json";
    }
    outputs.push_back(rec);
  }
  write_json(dir / "explain.json", {{"checkpoint", ckpt.id()}, {"config", e.to_json()}, {"outputs", outputs}});
  print_summary({{"output", dir.string()}, {"images", outputs.size()}});
  return kOk;
}

// ---------------------------------------------------------------------------
// lrfind

struct LrFindArgs {
  PipelineFlags flags;
  models::LrFinderOptions options;
};

void write_trace(const fs::path& path, const models::LrTrace& t) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "iteration,lr,loss,smoothed\n";
  for (std::size_t i = 0; i < t.lr.size(); ++i) {
    csv << i << ',' << t.lr[i] << ',' << t.loss[i] << ',' << t.smoothed[i] << "\n";
  }
  write_text(path, csv.str());
}

int run_lrfind(const LrFindArgs& a) {
  const auto cfg = resolve_config(a.flags);
  if (dump_if_requested(a.flags, cfg)) return kOk;
  if (cfg.model.hierarchical()) throw ConfigError("lrfind runs on a single-level task");
  const Task task = cfg.model.primary_task();
  const auto parts = load_partitions(cfg, task);
  const pipeline::Preprocessor pre(cfg.preprocess);
  const auto data = pipeline::load_dataset(parts.train, pre, cfg.limit);
  models::Classifier model(cfg.model.build_spec(task));
  if (model.spec().weights != models::BackboneWeights::None) model.load_pretrained();

  const fs::path dir = make_run_dir(cfg, a.flags, "lrfind");
  write_json(dir / "config.json", cfg.to_json());
  try {
    const auto r = models::find_learning_rate(model, data, cfg.train, a.options);
    write_trace(dir / "lr_trace.csv", r.trace);
    const json summary = {{"learning_rate", r.learning_rate}, {"index", r.index}, {"iterations", r.trace.lr.size()}};
    write_json(dir / "lrfind.json", summary);
    print_summary(summary);
    return kOk;
  } catch (const models::LrFinderError& err) {
    write_trace(dir / "lr_trace.csv", err.trace());
    throw;
  }
}

}  // namespace

void register_train(CLI::App& app, Runner& run) {
  auto args = std::make_shared<TrainArgs>();
  auto* sub = app.add_subcommand("train", "Train a classifier (binary, multiclass or hierarchical)");
  add_pipeline_flags(*sub, args->flags, kDataFlags | kPreprocessFlags | kModelFlags | kTrainFlags);
  sub->callback([args, &run] { run = [args] { return run_train(*args); }; });
}

void register_eval(CLI::App& app, Runner& run) {
  auto args = std::make_shared<EvalArgs>();
  auto* sub = app.add_subcommand("eval", "Confusion matrix, scores and ROC on a split partition");
  sub->add_option("--checkpoint", args->checkpoint, "Classifier (or level-1) checkpoint")->required();
  sub->add_option("--level2", args->level2, "Level-2 checkpoint for hierarchical evaluation");
  sub->add_option("--partition", args->partition, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}));
  add_pipeline_flags(*sub, args->flags, kDataFlags | kPreprocessFlags);
  sub->callback([args, &run] { run = [args] { return run_eval(*args); }; });
}

void register_explain(CLI::App& app, Runner& run) {
  auto args = std::make_shared<ExplainArgs>();
  auto* sub = app.add_subcommand("explain", "Grad-CAM heatmaps or LIME superpixel explanations");
  sub->add_option("images", args->images, "Images to explain")->required();
  sub->add_option("--checkpoint", args->checkpoint, "Classifier checkpoint")->required();
  add_pipeline_flags(*sub, args->flags, kExplainFlags);
  sub->callback([args, &run] { run = [args] { return run_explain(*args); }; });
}

void register_lrfind(CLI::App& app, Runner& run) {
  auto args = std::make_shared<LrFindArgs>();
  auto* sub = app.add_subcommand("lrfind", "Exponential learning-rate range test");
  add_pipeline_flags(*sub, args->flags, kDataFlags | kPreprocessFlags | kModelFlags | kTrainFlags);
  sub->add_option("--lr-min", args->options.lr_min, "Start of the sweep");
  sub->add_option("--lr-max", args->options.lr_max, "End of the sweep");
  sub->add_option("--iterations", args->options.iterations, "Sweep length");
  sub->add_option("--ema", args->options.smoothing, "Loss smoothing factor");
  sub->callback([args, &run] { run = [args] { return run_lrfind(*args); }; });
}

}  // namespace cxnet::cli
