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

#include "common.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>

#include "cxnet/error.hpp"

namespace cxnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void add_pipeline_flags(CLI::App& app, PipelineFlags& f, unsigned groups) {
  app.add_option("--config", f.config_path, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_flag("--dump-config", f.dump_config, "Print the effective config and exit");
  app.add_option("--out", f.out, "Output directory (default: <output-dir>/<timestamp>-<tag>)");
  app.add_option("--output-dir", f.output_dir, "Parent of timestamped run directories");
  app.add_option("--tag", f.tag, "Run directory suffix");

  if (groups & kDataFlags) {
    app.add_option("--manifest", f.manifest, "Manifest CSV");
    app.add_option("--split", f.split, "Split JSON (default: derive from the manifest)");
    app.add_option("--split-seed", f.split_seed, "Seed of the derived split");
    app.add_option("--train-fraction", f.train_fraction, "Train share of the derived split");
    app.add_option("--limit", f.limit, "Cap on samples per partition (0: all)");
  }
  if (groups & kPreprocessFlags) {
    app.add_option("--segmenter", f.segmenter, "Lung segmentation checkpoint (enables segmentation)");
    app.add_flag("--no-segmentation", f.no_segmentation, "Disable lung segmentation");
    app.add_option("--dilation", f.dilation, "Mask dilation radius in pixels");
    app.add_option("--margin", f.margin, "Mask bounding-box margin in pixels");
    app.add_option("--order", f.order, "segment-first or enhance-first")
        ->check(CLI::IsMember({"segment-first", "enhance-first"}));
    app.add_option("--stack-size", f.stack_size, "Side of the enhanced channel stack");
    app.add_option("--tile", f.tile, "CLAHE tile grid (tiles per side)");
    app.add_option("--clip", f.clip, "CLAHE clip limit, or 'inf'");
    app.add_option("--gamma", f.gamma, "BEASF sigmoid slope");
  }
  if (groups & kModelFlags) {
    app.add_option("--kind", f.kind, "base-cnn or backbone")->check(CLI::IsMember({"base-cnn", "backbone"}));
    app.add_option("--task", f.task, "binary, multiclass or hierarchical")
        ->check(CLI::IsMember({"binary", "multiclass", "hierarchical"}));
    app.add_option("--input-size", f.input_size, "Model input side");
    app.add_option("--channels", f.channels, "Model input channels (1 or 3)");
    app.add_option("--stride", f.stride, "Base CNN convolution stride");
    app.add_option("--weights", f.weights, "Backbone weights: none, imagenet, chexnet")
        ->check(CLI::IsMember({"none", "imagenet", "chexnet"}));
    app.add_option("--weights-path", f.weights_path, "Converted backbone weights archive");
    app.add_flag("--freeze-backbone", f.freeze_backbone, "Train the head only");
    app.add_option("--hidden-units", f.hidden_units, "Head FC width");
    app.add_option("--dropout", f.dropout, "Head dropout rate");
    app.add_option("--block-layers", f.block_layers, "Backbone dense-block depths")->delimiter(',');
    app.add_option("--growth-rate", f.growth_rate, "Backbone growth rate");
    app.add_option("--init-features", f.init_features, "Backbone stem width");
    app.add_option("--model-seed", f.model_seed, "Weight initialization seed");
  }
  if (groups & kTrainFlags) {
    app.add_option("--epochs", f.epochs, "Training epochs (level 1 for hierarchical runs)");
    app.add_option("--level2-epochs", f.level2_epochs, "Level 2 epochs of hierarchical runs");
    app.add_option("--batch-size", f.batch_size, "Mini-batch size");
    app.add_option("--lr", f.lr, "Adam learning rate");
    app.add_option("--smoothing", f.smoothing, "Label smoothing");
    app.add_flag("--uniform-weights", f.uniform_weights, "Unit class weights");
    app.add_option("--zoom", f.zoom, "Augmentation zoom range");
    app.add_option("--brightness", f.brightness, "Augmentation brightness range");
    app.add_flag("--flip", f.flip, "Augmentation horizontal flips");
    app.add_option("--seed", f.seed, "Training seed");
    app.add_option("--runs", f.runs, "Repeated runs with derived seeds");
  }
  if (groups & kSegmenterFlags) {
    app.add_option("--seg-size", f.seg_size, "U-Net input side");
    app.add_option("--seg-depth", f.seg_depth, "U-Net depth");
    app.add_option("--seg-filters", f.seg_filters, "U-Net base filters");
    app.add_option("--seg-epochs", f.seg_epochs, "U-Net epochs");
    app.add_option("--seg-batch", f.seg_batch, "U-Net batch size");
    app.add_option("--seg-lr", f.seg_lr, "U-Net learning rate");
    app.add_option("--seg-loss", f.seg_loss, "dice or bce-dice")->check(CLI::IsMember({"dice", "bce-dice"}));
    app.add_option("--seg-val-fraction", f.seg_val_fraction, "Validation share of the pairs (0: train pairs)");
  }
  if (groups & kExplainFlags) {
    app.add_option("--method", f.method, "gradcam or lime")->check(CLI::IsMember({"gradcam", "lime"}));
    app.add_option("--target", f.target, "Explained class: NORMAL, CAP or CP");
    app.add_option("--layer", f.layer, "Grad-CAM feature tap (-1: last)");
    app.add_option("--colormap", f.colormap, "jet or hot")->check(CLI::IsMember({"jet", "hot"}));
    app.add_option("--alpha", f.alpha, "Overlay opacity");
    app.add_option("--segments", f.segments, "LIME superpixels");
    app.add_option("--samples", f.samples, "LIME perturbation samples");
    app.add_option("--kernel-width", f.kernel_width, "LIME kernel width");
    app.add_option("--top-k", f.top_k, "LIME segments to highlight");
    app.add_option("--lime-seed", f.lime_seed, "LIME sampling seed");
  }
}

namespace {

template <typename T, typename U>
void set(const std::optional<T>& flag, U& field) {
  if (flag) field = *flag;
}

}  // namespace

pipeline::PipelineConfig resolve_config(const PipelineFlags& f) {
  pipeline::PipelineConfig c = f.config_path.empty() ? pipeline::PipelineConfig{}
                                                     : pipeline::PipelineConfig::load(f.config_path);
  set(f.output_dir, c.output_dir);
  set(f.tag, c.tag);
  set(f.manifest, c.manifest);
  set(f.split, c.split);
  set(f.split_seed, c.split_seed);
  if (f.train_fraction) {
    c.fractions.train = *f.train_fraction;
    c.fractions.test = 1.0 - *f.train_fraction;
  }
  set(f.limit, c.limit);

  auto& p = c.preprocess;
  if (f.segmenter) {
    p.segmentation = true;
    p.segmenter = fs::absolute(*f.segmenter).lexically_normal().string();
  }
  if (f.no_segmentation) p.segmentation = false;
  set(f.dilation, p.dilation_radius);
  set(f.margin, p.margin);
  if (f.order) p.segment_first = *f.order == "segment-first";
  if (f.stack_size) p.stack.rows = p.stack.cols = *f.stack_size;
  if (f.tile) p.stack.clahe.grid_rows = p.stack.clahe.grid_cols = *f.tile;
  if (f.clip) p.stack.clahe.clip_limit = *f.clip == "inf" ? enhance::kNoClip : std::stod(*f.clip);
  set(f.gamma, p.stack.beasf.gamma);

  auto& m = c.model;
  set(f.kind, m.kind);
  set(f.task, m.task);
  if (f.input_size) m.height = m.width = *f.input_size;
  set(f.channels, m.channels);
  set(f.stride, m.stride);
  set(f.weights, m.weights);
  set(f.weights_path, m.weights_path);
  if (f.freeze_backbone) m.train_backbone = false;
  set(f.hidden_units, m.head.hidden_units);
  set(f.dropout, m.head.dropout_rate);
  if (f.block_layers) m.block_layers = *f.block_layers;
  if (f.growth_rate) m.growth_rate = *f.growth_rate;
  if (f.init_features) m.init_features = *f.init_features;
  set(f.model_seed, m.seed);

  auto& t = c.train;
  set(f.epochs, t.epochs);
  set(f.level2_epochs, c.level2_epochs);
  set(f.batch_size, t.batch_size);
  set(f.lr, t.learning_rate);
  set(f.smoothing, t.label_smoothing);
  if (f.uniform_weights) t.balanced_class_weights = false;
  set(f.zoom, t.augmentation.zoom);
  set(f.brightness, t.augmentation.brightness);
  if (f.flip) t.augmentation.horizontal_flip = true;
  set(f.seed, t.seed);
  set(f.runs, c.runs);

  auto& s = c.segmenter;
  if (f.seg_size) s.height = s.width = *f.seg_size;
  set(f.seg_depth, s.depth);
  set(f.seg_filters, s.base_filters);
  set(f.seg_epochs, s.train.epochs);
  set(f.seg_batch, s.train.batch_size);
  set(f.seg_lr, s.train.learning_rate);
  if (f.seg_loss) s.train.loss = *f.seg_loss == "dice" ? lungseg::SegLoss::Dice : lungseg::SegLoss::BceDice;
  set(f.seg_val_fraction, s.train.validation_fraction);

  auto& e = c.explain;
  set(f.method, e.method);
  set(f.target, e.target);
  set(f.layer, e.layer);
  set(f.colormap, e.colormap);
  set(f.alpha, e.alpha);
  set(f.segments, e.lime.n_segments);
  set(f.samples, e.lime.n_samples);
  set(f.kernel_width, e.lime.kernel_width);
  set(f.top_k, e.lime.top_k);
  set(f.lime_seed, e.lime.seed);

  // Round-trip through JSON so flag values get the same validation as files.
  return pipeline::PipelineConfig::from_json(c.to_json());
}

fs::path make_run_dir(const pipeline::PipelineConfig& cfg, const PipelineFlags& flags, const std::string& command) {
  fs::path dir;
  if (!flags.out.empty()) {
    dir = flags.out;
  } else {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    dir = fs::path(cfg.output_dir) / (std::string(stamp) + "-" + (cfg.tag.empty() ? command : cfg.tag));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void print_summary(const json& j) { std::cout << j.dump() << std::endl; }

Task selection_task(const pipeline::ModelConfig& model) {
  return model.hierarchical() ? Task::Multiclass : model.primary_task();
}

Partitions load_partitions(const pipeline::PipelineConfig& cfg, Task selection) {
  if (cfg.manifest.empty()) throw ConfigError("no manifest given (--manifest or config 'manifest')");
  const auto records = ingest::select_for_task(ingest::load_manifest(cfg.manifest), selection);
  Partitions p;
  p.split = cfg.split.empty() ? ingest::make_split(records, cfg.fractions, cfg.split_seed)
                              : ingest::load_split(cfg.split);
  p.train = ingest::subset(records, p.split.train);
  p.test = ingest::subset(records, p.split.test);
  return p;
}

pipeline::PreprocessConfig checkpoint_preprocess(const models::Checkpoint& ckpt,
                                                 const pipeline::PreprocessConfig& fallback) {
  if (ckpt.preprocess.is_object() && !ckpt.preprocess.empty()) {
    return pipeline::PreprocessConfig::from_json(ckpt.preprocess);
  }
  return fallback;
}

}  // namespace cxnet::cli
