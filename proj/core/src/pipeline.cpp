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

#include "cxnet/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "cxnet/error.hpp"
#include "cxnet/hash.hpp"
#include "cxnet/image_io.hpp"

namespace cxnet::pipeline {

using nlohmann::json;

namespace {

Task parse_task_or_throw(const std::string& token) {
  const auto t = parse_task(token);
  if (!t) throw ConfigError("unknown task '" + token + "'");
  return *t;
}

json clip_json(double clip) { return std::isinf(clip) ? json(nullptr) : json(clip); }

}  // namespace

// ---------------------------------------------------------------------------
// PreprocessConfig

json PreprocessConfig::to_json() const {
  return {{"segmentation", segmentation},
          {"segmenter", segmenter},
          {"dilation_radius", dilation_radius},
          {"margin", margin},
          {"order", segment_first ? "segment-first" : "enhance-first"},
          {"stack",
           {{"rows", stack.rows},
            {"cols", stack.cols},
            {"clahe",
             {{"grid_rows", stack.clahe.grid_rows},
              {"grid_cols", stack.clahe.grid_cols},
              {"clip_limit", clip_json(stack.clahe.clip_limit)}}},
            {"beasf", {{"gamma", stack.beasf.gamma}}}}}};
}

PreprocessConfig PreprocessConfig::from_json(const json& j) {
  PreprocessConfig c;
  c.segmentation = j.value("segmentation", c.segmentation);
  c.segmenter = j.value("segmenter", c.segmenter);
  c.dilation_radius = j.value("dilation_radius", c.dilation_radius);
  c.margin = j.value("margin", c.margin);
  const std::string order = j.value("order", "segment-first");
  if (order != "segment-first" && order != "enhance-first") {
    throw ConfigError("preprocess order must be segment-first or enhance-first");
  }
  c.segment_first = order == "segment-first";
  if (j.contains("stack")) {
    const auto& s = j["stack"];
    c.stack.rows = s.value("rows", c.stack.rows);
    c.stack.cols = s.value("cols", c.stack.cols);
    if (s.contains("clahe")) {
      const auto& k = s["clahe"];
      c.stack.clahe.grid_rows = k.value("grid_rows", c.stack.clahe.grid_rows);
      c.stack.clahe.grid_cols = k.value("grid_cols", c.stack.clahe.grid_cols);
      if (k.contains("clip_limit")) {
        c.stack.clahe.clip_limit = k["clip_limit"].is_null() ? enhance::kNoClip : k["clip_limit"].get<double>();
      }
    }
    if (s.contains("beasf")) c.stack.beasf.gamma = s["beasf"].value("gamma", c.stack.beasf.gamma);
  }
  if (c.dilation_radius < 0 || c.margin < 0) throw ConfigError("dilation radius and margin must be non-negative");
  if (c.stack.rows < enhance::kMinStackSide || c.stack.cols < enhance::kMinStackSide) {
    throw ConfigError("stack size must be at least " + std::to_string(enhance::kMinStackSide));
  }
  return c;
}

// ---------------------------------------------------------------------------
// ModelConfig

json ModelConfig::to_json() const {
  json j = {{"kind", kind},
            {"task", task},
            {"input_shape", {height, width, channels}},
            {"stride", stride},
            {"head",
             {{"hidden_units", head.hidden_units},
              {"dropout_rate", head.dropout_rate},
              {"output", models::head_name(head.output)}}},
            {"weights", weights},
            {"weights_path", weights_path},
            {"train_backbone", train_backbone},
            {"seed", seed}};
  if (block_layers) j["block_layers"] = *block_layers;
  if (growth_rate) j["growth_rate"] = *growth_rate;
  if (init_features) j["init_features"] = *init_features;
  return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  c.kind = j.value("kind", c.kind);
  if (c.kind != "base-cnn" && c.kind != "backbone") throw ConfigError("model kind must be base-cnn or backbone");
  c.task = j.value("task", c.task);
  if (c.task != "hierarchical") parse_task_or_throw(c.task);
  if (j.contains("input_shape")) {
    const auto& s = j["input_shape"];
    c.height = s.at(0);
    c.width = s.at(1);
    c.channels = s.at(2);
  }
  c.stride = j.value("stride", c.stride);
  if (j.contains("head")) {
    const auto& h = j["head"];
    c.head.hidden_units = h.value("hidden_units", c.head.hidden_units);
    c.head.dropout_rate = h.value("dropout_rate", c.head.dropout_rate);
    const std::string out = h.value("output", std::string(models::head_name(c.head.output)));
    const auto parsed = models::parse_head(out);
    if (!parsed) throw ConfigError("unknown head output '" + out + "'");
    c.head.output = *parsed;
  }
  c.weights = j.value("weights", c.weights);
  if (!models::parse_weights(c.weights)) throw ConfigError("unknown backbone weights '" + c.weights + "'");
  c.weights_path = j.value("weights_path", c.weights_path);
  c.train_backbone = j.value("train_backbone", c.train_backbone);
  if (j.contains("block_layers")) c.block_layers = j["block_layers"].get<std::vector<int>>();
  if (j.contains("growth_rate")) c.growth_rate = j["growth_rate"].get<int>();
  if (j.contains("init_features")) c.init_features = j["init_features"].get<int>();
  c.seed = j.value("seed", c.seed);
  return c;
}

Task ModelConfig::primary_task() const {
  if (hierarchical()) return Task::Level1;
  return parse_task_or_throw(task);
}

models::ModelSpec ModelConfig::build_spec(Task t) const {
  models::ModelSpec spec;
  models::HeadConfig h = head;
  h.output = task_classes(t) == 2 ? models::OutputHead::Sigmoid1 : models::OutputHead::Softmax3;
  if (kind == "base-cnn") {
    spec = models::build_base_cnn(height, width, channels, stride);
    spec.head.output = h.output;
  } else {
    const auto w = *models::parse_weights(weights);
    if (channels != 3) throw ConfigError("the backbone takes 3-channel input");
    spec = models::build_backbone_model(h, w, height, width, weights_path);
    spec.train_backbone = train_backbone;
    if (block_layers) spec.backbone.block_layers = *block_layers;
    if (growth_rate) spec.backbone.growth_rate = *growth_rate;
    if (init_features) spec.backbone.init_features = *init_features;
  }
  spec.task = t;
  models::check_head_task(spec.head, t);
  spec.init_seed = seed;
  return spec;
}

// ---------------------------------------------------------------------------
// SegmenterConfig / ExplainConfig

json SegmenterConfig::to_json() const {
  return {{"input_size", {height, width}}, {"depth", depth}, {"base_filters", base_filters}, {"train", train.to_json()}};
}

SegmenterConfig SegmenterConfig::from_json(const json& j) {
  SegmenterConfig c;
  if (j.contains("input_size")) {
    c.height = j["input_size"].at(0);
    c.width = j["input_size"].at(1);
  }
  c.depth = j.value("depth", c.depth);
  c.base_filters = j.value("base_filters", c.base_filters);
  if (j.contains("train")) c.train = lungseg::SegTrainConfig::from_json(j["train"]);
  return c;
}

json ExplainConfig::to_json() const {
  return {{"method", method},
          {"target", target},
          {"layer", layer},
          {"colormap", colormap},
          {"alpha", alpha},
          {"lime",
           {{"n_segments", lime.n_segments},
            {"n_samples", lime.n_samples},
            {"kernel_width", lime.kernel_width},
            {"top_k", lime.top_k},
            {"seed", lime.seed}}}};
}

ExplainConfig ExplainConfig::from_json(const json& j) {
  ExplainConfig c;
  c.method = j.value("method", c.method);
  if (c.method != "gradcam" && c.method != "lime") throw ConfigError("explain method must be gradcam or lime");
  c.target = j.value("target", c.target);
  if (!parse_label(c.target)) throw ConfigError("unknown target label '" + c.target + "'");
  c.layer = j.value("layer", c.layer);
  c.colormap = j.value("colormap", c.colormap);
  if (!explain::parse_colormap(c.colormap)) throw ConfigError("unknown colormap '" + c.colormap + "'");
  c.alpha = j.value("alpha", c.alpha);
  if (j.contains("lime")) {
    const auto& l = j["lime"];
    c.lime.n_segments = l.value("n_segments", c.lime.n_segments);
    c.lime.n_samples = l.value("n_samples", c.lime.n_samples);
    c.lime.kernel_width = l.value("kernel_width", c.lime.kernel_width);
    c.lime.top_k = l.value("top_k", c.lime.top_k);
    c.lime.seed = l.value("seed", c.lime.seed);
  }
  return c;
}

// ---------------------------------------------------------------------------
// PipelineConfig

json PipelineConfig::to_json() const {
  json train_json = train.to_json();
  train_json["level2_epochs"] = level2_epochs;
  train_json["runs"] = runs;
  return {{"schema_version", kSchemaVersion},
          {"manifest", manifest},
          {"split", {{"path", split}, {"seed", split_seed}, {"train", fractions.train}, {"test", fractions.test}}},
          {"limit", limit},
          {"preprocess", preprocess.to_json()},
          {"model", model.to_json()},
          {"train", train_json},
          {"segmenter", segmenter.to_json()},
          {"explain", explain.to_json()},
          {"output", {{"dir", output_dir}, {"tag", tag}}}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!j.contains("schema_version")) throw ConfigError("config lacks schema_version");
  if (j["schema_version"] != kSchemaVersion) {
    throw ConfigError("unsupported config schema_version " + j["schema_version"].dump());
  }
  try {
    PipelineConfig c;
    c.manifest = j.value("manifest", c.manifest);
    if (j.contains("split")) {
      const auto& s = j["split"];
      c.split = s.value("path", c.split);
      c.split_seed = s.value("seed", c.split_seed);
      c.fractions.train = s.value("train", c.fractions.train);
      c.fractions.test = s.value("test", c.fractions.test);
    }
    c.limit = j.value("limit", c.limit);
    if (j.contains("preprocess")) c.preprocess = PreprocessConfig::from_json(j["preprocess"]);
    if (j.contains("model")) c.model = ModelConfig::from_json(j["model"]);
    if (j.contains("train")) {
      c.train = models::TrainConfig::from_json(j["train"]);
      c.level2_epochs = j["train"].value("level2_epochs", c.level2_epochs);
      c.runs = j["train"].value("runs", c.runs);
    }
    if (c.level2_epochs < 1) throw ConfigError("level2_epochs must be at least 1");
    if (c.runs < 1) throw ConfigError("runs must be at least 1");
    if (j.contains("segmenter")) c.segmenter = SegmenterConfig::from_json(j["segmenter"]);
    if (j.contains("explain")) c.explain = ExplainConfig::from_json(j["explain"]);
    if (j.contains("output")) {
      c.output_dir = j["output"].value("dir", c.output_dir);
      c.tag = j["output"].value("tag", c.tag);
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// Preprocessing

Preprocessor::Preprocessor(PreprocessConfig config) : config_(std::move(config)) {
  json basis = config_.to_json();
  basis.erase("segmenter");
  if (config_.segmentation) {
    if (config_.segmenter.empty()) throw ConfigError("segmentation is on but no segmenter checkpoint is set");
    segmenter_ = std::make_shared<lungseg::Segmenter>(models::Checkpoint::load(config_.segmenter));
    basis["segmenter_id"] = segmenter_->id();
  }
  const std::string text = basis.dump();
  fingerprint_ = sha256_hex({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

enhance::ChannelStack Preprocessor::operator()(const GrayImage& img) const { return run(img, nullptr); }

enhance::ChannelStack Preprocessor::run(const GrayImage& img, BinaryGrid* mask_out) const {
  if (!segmenter_) {
    if (mask_out) *mask_out = BinaryGrid(config_.stack.rows, config_.stack.cols, 1);
    return enhance::build_stack(img, config_.stack);
  }
  const lungseg::LungMask m = lungseg::segment(img, *segmenter_, config_.dilation_radius, config_.margin);
  const BinaryGrid small = lungseg::resize_nearest(m.mask, config_.stack.rows, config_.stack.cols);
  if (mask_out) *mask_out = small;
  if (config_.segment_first) return enhance::build_stack(lungseg::apply_roi(img, m.mask), config_.stack);
  enhance::ChannelStack stack = enhance::build_stack(img, config_.stack);
  for (auto& plane : stack.planes) {
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (!small.pixels()[i]) plane.pixels()[i] = 0.0;
    }
  }
  return stack;
}

std::vector<ingest::ImageRecord> limit_records(const std::vector<ingest::ImageRecord>& records, std::size_t limit) {
  if (limit == 0 || limit >= records.size()) return records;
  std::map<Label, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < records.size(); ++i) by_label[records[i].label].push_back(i);
  std::vector<bool> keep(records.size(), false);
  std::size_t taken = 0;
  for (std::size_t round = 0; taken < limit; ++round) {
    for (auto& [label, idx] : by_label) {
      if (round < idx.size() && taken < limit) {
        keep[idx[round]] = true;
        ++taken;
      }
    }
  }
  std::vector<ingest::ImageRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.push_back(records[i]);
  }
  return out;
}

models::Dataset load_dataset(const std::vector<ingest::ImageRecord>& records, const Preprocessor& pre,
                             std::size_t limit) {
  models::Dataset out;
  for (const auto& r : limit_records(ingest::frontal_only(records), limit)) {
    out.add(r.id, pre(io::read_gray(r.path)), r.label);
  }
  return out;
}

}  // namespace cxnet::pipeline
