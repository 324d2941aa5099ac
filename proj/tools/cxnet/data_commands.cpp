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
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "cxnet/archive.hpp"
#include "cxnet/enhance.hpp"
#include "cxnet/image_io.hpp"
#include "cxnet/ingest.hpp"
#include "cxnet/log.hpp"
#include "cxnet/lungseg.hpp"

namespace cxnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// ingest

namespace {

struct IngestArgs {
  std::string manifest;
  std::string out;
  std::string split_out;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;
  bool no_decode = false;
};

void print_table(const std::string& title, const std::vector<std::pair<std::string, std::size_t>>& rows) {
  std::cout << title << "\n";
  for (const auto& [name, n] : rows) std::cout << "  " << std::left << std::setw(16) << name << std::right << std::setw(8) << n << "\n";
}

int run_ingest(const IngestArgs& a) {
  std::vector<ingest::ImageRecord> records;
  try {
    records = ingest::load_manifest(a.manifest);
    if (!a.no_decode) ingest::validate_images(records);
  } catch (const ValidationError& e) {
    for (const auto& issue : e.issues()) std::cerr << "row " << issue.row << ": " << issue.message << "\n";
    return kConfigError;
  }

  const auto summary = ingest::summarize(records);
  std::cout << records.size() << " records, " << summary.lateral << " lateral (excluded)\n";
  print_table("per label:", summary.per_label);
  print_table("per source:", summary.per_source);

  std::vector<ingest::DuplicateGroup> dups;
  if (!a.no_decode) dups = ingest::find_duplicates(records);
  json dup_json = json::array();
  for (const auto& g : dups) {
    std::string ids;
    for (const auto& id : g.ids) ids += (ids.empty() ? "" : ", ") + id;
    log::warn("duplicate pixels: " + ids);
    dup_json.push_back({{"pixel_sha256", g.pixel_sha256}, {"ids", g.ids}});
  }

  json summary_json = {{"total", summary.total}, {"lateral", summary.lateral}, {"duplicate_groups", dups.size()}};
  for (const auto& [k, v] : summary.per_label) summary_json["per_label"][k] = v;
  for (const auto& [k, v] : summary.per_source) summary_json["per_source"][k] = v;

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_json(fs::path(a.out) / "summary.json", summary_json);
    write_json(fs::path(a.out) / "duplicates.json", dup_json);
  }
  if (!a.split_out.empty()) {
    const auto split = ingest::make_split(records, {a.train_fraction, 1.0 - a.train_fraction}, a.split_seed);
    ingest::save_split(a.split_out, split);
    summary_json["split"] = {{"path", a.split_out}, {"train", split.train.size()}, {"test", split.test.size()}};
  }
  print_summary(summary_json);
  return kOk;
}

}  // namespace

void register_ingest(CLI::App& app, Runner& run) {
  auto args = std::make_shared<IngestArgs>();
  auto* sub = app.add_subcommand("ingest", "Validate a manifest, report counts and duplicates, derive a split");
  sub->add_option("manifest", args->manifest, "Manifest CSV")->required();
  sub->add_option("--out", args->out, "Directory for summary.json and duplicates.json");
  sub->add_option("--split-out", args->split_out, "Write a stratified split JSON here");
  sub->add_option("--split-seed", args->split_seed, "Split seed");
  sub->add_option("--train-fraction", args->train_fraction, "Train share")->check(CLI::Range(0.0, 1.0));
  sub->add_flag("--no-decode", args->no_decode, "Skip image decoding and duplicate detection");
  sub->callback([args, &run] { run = [args] { return run_ingest(*args); }; });
}

// ---------------------------------------------------------------------------
// enhance

namespace {

struct EnhanceArgs {
  std::string input;
  std::string method;
  std::string output;
  std::string reference;
  double gamma = 1.5;
  std::string clip = "2.0";
  int tile = 8;
  int size = 0;
};

fs::path default_output(const EnhanceArgs& a, const char* ext) {
  return fs::path(a.input).stem().string() + "_" + a.method + ext;
}

int run_enhance(const EnhanceArgs& a) {
  GrayImage img = io::read_gray(a.input);
  const double clip = a.clip == "inf" ? enhance::kNoClip : std::stod(a.clip);
  const enhance::ClaheParams clahe{a.tile, a.tile, clip};

  if (a.method == "stack") {
    enhance::StackParams params;
    if (a.size > 0) params.rows = params.cols = a.size;
    params.clahe = clahe;
    params.beasf.gamma = a.gamma;
    const auto stack = enhance::build_stack(img, params);
    io::TensorArchive archive;
    archive.meta = {{"planes", {"raw", "clahe", "beasf"}},
                    {"rows", stack.rows()},
                    {"cols", stack.cols()},
                    {"clahe", {{"grid", a.tile}, {"clip_limit", a.clip}}},
                    {"beasf_gamma", a.gamma},
                    {"source", a.input}};
    archive.tensors["stack"] = stack.to_tensor().reshaped({3, stack.rows(), stack.cols()});
    const fs::path out = a.output.empty() ? default_output(a, ".cxa") : fs::path(a.output);
    archive.save(out);
    print_summary({{"method", a.method}, {"output", out.string()}, {"shape", {3, stack.rows(), stack.cols()}}});
    return kOk;
  }

  if (a.size > 0) img = resize_area(img, a.size, a.size);
  GrayImage out_img;
  if (a.method == "he") {
    out_img = enhance::hist_equalize(img);
  } else if (a.method == "ahe") {
    out_img = enhance::ahe(img, a.tile, a.tile);
  } else if (a.method == "clahe") {
    out_img = enhance::clahe(img, clahe);
  } else if (a.method == "beasf") {
    out_img = enhance::beasf(img, {a.gamma});
  } else if (a.method == "match") {
    if (a.reference.empty()) throw ConfigError("--method match needs --reference");
    GrayImage ref = io::read_gray(a.reference);
    if (a.size > 0) ref = resize_area(ref, a.size, a.size);
    out_img = enhance::histogram_match(img, ref);
  } else {
    throw ConfigError("unknown method '" + a.method + "'");
  }
  const fs::path out = a.output.empty() ? default_output(a, ".png") : fs::path(a.output);
  io::write_png(out, out_img);
  print_summary({{"method", a.method}, {"output", out.string()}, {"rows", out_img.rows()}, {"cols", out_img.cols()}});
  return kOk;
}

}  // namespace

void register_enhance(CLI::App& app, Runner& run) {
  auto args = std::make_shared<EnhanceArgs>();
  auto* sub = app.add_subcommand("enhance", "Apply one enhancement or build the 3-plane channel stack");
  sub->add_option("input", args->input, "Input image")->required()->check(CLI::ExistingFile);
  sub->add_option("--method", args->method, "he, ahe, clahe, beasf, match or stack")->required();
  sub->add_option("-o,--output", args->output, "Output file (default: <stem>_<method>.png|.cxa)");
  sub->add_option("--reference", args->reference, "Reference image for --method match");
  sub->add_option("--gamma", args->gamma, "BEASF sigmoid slope");
  sub->add_option("--clip", args->clip, "CLAHE clip limit, or 'inf'");
  sub->add_option("--tile", args->tile, "CLAHE tile grid (tiles per side)");
  sub->add_option("--size", args->size, "Resize (area) to a square of this side first");
  sub->callback([args, &run] { run = [args] { return run_enhance(*args); }; });
}

// ---------------------------------------------------------------------------
// segment

namespace {

std::vector<lungseg::SegPair> read_pairs(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open pairs file " + csv.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("image,mask", 0) != 0) {
    throw ConfigError(csv.string() + ": expected header 'image,mask'");
  }
  const fs::path base = csv.parent_path();
  std::vector<lungseg::SegPair> pairs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("pairs row " + std::to_string(row) + ": expected image,mask");
    pairs.push_back({io::read_gray(base / line.substr(0, comma)), io::read_mask(base / line.substr(comma + 1))});
  }
  return pairs;
}

struct SegmentArgs {
  PipelineFlags flags;
  std::string pairs;
  std::string checkpoint;
  std::vector<std::string> images;
};

int run_segment_train(const SegmentArgs& a) {
  const auto cfg = resolve_config(a.flags);
  if (a.flags.dump_config) {
    std::cout << cfg.to_json().dump(2) << std::endl;
    return kOk;
  }
  if (a.pairs.empty()) throw ConfigError("segment train needs --pairs");
  const auto pairs = read_pairs(a.pairs);
  const fs::path dir = make_run_dir(cfg, a.flags, "segment");
  write_json(dir / "config.json", cfg.to_json());

  const auto& s = cfg.segmenter;
  const auto spec = lungseg::build_unet(s.height, s.width, s.depth, s.base_filters, s.train.seed);
  const auto result = lungseg::train_segmenter(pairs, spec, s.train);
  result.best.save(dir / "segmenter.cxa");
  std::ofstream log_out(dir / "seg_log.jsonl");
  double best_dice = 0;
  for (const auto& e : result.log) {
    log_out << json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"train_dice", e.train_dice},
                    {"val_dice", e.val_dice}}
                   .dump()
            << '\n';
    best_dice = std::max(best_dice, e.val_dice);
  }
  print_summary({{"checkpoint", (dir / "segmenter.cxa").string()},
                 {"checkpoint_id", result.best.id()},
                 {"best_epoch", result.best_epoch},
                 {"best_val_dice", best_dice},
                 {"pairs", pairs.size()}});
  return kOk;
}

int run_segment_predict(const SegmentArgs& a) {
  const auto cfg = resolve_config(a.flags);
  if (a.flags.dump_config) {
    std::cout << cfg.to_json().dump(2) << std::endl;
    return kOk;
  }
  if (a.checkpoint.empty()) throw ConfigError("segment predict needs --checkpoint");
  std::vector<std::pair<std::string, fs::path>> inputs;
  for (const auto& img : a.images) inputs.emplace_back(fs::path(img).stem().string(), img);
  if (inputs.empty()) {
    if (cfg.manifest.empty()) throw ConfigError("segment predict needs images or --manifest");
    for (const auto& r : ingest::frontal_only(ingest::load_manifest(cfg.manifest))) inputs.emplace_back(r.id, r.path);
  }

  lungseg::Segmenter seg(models::Checkpoint::load(a.checkpoint));
  const fs::path dir = make_run_dir(cfg, a.flags, "segment");
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "roi");
  json masks = json::array();
  for (const auto& [id, path] : inputs) {
    const GrayImage img = io::read_gray(path);
    const auto m = lungseg::segment(img, seg, cfg.preprocess.dilation_radius, cfg.preprocess.margin);
    io::write_mask_png(dir / "masks" / (id + ".png"), m.mask);
    io::write_png(dir / "roi" / (id + ".png"), lungseg::apply_roi(img, m.mask));
    masks.push_back({{"id", id}, {"area", m.area()}, {"components", m.components}, {"flagged_empty", m.flagged_empty}});
  }
  write_json(dir / "masks.json", {{"checkpoint", seg.id()},
                                  {"dilation_radius", cfg.preprocess.dilation_radius},
                                  {"margin", cfg.preprocess.margin},
                                  {"masks", masks}});
  print_summary({{"output", dir.string()}, {"images", inputs.size()}, {"checkpoint_id", seg.id()}});
  return kOk;
}

}  // namespace

void register_segment(CLI::App& app, Runner& run) {
  auto* sub = app.add_subcommand("segment", "Train the lung segmenter or predict lung masks");
  sub->require_subcommand(1);

  auto train_args = std::make_shared<SegmentArgs>();
  auto* tr = sub->add_subcommand("train", "Train the U-Net on image/mask pairs");
  tr->add_option("--pairs", train_args->pairs, "CSV with header image,mask")->required();
  add_pipeline_flags(*tr, train_args->flags, kSegmenterFlags);
  tr->callback([train_args, &run] { run = [train_args] { return run_segment_train(*train_args); }; });

  auto pred_args = std::make_shared<SegmentArgs>();
  auto* pr = sub->add_subcommand("predict", "Predict postprocessed masks and ROI images");
  pr->add_option("--checkpoint", pred_args->checkpoint, "Segmenter checkpoint")->required();
  pr->add_option("images", pred_args->images, "Images (default: the manifest's frontal records)");
  add_pipeline_flags(*pr, pred_args->flags, kDataFlags | kPreprocessFlags);
  pr->callback([pred_args, &run] { run = [pred_args] { return run_segment_predict(*pred_args); }; });
}

}  // namespace cxnet::cli
