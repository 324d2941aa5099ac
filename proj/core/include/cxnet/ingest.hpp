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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cxnet/labels.hpp"

namespace cxnet::ingest {

enum class Source {
  Radiopaedia,
  Sirm,
  Eurorad,
  Figure1,
  CohenGithub,
  Twitter,
  Papers,
  Hannover,
  SocialMedia,
  NihCxr14,
  PediatricGmc,
  TuberculosisNlm,
};

enum class View { AP, PA, L };

std::string_view source_name(Source source);
std::optional<Source> parse_source(std::string_view token);
std::string_view view_name(View view);
std::optional<View> parse_view(std::string_view token);

struct ImageRecord {
  std::string id;
  std::filesystem::path path;  // resolved against the manifest directory
  Source source = Source::Radiopaedia;
  View view = View::PA;
  Label label = Label::Normal;
  int width = 0;  // filled by validate_images
  int height = 0;

  bool lateral() const noexcept { return view == View::L; }
};

inline constexpr std::string_view kManifestHeader = "id,path,source,view,label";

/// Parses a manifest; relative paths are resolved against `base_dir`.
/// Every row is checked and all problems are reported together in a
/// ValidationError. Lateral rows are kept and flagged via ImageRecord::lateral.
std::vector<ImageRecord> parse_manifest(std::istream& in, const std::filesystem::path& base_dir);
std::vector<ImageRecord> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ImageRecord>& records);

/// Decodes every image, fills width/height, and reports undecodable rows.
void validate_images(std::vector<ImageRecord>& records);

std::vector<ImageRecord> frontal_only(const std::vector<ImageRecord>& records);

/// Records usable for `task` (frontal only). Binary rejects CAP records with a
/// ValidationError; the hierarchy levels drop labels they do not cover.
std::vector<ImageRecord> select_for_task(const std::vector<ImageRecord>& records, Task task);

struct SplitFractions {
  double train = 0.8;
  double test = 0.2;
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  SplitFractions fractions;

  friend bool operator==(const DatasetSplit& a, const DatasetSplit& b) {
    return a.train == b.train && a.test == b.test && a.seed == b.seed;
  }
};

/// Stratified per-label split of the frontal records. Per label the test share is
/// round(test_fraction * N_c), clamped so both sides keep at least one record.
/// Ids come out in manifest order.
DatasetSplit make_split(const std::vector<ImageRecord>& records, SplitFractions fractions, std::uint64_t seed);

void save_split(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit load_split(const std::filesystem::path& path);

/// Records of `records` whose ids are listed, in list order.
std::vector<ImageRecord> subset(const std::vector<ImageRecord>& records, const std::vector<std::string>& ids);

/// Balanced inverse-frequency class weights N / (K * N_c) over the task's classes.
struct ClassWeights {
  Task task = Task::Binary;
  std::vector<double> per_class;
  std::vector<std::size_t> counts;

  double weight(int class_index) const { return per_class.at(static_cast<std::size_t>(class_index)); }
};

ClassWeights compute_class_weights(const std::vector<ImageRecord>& records, Task task);
/// Same, over bare labels.
ClassWeights compute_class_weights(std::span<const Label> labels, Task task);
/// All-ones weights.
ClassWeights uniform_class_weights(Task task);

struct DuplicateGroup {
  std::string pixel_sha256;
  std::vector<std::string> ids;
};

/// Groups records whose decoded pixels (and dimensions) hash identically.
std::vector<DuplicateGroup> find_duplicates(const std::vector<ImageRecord>& records);

struct ManifestSummary {
  std::size_t total = 0;
  std::size_t lateral = 0;
  std::vector<std::pair<std::string, std::size_t>> per_label;
  std::vector<std::pair<std::string, std::size_t>> per_source;
};

ManifestSummary summarize(const std::vector<ImageRecord>& records);

}  // namespace cxnet::ingest
