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

#include "cxnet/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "cxnet/error.hpp"
#include "cxnet/hash.hpp"
#include "cxnet/image_io.hpp"
#include "cxnet/rng.hpp"

namespace cxnet::ingest {

namespace {

constexpr std::pair<Source, std::string_view> kSources[] = {
    {Source::Radiopaedia, "radiopaedia"}, {Source::Sirm, "sirm"},
    {Source::Eurorad, "eurorad"},         {Source::Figure1, "figure1"},
    {Source::CohenGithub, "cohen-github"}, {Source::Twitter, "twitter"},
    {Source::Papers, "papers"},           {Source::Hannover, "hannover"},
    {Source::SocialMedia, "social-media"}, {Source::NihCxr14, "nih-cxr14"},
    {Source::PediatricGmc, "pediatric-gmc"}, {Source::TuberculosisNlm, "tuberculosis-nlm"},
};

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string_view source_name(Source source) {
  for (const auto& [s, name] : kSources) {
    if (s == source) return name;
  }
  return "?";
}

std::optional<Source> parse_source(std::string_view token) {
  const std::string t = lower(std::string(token));
  for (const auto& [s, name] : kSources) {
    if (name == t) return s;
  }
  return std::nullopt;
}

std::string_view view_name(View view) {
  switch (view) {
    case View::AP: return "AP";
    case View::PA: return "PA";
    case View::L: return "L";
  }
  return "?";
}

std::optional<View> parse_view(std::string_view token) {
  std::string t(token);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::toupper(c); });
  if (t == "AP") return View::AP;
  if (t == "PA") return View::PA;
  if (t == "L") return View::L;
  return std::nullopt;
}

std::vector<ImageRecord> parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::string line;
  std::vector<RowIssue> issues;
  if (!std::getline(in, line)) {
    throw ValidationError({{0, "empty manifest: missing header"}});
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (trim(line) != kManifestHeader) {
    throw ValidationError({{0, "bad header '" + line + "', expected '" + std::string(kManifestHeader) + "'"}});
  }

  std::vector<ImageRecord> records;
  std::set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const auto at = " at row " + std::to_string(row);
    if (fields.size() != 5) {
      issues.push_back({row, "expected 5 fields, got " + std::to_string(fields.size()) + at});
      continue;
    }
    ImageRecord rec;
    rec.id = fields[0];
    bool ok = true;
    if (rec.id.empty()) {
      issues.push_back({row, "empty id" + at});
      ok = false;
    } else if (!seen.insert(rec.id).second) {
      issues.push_back({row, "duplicate id '" + rec.id + "'" + at});
      ok = false;
    }
    if (fields[1].empty()) {
      issues.push_back({row, "empty path" + at});
      ok = false;
    }
    rec.path = std::filesystem::path(fields[1]);
    if (rec.path.is_relative()) rec.path = base_dir / rec.path;
    if (auto s = parse_source(fields[2])) {
      rec.source = *s;
    } else {
      issues.push_back({row, "unknown source token '" + fields[2] + "'" + at});
      ok = false;
    }
    if (auto v = parse_view(fields[3])) {
      rec.view = *v;
    } else {
      issues.push_back({row, "unknown view token '" + fields[3] + "'" + at});
      ok = false;
    }
    if (auto l = parse_label(fields[4])) {
      rec.label = *l;
    } else {
      issues.push_back({row, "unknown label token '" + fields[4] + "'" + at});
      ok = false;
    }
    if (ok) records.push_back(std::move(rec));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return records;
}

std::vector<ImageRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

void write_manifest(const std::filesystem::path& path, const std::vector<ImageRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << kManifestHeader << '\n';
  const auto base = path.parent_path();
  for (const auto& r : records) {
    auto rel = r.path.lexically_relative(base.empty() ? "." : base);
    out << r.id << ',' << (rel.empty() ? r.path : rel).generic_string() << ',' << source_name(r.source)
        << ',' << view_name(r.view) << ',' << label_name(r.label) << '\n';
  }
}

void validate_images(std::vector<ImageRecord>& records) {
  std::vector<RowIssue> issues;
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      const GrayImage img = io::read_gray(records[i].path);
      records[i].width = img.cols();
      records[i].height = img.rows();
    } catch (const IoError& e) {
      issues.push_back({i + 1, "undecodable image for '" + records[i].id + "' at row " +
                                   std::to_string(i + 1) + ": " + e.what()});
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

std::vector<ImageRecord> frontal_only(const std::vector<ImageRecord>& records) {
  std::vector<ImageRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const ImageRecord& r) { return !r.lateral(); });
  return out;
}

std::vector<ImageRecord> select_for_task(const std::vector<ImageRecord>& records, Task task) {
  std::vector<ImageRecord> out;
  std::vector<RowIssue> issues;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.lateral()) continue;
    if (task_target(task, r.label)) {
      out.push_back(r);
    } else if (task == Task::Binary) {
      issues.push_back({i + 1, "binary task rejects CAP record '" + r.id + "'"});
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return out;
}

DatasetSplit make_split(const std::vector<ImageRecord>& records, SplitFractions fractions, std::uint64_t seed) {
  if (fractions.train <= 0.0 || fractions.test <= 0.0 || std::abs(fractions.train + fractions.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be positive and sum to 1");
  }
  std::map<Label, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].lateral()) strata[records[i].label].push_back(i);
  }
  if (strata.empty()) throw ConfigError("no frontal records to split");

  std::vector<bool> in_test(records.size(), false);
  for (auto& [label, members] : strata) {
    const auto n = members.size();
    if (n < 2) {
      throw ConfigError("class " + std::string(label_name(label)) + " has " + std::to_string(n) +
                        " record(s); at least 2 are needed to split");
    }
    auto n_test = static_cast<std::size_t>(std::llround(fractions.test * static_cast<double>(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(members.begin(), members.end());
    for (std::size_t k = 0; k < n_test; ++k) in_test[members[k]] = true;
  }

  DatasetSplit split;
  split.seed = seed;
  split.fractions = fractions;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].lateral()) continue;
    (in_test[i] ? split.test : split.train).push_back(records[i].id);
  }
  return split;
}

void save_split(const std::filesystem::path& path, const DatasetSplit& split) {
  nlohmann::json j;
  j["seed"] = split.seed;
  j["fractions"] = {{"train", split.fractions.train}, {"test", split.fractions.test}};
  j["train"] = split.train;
  j["test"] = split.test;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write split " + path.string());
  out << j.dump(2) << '\n';
}

DatasetSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open split " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    DatasetSplit split;
    split.seed = j.at("seed").get<std::uint64_t>();
    split.train = j.at("train").get<std::vector<std::string>>();
    split.test = j.at("test").get<std::vector<std::string>>();
    if (j.contains("fractions")) {
      split.fractions.train = j["fractions"].value("train", 0.8);
      split.fractions.test = j["fractions"].value("test", 0.2);
    }
    return split;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": malformed split file: " + e.what());
  }
}

std::vector<ImageRecord> subset(const std::vector<ImageRecord>& records, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const ImageRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);
  std::vector<ImageRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ConfigError("split references unknown id '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

ClassWeights compute_class_weights(std::span<const Label> labels, Task task) {
  const int k = task_classes(task);
  ClassWeights w;
  w.task = task;
  w.counts.assign(static_cast<std::size_t>(k), 0);
  std::size_t total = 0;
  for (const Label label : labels) {
    if (auto idx = task_target(task, label)) {
      ++w.counts[static_cast<std::size_t>(*idx)];
      ++total;
    }
  }
  for (int c = 0; c < k; ++c) {
    if (w.counts[c] == 0) {
      throw ConfigError("class " + std::string(task_class_name(task, c)) + " has no records");
    }
  }
  for (int c = 0; c < k; ++c) {
    w.per_class.push_back(static_cast<double>(total) / (static_cast<double>(k) * static_cast<double>(w.counts[c])));
  }
  return w;
}

ClassWeights compute_class_weights(const std::vector<ImageRecord>& records, Task task) {
  std::vector<Label> labels;
  for (const auto& r : records) {
    if (!r.lateral()) labels.push_back(r.label);
  }
  return compute_class_weights(labels, task);
}

ClassWeights uniform_class_weights(Task task) {
  ClassWeights w;
  w.task = task;
  w.per_class.assign(static_cast<std::size_t>(task_classes(task)), 1.0);
  w.counts.assign(w.per_class.size(), 0);
  return w;
}

std::vector<DuplicateGroup> find_duplicates(const std::vector<ImageRecord>& records) {
  std::map<std::string, std::vector<std::string>> groups;
  std::vector<std::string> order;
  for (const auto& r : records) {
    const GrayImage img = io::read_gray(r.path);
    std::vector<std::uint8_t> bytes(8 + img.size());
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(img.rows()), static_cast<std::uint32_t>(img.cols())};
    std::memcpy(bytes.data(), dims, 8);
    std::copy(img.pixels().begin(), img.pixels().end(), bytes.begin() + 8);
    auto hash = sha256_hex(bytes);
    auto& ids = groups[hash];
    if (ids.empty()) order.push_back(hash);
    ids.push_back(r.id);
  }
  std::vector<DuplicateGroup> dups;
  for (const auto& hash : order) {
    if (groups[hash].size() > 1) dups.push_back({hash, groups[hash]});
  }
  return dups;
}

ManifestSummary summarize(const std::vector<ImageRecord>& records) {
  ManifestSummary s;
  s.total = records.size();
  std::map<std::string, std::size_t> labels;
  std::map<std::string, std::size_t> sources;
  for (const auto& r : records) {
    if (r.lateral()) ++s.lateral;
    ++labels[std::string(label_name(r.label))];
    ++sources[std::string(source_name(r.source))];
  }
  s.per_label.assign(labels.begin(), labels.end());
  s.per_source.assign(sources.begin(), sources.end());
  return s;
}

}  // namespace cxnet::ingest
