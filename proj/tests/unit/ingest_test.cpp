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

#include <algorithm>
#include <set>
#include <sstream>

#include "cxnet/ingest.hpp"
#include "support.hpp"

namespace cxnet::ingest {
namespace {

std::string header() { return std::string(kManifestHeader) + "\n"; }

std::vector<ImageRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_manifest(in, "/data");
}

/// N_normal NORMAL rows then N_cp CP rows (no image files needed).
std::vector<ImageRecord> synthetic_records(int n_normal, int n_cp, int n_cap = 0) {
  std::ostringstream os;
  os << header();
  int id = 0;
  auto rows = [&](int n, const char* label, const char* source) {
    for (int i = 0; i < n; ++i, ++id) os << "r" << id << ",img/" << id << ".png," << source << ",PA," << label << "\n";
  };
  rows(n_normal, "NORMAL", "nih-cxr14");
  rows(n_cp, "CP", "cohen-github");
  rows(n_cap, "CAP", "pediatric-gmc");
  return parse(os.str());
}

std::size_t count_label(const std::vector<ImageRecord>& records, const std::vector<std::string>& ids, Label label) {
  std::set<std::string> want(ids.begin(), ids.end());
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const ImageRecord& r) {
    return want.count(r.id) && r.label == label;
  }));
}

TEST(Manifest, ThreeRowsOneLateral) {
  const auto recs = parse(header() + "a,a.png,sirm,PA,CP\nb,b.png,radiopaedia,PA,NORMAL\nc,c.png,eurorad,L,CP\n");
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(std::count_if(recs.begin(), recs.end(), [](const ImageRecord& r) { return r.lateral(); }), 1);
  EXPECT_EQ(recs[0].path, std::filesystem::path("/data/a.png"));
  EXPECT_EQ(frontal_only(recs).size(), 2u);
}

TEST(Manifest, UnknownLabelReportsRowIndex) {
  try {
    parse(header() + "a,a.png,sirm,PA,CP\nb,b.png,sirm,PA,covid\n");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.issues().size(), 1u);
    EXPECT_EQ(e.issues()[0].row, 2u);
    EXPECT_NE(e.issues()[0].message.find("unknown label token"), std::string::npos);
    EXPECT_NE(e.issues()[0].message.find("at row 2"), std::string::npos);
  }
}

TEST(Manifest, AllProblemsReportedTogether) {
  try {
    parse(header() + "a,a.png,myspace,PA,CP\na,b.png,sirm,XX,CP\nc,c.png,sirm,PA\n");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.issues().size(), 4u);  // source, duplicate id, view, field count
    EXPECT_EQ(e.issues()[0].row, 1u);
    EXPECT_EQ(e.issues().back().row, 3u);
  }
}

TEST(Manifest, BadHeaderIsRejected) {
  EXPECT_THROW(parse("id,path,label\n"), ValidationError);
  EXPECT_THROW(parse(""), ValidationError);
}

TEST(Manifest, SourceRegistryTokens) {
  for (const char* s : {"radiopaedia", "sirm", "eurorad", "figure1", "cohen-github", "twitter", "papers", "hannover",
                        "social-media", "nih-cxr14", "pediatric-gmc", "tuberculosis-nlm"}) {
    const auto src = parse_source(s);
    ASSERT_TRUE(src) << s;
    EXPECT_EQ(source_name(*src), s);
  }
}

TEST(Manifest, PaperScaleCountsMatchHeaderAudit) {
  const auto recs = synthetic_records(3200, 428);
  const auto s = summarize(recs);
  EXPECT_EQ(s.total, 3628u);
  std::map<std::string, std::size_t> per(s.per_label.begin(), s.per_label.end());
  EXPECT_EQ(per["NORMAL"], 3200u);
  EXPECT_EQ(per["CP"], 428u);
}

TEST(Manifest, WriteThenLoadRoundTrips) {
  test::TempDir dir;
  const auto recs = parse(header() + "a,sub/a.png,sirm,PA,CP\nb,b.png,twitter,AP,NORMAL\n");
  std::vector<ImageRecord> moved = recs;
  for (auto& r : moved) r.path = dir.path() / r.path.lexically_relative("/data");
  write_manifest(dir / "m.csv", moved);
  const auto back = load_manifest(dir / "m.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].path, dir.path() / "sub/a.png");
  EXPECT_EQ(back[1].source, Source::Twitter);
}

TEST(Split, PaperScaleTestSize) {
  // Per-stratum oracle: round(0.2 * 3200) + round(0.2 * 428) = 640 + 86.
  const auto recs = synthetic_records(3200, 428);
  const auto split = make_split(recs, {}, 7);
  EXPECT_EQ(split.test.size(), 726u);
  EXPECT_EQ(split.train.size(), 3628u - 726u);
  EXPECT_EQ(count_label(recs, split.test, Label::Normal), 640u);
  EXPECT_EQ(count_label(recs, split.test, Label::Cp), 86u);
}

TEST(Split, TenRecordsExactStratification) {
  const auto recs = synthetic_records(5, 5);
  const auto split = make_split(recs, {}, 1);
  EXPECT_EQ(split.train.size(), 8u);
  EXPECT_EQ(split.test.size(), 2u);
  EXPECT_EQ(count_label(recs, split.test, Label::Normal), 1u);
  EXPECT_EQ(count_label(recs, split.test, Label::Cp), 1u);
}

TEST(Split, SeedsChangeMembershipNotSizes) {
  const auto recs = synthetic_records(40, 30);
  const auto a = make_split(recs, {}, 1);
  const auto b = make_split(recs, {}, 2);
  EXPECT_NE(a.test, b.test);
  EXPECT_EQ(a.test.size(), b.test.size());
  EXPECT_EQ(a.train.size(), b.train.size());
}

TEST(Split, ClassWithOneRecordIsAnError) {
  EXPECT_THROW(make_split(synthetic_records(5, 1), {}, 0), ConfigError);
  EXPECT_THROW(make_split(synthetic_records(5, 5), {0.5, 0.6}, 0), ConfigError);
}

TEST(Split, SaveLoadRoundTrip) {
  test::TempDir dir;
  const auto split = make_split(synthetic_records(10, 10), {}, 3);
  save_split(dir / "s.json", split);
  EXPECT_EQ(load_split(dir / "s.json"), split);
}

TEST(Split, SubsetFollowsIdOrderAndRejectsUnknownIds) {
  const auto recs = synthetic_records(3, 3);
  const auto sub = subset(recs, {"r4", "r0"});
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub[0].id, "r4");
  EXPECT_THROW(subset(recs, {"nope"}), ConfigError);
}

// Property suite over random manifests: determinism, disjoint cover,
// stratification within 1/N_c and lateral exclusion.
TEST(SplitProperties, RandomManifests) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::ostringstream os;
    os << header();
    const int n = 6 + static_cast<int>(rng.index(120));
    int laterals = 0;
    for (int i = 0; i < n; ++i) {
      const char* labels[] = {"NORMAL", "CAP", "CP"};
      const bool lateral = rng.bernoulli(0.1);
      laterals += lateral;
      // First six rows guarantee two frontal records per class.
      const char* label = i < 6 ? labels[i % 3] : labels[rng.index(3)];
      os << "x" << i << ",x.png,sirm," << (lateral && i >= 6 ? "L" : "PA") << "," << label << "\n";
    }
    const auto recs = parse(os.str());
    const std::uint64_t seed = rng.next();
    const auto a = make_split(recs, {}, seed);
    ASSERT_EQ(a, make_split(recs, {}, seed));

    std::set<std::string> train(a.train.begin(), a.train.end());
    std::set<std::string> test(a.test.begin(), a.test.end());
    for (const auto& id : test) ASSERT_FALSE(train.count(id));
    std::map<Label, std::pair<int, int>> per;  // (train, total)
    for (const auto& r : recs) {
      if (r.lateral()) {
        ASSERT_FALSE(train.count(r.id) || test.count(r.id)) << "lateral record in split";
        continue;
      }
      ASSERT_TRUE(train.count(r.id) || test.count(r.id)) << "frontal record missing";
      per[r.label].second += 1;
      per[r.label].first += static_cast<int>(train.count(r.id));
    }
    for (const auto& [label, c] : per) {
      const double frac = static_cast<double>(c.first) / c.second;
      EXPECT_LE(std::abs(frac - 0.8), 1.0 / c.second + 1e-12) << "n_c=" << c.second;
    }
  }
}

TEST(ClassWeights, InverseFrequencyExamples) {
  const auto w = compute_class_weights(synthetic_records(3000, 400), Task::Binary);
  EXPECT_NEAR(w.weight(0), 3400.0 / (2 * 3000), 1e-12);
  EXPECT_NEAR(w.weight(1), 3400.0 / (2 * 400), 1e-12);
  EXPECT_NEAR(w.weight(0), 0.567, 1e-3);
  EXPECT_DOUBLE_EQ(w.weight(1), 4.25);

  const auto balanced = compute_class_weights(synthetic_records(25, 25), Task::Binary);
  EXPECT_DOUBLE_EQ(balanced.weight(0), 1.0);
  EXPECT_DOUBLE_EQ(balanced.weight(1), 1.0);

  const auto three = compute_class_weights(synthetic_records(3500, 700, 3500), Task::Multiclass);
  EXPECT_NEAR(three.weight(2), 7700.0 / (3 * 700), 1e-12);
  EXPECT_NEAR(three.weight(2), 3.667, 1e-3);
}

TEST(ClassWeights, EmptyClassIsAnError) {
  EXPECT_THROW(compute_class_weights(synthetic_records(10, 0), Task::Binary), ConfigError);
}

TEST(ClassWeightsProperties, WeightedCountIsConserved) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Label> labels;
    const Task task = rng.bernoulli(0.5) ? Task::Binary : Task::Multiclass;
    const int k = task_classes(task);
    std::vector<double> n(3, 0);
    for (int c = 0; c < k; ++c) {
      const int count = 1 + static_cast<int>(rng.index(5000));
      const Label l = task == Task::Binary ? (c == 0 ? Label::Normal : Label::Cp) : static_cast<Label>(c);
      labels.insert(labels.end(), static_cast<std::size_t>(count), l);
      n[static_cast<std::size_t>(c)] = count;
    }
    const auto w = compute_class_weights(labels, task);
    double weighted = 0;
    double total = 0;
    for (int c = 0; c < k; ++c) {
      EXPECT_GT(w.weight(c), 0);
      weighted += w.weight(c) * n[static_cast<std::size_t>(c)];
      total += n[static_cast<std::size_t>(c)];
    }
    EXPECT_LE(std::abs(weighted - total) / total, 1e-9);
  }
}

TEST(TaskSelection, BinaryRejectsCapAndLevelsFilter) {
  const auto recs = synthetic_records(3, 3, 2);
  EXPECT_THROW(select_for_task(recs, Task::Binary), ValidationError);
  EXPECT_EQ(select_for_task(recs, Task::Level2).size(), 5u);
  EXPECT_EQ(select_for_task(recs, Task::Level1).size(), 8u);
}

TEST(Duplicates, PixelHashGroupsCrossSourceCopies) {
  auto recs = load_manifest(test::fixture("manifest_dup.csv"));
  const auto dups = find_duplicates(recs);
  ASSERT_EQ(dups.size(), 1u);
  EXPECT_EQ(dups[0].ids, (std::vector<std::string>{"nihcxr01", "copy01"}));
  validate_images(recs);
  EXPECT_EQ(recs[0].width, 128);
}

TEST(Validation, UndecodableImageIsReportedByRow) {
  auto recs = parse(header() + "a,/nonexistent/a.png,sirm,PA,CP\n");
  EXPECT_THROW(validate_images(recs), ValidationError);
}

}  // namespace
}  // namespace cxnet::ingest
