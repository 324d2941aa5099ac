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

#include <numeric>
#include <set>
#include <sstream>

#include "cxnet/eval.hpp"
#include "cxnet/rng.hpp"

namespace cxnet::eval {
namespace {

const std::vector<Label> kBinary{Label::Normal, Label::Cp};
const std::vector<Label> kThree{Label::Normal, Label::Cap, Label::Cp};

double pct(double accuracy) { return round_to(100.0 * accuracy, 2); }

TEST(ReferenceMatrices, BaseModelExternalTest) {
  const auto s = scores(from_counts(kBinary, {{21, 9}, {3, 27}}));
  EXPECT_DOUBLE_EQ(s.accuracy, 48.0 / 60.0);
  EXPECT_EQ(pct(s.accuracy), 80.0);
}

TEST(ReferenceMatrices, BaseModel) {
  const auto s = scores(from_counts(kBinary, {{598, 5}, {4, 76}}));
  EXPECT_EQ(pct(s.accuracy), 98.68);
  EXPECT_EQ(round_to(s.of(Label::Cp).f1, 2), 0.94);
}

TEST(ReferenceMatrices, BinaryNetwork) {
  const auto s = scores(from_counts(kBinary, {{641, 4}, {3, 78}}));
  EXPECT_EQ(pct(s.accuracy), 99.04);
  const double p = 78.0 / 82.0, r = 78.0 / 81.0;
  EXPECT_NEAR(s.of(Label::Cp).f1, 2 * p * r / (p + r), 1e-12);
  EXPECT_EQ(round_to(s.of(Label::Cp).f1, 2), 0.96);
}

TEST(ReferenceMatrices, FlatMulticlass) {
  const auto s = scores(from_counts(kThree, {{671, 44, 9}, {205, 451, 16}, {6, 12, 126}}));
  EXPECT_EQ(pct(s.accuracy), 81.04);
  EXPECT_EQ(round_to(s.of(Label::Cp).f1, 2), 0.85);
  // 902 / 1179 = 0.76505, which rounds to 0.77.
  EXPECT_NEAR(s.of(Label::Cap).f1, 902.0 / 1179.0, 1e-12);
}

TEST(ReferenceMatrices, HierarchicalMulticlass) {
  const auto s = scores(from_counts(kThree, {{689, 32, 3}, {143, 524, 5}, {3, 11, 130}}));
  EXPECT_EQ(pct(s.accuracy), 87.21);
  EXPECT_EQ(round_to(s.of(Label::Cp).f1, 2), 0.92);
  EXPECT_EQ(round_to(s.of(Label::Cap).f1, 2), 0.85);
}

TEST(Confusion, CountsAndClassOrder) {
  const std::vector<Label> actual{Label::Normal, Label::Cp, Label::Cp, Label::Normal};
  const auto m = confusion(actual, actual);
  EXPECT_EQ(m.classes, kBinary);
  EXPECT_EQ(m.counts, (std::vector<std::vector<long>>{{2, 0}, {0, 2}}));
  const auto m3 = confusion({Label::Cap, Label::Cp}, {Label::Normal, Label::Cp});
  EXPECT_EQ(m3.classes, kThree);
  EXPECT_EQ(m3.at(Label::Normal, Label::Cap), 1);
  EXPECT_THROW(confusion({Label::Cp}, {}), ConfigError);
  EXPECT_THROW(confusion({}, {}), ConfigError);
  EXPECT_THROW(from_counts(kBinary, {{1, -1}, {0, 0}}), ConfigError);
  EXPECT_THROW(from_counts(kBinary, {{1, 1, 1}, {0, 0, 0}}), ConfigError);
}

TEST(Scores, ZeroDenominatorsAreFlagged) {
  const auto s = scores(from_counts(kBinary, {{5, 0}, {0, 0}}));
  EXPECT_EQ(s.accuracy, 1.0);
  const auto& cp = s.of(Label::Cp);
  EXPECT_TRUE(cp.precision_undefined);
  EXPECT_TRUE(cp.recall_undefined);
  EXPECT_TRUE(cp.f1_undefined);
  EXPECT_EQ(cp.f1, 0.0);
  EXPECT_THROW(scores(from_counts(kBinary, {{0, 0}, {0, 0}})), ConfigError);
}

std::vector<Label> random_labels(Rng& rng, std::size_t n, int k) {
  std::vector<Label> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(k == 2 ? kBinary[rng.index(2)] : kThree[rng.index(3)]);
  return out;
}

TEST(ScoresProperty, RecomputedFromTheMatrix) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = trial % 2 ? 3 : 2;
    const std::size_t n = 1 + rng.index(300);
    const auto pred = random_labels(rng, n, k), actual = random_labels(rng, n, k);
    const auto m = confusion(pred, actual, k == 3 ? kThree : kBinary);
    EXPECT_EQ(m.total(), static_cast<long>(n));
    for (std::size_t c = 0; c < m.classes.size(); ++c)
      EXPECT_EQ(m.row_sums()[c], std::count(actual.begin(), actual.end(), m.classes[c]));
    const auto s = scores(m);
    long hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += pred[i] == actual[i];
    EXPECT_NEAR(s.accuracy, static_cast<double>(hits) / n, 1e-9);
    for (const auto& cs : s.per_class) {
      long tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += pred[i] == cs.label && actual[i] == cs.label;
        fp += pred[i] == cs.label && actual[i] != cs.label;
        fn += pred[i] != cs.label && actual[i] == cs.label;
      }
      const double p = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
      const double r = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
      EXPECT_NEAR(cs.precision, p, 1e-9);
      EXPECT_NEAR(cs.recall, r, 1e-9);
      EXPECT_NEAR(cs.f1, p + r > 0 ? 2 * p * r / (p + r) : 0.0, 1e-9);
    }
  }
}

double pairwise_auc(const std::vector<double>& s, const std::vector<bool>& pos) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

TEST(Auc, TrapezoidEqualsPairwiseCountOnRandomFixtures) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(200);
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    // Coarse scores on odd trials force ties.
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = i == 0 || (i != 1 && rng.bernoulli(0.3));
      s[i] = trial % 2 ? static_cast<double>(rng.index(5)) / 4 : rng.uniform() + (pos[i] ? 0.2 : 0.0);
    }
    const double expected = pairwise_auc(s, pos);
    EXPECT_NEAR(roc_auc(s, pos).auc, expected, 1e-12) << trial;
    EXPECT_NEAR(mann_whitney_auc(s, pos), expected, 1e-12) << trial;
  }
}

TEST(Auc, TwentyFixedScores) {
  const std::vector<double> s{0.9, 0.8, 0.8, 0.7, 0.65, 0.6, 0.6, 0.55, 0.5, 0.45,
                              0.4, 0.4, 0.35, 0.3, 0.25, 0.2, 0.2, 0.15, 0.1, 0.05};
  std::vector<bool> pos;
  for (int i = 0; i < 20; ++i) pos.push_back(i % 3 != 2);
  EXPECT_NEAR(roc_auc(s, pos).auc, pairwise_auc(s, pos), 1e-12);
}

TEST(Auc, SeparatedRandomAndDegenerate) {
  const auto roc = roc_auc({0.1, 0.2, 0.8, 0.9}, {false, false, true, true});
  EXPECT_EQ(roc.auc, 1.0);
  EXPECT_EQ(roc.points.front().fpr, 0.0);
  EXPECT_EQ(roc.points.front().tpr, 0.0);
  EXPECT_EQ(roc.points.back().fpr, 1.0);
  EXPECT_EQ(roc.points.back().tpr, 1.0);
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    EXPECT_GE(roc.points[i].fpr, roc.points[i - 1].fpr);
    EXPECT_GE(roc.points[i].tpr, roc.points[i - 1].tpr);
  }
  EXPECT_EQ(roc_auc({0.9, 0.8}, {false, true}).auc, 0.0);

  // Scores are the labels shuffled: no information.
  Rng rng(5);
  std::vector<bool> labels(1000);
  for (auto&& l : labels) l = rng.bernoulli(0.5);
  std::vector<bool> shuffled = labels;
  std::vector<std::size_t> order(1000);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  std::vector<double> s(1000);
  for (std::size_t i = 0; i < 1000; ++i) s[i] = labels[order[i]] ? 1.0 : 0.0;
  EXPECT_NEAR(roc_auc(s, labels).auc, 0.5, 0.05);

  EXPECT_THROW(roc_auc({0.1, 0.2}, {true, true}), ConfigError);
  EXPECT_THROW(roc_auc({0.1}, {true, false}), ConfigError);
  EXPECT_THROW(roc_auc({NAN, 0.2}, {true, false}), ConfigError);
}

TEST(RepeatedRuns, SeedVariationWidensTheInterval) {
  const auto seeds = run_seeds(7, 10);
  EXPECT_EQ(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size(), 10u);
  const auto r = repeated_runs([](std::uint64_t seed) { return 0.9 + 0.01 * static_cast<double>(seed % 7); }, seeds);
  EXPECT_EQ(r.accuracies.size(), 10u);
  EXPECT_GT(r.max - r.min, 0.0);
  EXPECT_LE(r.min, r.mean);
  EXPECT_LE(r.mean, r.max);
  double mean = 0;
  for (double a : r.accuracies) mean += a / 10;
  double var = 0;
  for (double a : r.accuracies) var += (a - mean) * (a - mean) / 9;
  EXPECT_NEAR(r.mean, mean, 1e-12);
  EXPECT_NEAR(r.stddev, std::sqrt(var), 1e-12);
}

TEST(RepeatedRuns, IdenticalSeedsGiveZeroWidth) {
  const auto r = repeated_runs([](std::uint64_t seed) { return 0.5 + 1e-3 * static_cast<double>(seed); }, {4, 4, 4});
  EXPECT_EQ(r.max, r.min);
  EXPECT_EQ(r.stddev, 0.0);
}

TEST(RepeatedRuns, FailureKeepsPartialResults) {
  int calls = 0;
  try {
    repeated_runs(
        [&](std::uint64_t) {
          if (++calls == 3) throw std::runtime_error("diverged");
          return 0.8;
        },
        {1, 2, 3, 4});
    FAIL() << "expected RepeatedRunsError";
  } catch (const RepeatedRunsError& e) {
    EXPECT_EQ(e.partial().seeds, (std::vector<std::uint64_t>{1, 2}));
    EXPECT_EQ(e.partial().accuracies.size(), 2u);
    EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos);
  }
  EXPECT_EQ(calls, 3);
  EXPECT_THROW(repeated_runs([](std::uint64_t) { return 1.0; }, {1}), ConfigError);
}

TEST(Report, BinaryAndMulticlassCurves) {
  const std::vector<Label> actual{Label::Normal, Label::Cp, Label::Cp, Label::Normal};
  const std::vector<Label> pred{Label::Normal, Label::Cp, Label::Normal, Label::Normal};
  const auto r = make_report(pred, actual, {{0.1}, {0.9}, {0.4}, {0.3}});
  ASSERT_EQ(r.roc.size(), 1u);
  EXPECT_EQ(r.roc[0].first, Label::Cp);
  EXPECT_EQ(r.roc[0].second.auc, 1.0);
  const auto j = r.to_json();
  EXPECT_EQ(j.at("accuracy"), 0.75);

  const std::vector<Label> a3{Label::Normal, Label::Cap, Label::Cp};
  const auto r3 = make_report(a3, a3, {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}});
  EXPECT_EQ(r3.roc.size(), 3u);
  EXPECT_THROW(make_report(a3, a3, {{0.5}, {0.5}, {0.5}}), ConfigError);
}

TEST(Format, ConfusionTableAndRocCsv) {
  const auto text = format_confusion(from_counts(kBinary, {{641, 4}, {3, 78}}));
  std::istringstream in(text);
  std::string l1, l2, l3, l4;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  std::getline(in, l4);
  EXPECT_NE(l1.find("Predicted"), std::string::npos);
  EXPECT_EQ(l2.rfind("Actual", 0), 0u);
  EXPECT_NE(l3.find("NORMAL"), std::string::npos);
  EXPECT_NE(l3.find("641"), std::string::npos);
  EXPECT_EQ(l3.size(), l4.size());
  const auto csv = roc_csv(roc_auc({0.2, 0.7}, {false, true}));
  EXPECT_EQ(csv.rfind("threshold,fpr,tpr\ninf,0,0\n", 0), 0u);
}

TEST(Rounding, HalfUpAtTwoDecimals) {
  EXPECT_EQ(round_to(0.765055, 2), 0.77);
  EXPECT_EQ(round_to(0.125, 2), 0.13);
  EXPECT_EQ(round_to(98.6823, 2), 98.68);
  EXPECT_EQ(round_to(0.95706, 2), 0.96);
}

}  // namespace
}  // namespace cxnet::eval
