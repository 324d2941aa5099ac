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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cxnet/error.hpp"
#include "cxnet/labels.hpp"

namespace cxnet::eval {

/// counts[actual][predicted] over a fixed class order.
struct ConfusionMatrix {
  std::vector<Label> classes;
  std::vector<std::vector<long>> counts;

  long total() const;
  long at(Label actual, Label predicted) const;
  std::size_t index(Label label) const;
  std::vector<long> row_sums() const;
};

/// Class order (NORMAL, CAP, CP) when CAP occurs in either list, else (NORMAL, CP).
std::vector<Label> default_classes(const std::vector<Label>& pred, const std::vector<Label>& actual);
ConfusionMatrix confusion(const std::vector<Label>& pred, const std::vector<Label>& actual,
                          std::vector<Label> classes = {});
ConfusionMatrix from_counts(std::vector<Label> classes, std::vector<std::vector<long>> counts);

struct ClassScores {
  Label label = Label::Normal;
  long support = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  bool precision_undefined = false;  // zero denominator, reported as 0
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct Scores {
  double accuracy = 0;
  std::vector<ClassScores> per_class;

  const ClassScores& of(Label label) const;
};

Scores scores(const ConfusionMatrix& m);

struct RocPoint {
  double threshold = 0;
  double fpr = 0;
  double tpr = 0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0, 0) to (1, 1)
  double auc = 0;
};

/// Threshold sweep over the unique scores (descending); AUC by the trapezoid rule.
RocCurve roc_auc(const std::vector<double>& scores, const std::vector<bool>& positive);
/// Pairwise statistic: P(score_pos > score_neg) + 0.5 P(tie).
double mann_whitney_auc(const std::vector<double>& scores, const std::vector<bool>& positive);

struct RunSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracies;  // completed runs only
  double mean = 0;
  double min = 0;
  double max = 0;
  double stddev = 0;  // sample standard deviation

  nlohmann::json to_json() const;
};

RunSummary summarize_runs(std::vector<std::uint64_t> seeds, std::vector<double> accuracies);

/// A run failed; the summary of the runs before it is kept.
class RepeatedRunsError : public Error {
 public:
  RepeatedRunsError(const std::string& what, RunSummary partial) : Error(what), partial_(std::move(partial)) {}
  const RunSummary& partial() const noexcept { return partial_; }

 private:
  RunSummary partial_;
};

/// Calls `run(seed)` for each seed in order; run returns the accuracy.
RunSummary repeated_runs(const std::function<double(std::uint64_t seed)>& run, const std::vector<std::uint64_t>& seeds);
/// n_runs distinct seeds derived from `base_seed`.
std::vector<std::uint64_t> run_seeds(std::uint64_t base_seed, int n_runs);

struct EvaluationReport {
  ConfusionMatrix matrix;
  Scores scores;
  std::vector<std::pair<Label, RocCurve>> roc;  // one-vs-rest per class; binary: the positive class
  std::optional<RunSummary> runs;

  nlohmann::json to_json() const;
};

EvaluationReport make_report(const std::vector<Label>& pred, const std::vector<Label>& actual,
                             const std::vector<std::vector<double>>& probabilities, std::vector<Label> classes = {});

/// Aligned text table: "Actual" rows, "Predicted" columns.
std::string format_confusion(const ConfusionMatrix& m);
std::string roc_csv(const RocCurve& roc);

/// Half-up rounding to `decimals` places.
double round_to(double value, int decimals);

}  // namespace cxnet::eval
