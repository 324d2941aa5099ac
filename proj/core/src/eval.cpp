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

#include "cxnet/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "cxnet/rng.hpp"

namespace cxnet::eval {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Confusion matrix

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::size_t ConfusionMatrix::index(Label label) const {
  const auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) throw ConfigError("label " + std::string(label_name(label)) + " is not in the matrix");
  return static_cast<std::size_t>(it - classes.begin());
}

long ConfusionMatrix::at(Label actual, Label predicted) const { return counts[index(actual)][index(predicted)]; }

std::vector<long> ConfusionMatrix::row_sums() const {
  std::vector<long> out;
  for (const auto& row : counts) out.push_back(std::accumulate(row.begin(), row.end(), 0L));
  return out;
}

std::vector<Label> default_classes(const std::vector<Label>& pred, const std::vector<Label>& actual) {
  const bool cap = std::find(pred.begin(), pred.end(), Label::Cap) != pred.end() ||
                   std::find(actual.begin(), actual.end(), Label::Cap) != actual.end();
  if (cap) return {Label::Normal, Label::Cap, Label::Cp};
  return {Label::Normal, Label::Cp};
}

ConfusionMatrix confusion(const std::vector<Label>& pred, const std::vector<Label>& actual, std::vector<Label> classes) {
  if (pred.size() != actual.size()) {
    throw ConfigError("prediction and label counts differ (" + std::to_string(pred.size()) + " vs " +
                      std::to_string(actual.size()) + ")");
  }
  if (pred.empty()) throw ConfigError("confusion matrix of nothing");
  if (classes.empty()) classes = default_classes(pred, actual);
  ConfusionMatrix m;
  m.classes = std::move(classes);
  m.counts.assign(m.classes.size(), std::vector<long>(m.classes.size(), 0));
  for (std::size_t i = 0; i < pred.size(); ++i) ++m.counts[m.index(actual[i])][m.index(pred[i])];
  return m;
}

ConfusionMatrix from_counts(std::vector<Label> classes, std::vector<std::vector<long>> counts) {
  if (counts.size() != classes.size()) throw ConfigError("confusion matrix row count differs from class count");
  for (const auto& row : counts) {
    if (row.size() != classes.size()) throw ConfigError("confusion matrix must be square");
    for (auto v : row) {
      if (v < 0) throw ConfigError("confusion counts must be non-negative");
    }
  }
  return {std::move(classes), std::move(counts)};
}

// ---------------------------------------------------------------------------
// Scores

const ClassScores& Scores::of(Label label) const {
  for (const auto& c : per_class) {
    if (c.label == label) return c;
  }
  throw ConfigError("no scores for label " + std::string(label_name(label)));
}

Scores scores(const ConfusionMatrix& m) {
  const long total = m.total();
  if (total <= 0) throw ConfigError("scores need a non-empty confusion matrix");
  Scores s;
  long trace = 0;
  const std::size_t k = m.classes.size();
  for (std::size_t i = 0; i < k; ++i) trace += m.counts[i][i];
  s.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  for (std::size_t i = 0; i < k; ++i) {
    ClassScores c;
    c.label = m.classes[i];
    const long tp = m.counts[i][i];
    long predicted = 0;
    long actual = 0;
    for (std::size_t j = 0; j < k; ++j) {
      predicted += m.counts[j][i];
      actual += m.counts[i][j];
    }
    c.support = actual;
    c.precision_undefined = predicted == 0;
    c.recall_undefined = actual == 0;
    c.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    c.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    const double denom = c.precision + c.recall;
    c.f1_undefined = denom == 0;
    c.f1 = denom > 0 ? 2 * c.precision * c.recall / denom : 0.0;
    s.per_class.push_back(c);
  }
  return s;
}

// ---------------------------------------------------------------------------
// ROC

namespace {

void check_roc_input(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw ConfigError("score and label counts differ");
  const auto pos = std::count(positive.begin(), positive.end(), true);
  if (pos == 0 || pos == static_cast<long>(positive.size())) throw ConfigError("ROC needs both classes present");
  for (double v : scores) {
    if (!std::isfinite(v)) throw ConfigError("scores must be finite");
  }
}

}  // namespace

RocCurve roc_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  check_roc_input(scores, positive);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double p = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double n = static_cast<double>(positive.size()) - p;

  RocCurve roc;
  roc.points.push_back({INFINITY, 0.0, 0.0});
  long tp = 0;
  long fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      positive[order[i]] ? ++tp : ++fp;
      ++i;
    }
    roc.points.push_back({t, fp / n, tp / p});
  }
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    const auto& a = roc.points[i - 1];
    const auto& b = roc.points[i];
    roc.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2;
  }
  return roc;
}

double mann_whitney_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  check_roc_input(scores, positive);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks (doubled to stay integral).
  long long rank_sum2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const long long mid2 = static_cast<long long>(i + 1 + j);  // 2 * average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) rank_sum2 += mid2;
    }
    i = j;
  }
  const long long p = std::count(positive.begin(), positive.end(), true);
  const long long n = static_cast<long long>(positive.size()) - p;
  const long long u2 = rank_sum2 - p * (p + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(p) * static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Repeated runs

json RunSummary::to_json() const {
  return {{"runs", accuracies.size()}, {"seeds", seeds},  {"accuracies", accuracies}, {"mean", mean},
          {"min", min},                {"max", max},      {"stddev", stddev}};
}

RunSummary summarize_runs(std::vector<std::uint64_t> seeds, std::vector<double> accuracies) {
  RunSummary s;
  s.seeds = std::move(seeds);
  s.accuracies = std::move(accuracies);
  if (s.accuracies.empty()) return s;
  const double n = static_cast<double>(s.accuracies.size());
  s.mean = std::accumulate(s.accuracies.begin(), s.accuracies.end(), 0.0) / n;
  const auto [lo, hi] = std::minmax_element(s.accuracies.begin(), s.accuracies.end());
  s.min = *lo;
  s.max = *hi;
  if (s.accuracies.size() > 1) {
    double ss = 0;
    for (double a : s.accuracies) ss += (a - s.mean) * (a - s.mean);
    s.stddev = std::sqrt(ss / (n - 1));
  }
  return s;
}

std::vector<std::uint64_t> run_seeds(std::uint64_t base_seed, int n_runs) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n_runs; ++i) out.push_back(derive_seed(base_seed, 0x52554E, static_cast<std::uint64_t>(i)));
  return out;
}

RunSummary repeated_runs(const std::function<double(std::uint64_t)>& run, const std::vector<std::uint64_t>& seeds) {
  if (seeds.size() < 2) throw ConfigError("repeated runs need at least 2 runs");
  std::vector<std::uint64_t> done;
  std::vector<double> acc;
  for (const auto seed : seeds) {
    try {
      acc.push_back(run(seed));
      done.push_back(seed);
    } catch (const std::exception& e) {
      throw RepeatedRunsError("run " + std::to_string(done.size() + 1) + " failed: " + e.what(),
                              summarize_runs(done, acc));
    }
  }
  return summarize_runs(done, acc);
}

// ---------------------------------------------------------------------------
// Reports

EvaluationReport make_report(const std::vector<Label>& pred, const std::vector<Label>& actual,
                             const std::vector<std::vector<double>>& probabilities, std::vector<Label> classes) {
  EvaluationReport r;
  r.matrix = confusion(pred, actual, std::move(classes));
  r.scores = scores(r.matrix);
  if (probabilities.empty()) return r;
  if (probabilities.size() != actual.size()) throw ConfigError("probability and label counts differ");
  const std::size_t width = probabilities.front().size();
  const std::size_t k = r.matrix.classes.size();
  auto add_curve = [&](Label label, std::size_t column) {
    std::vector<double> s;
    std::vector<bool> pos;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      s.push_back(probabilities[i].at(column));
      pos.push_back(actual[i] == label);
    }
    const auto n_pos = std::count(pos.begin(), pos.end(), true);
    if (n_pos == 0 || n_pos == static_cast<long>(pos.size())) return;
    r.roc.emplace_back(label, roc_auc(s, pos));
  };
  if (width == 1) {
    if (k != 2) throw ConfigError("single-probability outputs need a two-class matrix");
    add_curve(r.matrix.classes[1], 0);
  } else if (width == 3) {
    const std::array<Label, 3> columns{Label::Normal, Label::Cap, Label::Cp};
    for (std::size_t c = 0; c < 3; ++c) {
      if (std::find(r.matrix.classes.begin(), r.matrix.classes.end(), columns[c]) != r.matrix.classes.end()) {
        add_curve(columns[c], c);
      }
    }
  } else {
    throw ConfigError("probability vectors must have 1 or 3 entries");
  }
  return r;
}

json EvaluationReport::to_json() const {
  json classes = json::array();
  for (auto c : matrix.classes) classes.push_back(label_name(c));
  json per_class = json::object();
  for (const auto& c : scores.per_class) {
    per_class[std::string(label_name(c.label))] = {{"precision", c.precision},
                                                   {"recall", c.recall},
                                                   {"f1", c.f1},
                                                   {"support", c.support},
                                                   {"precision_undefined", c.precision_undefined},
                                                   {"recall_undefined", c.recall_undefined},
                                                   {"f1_undefined", c.f1_undefined}};
  }
  json j = {{"classes", classes},
            {"confusion_matrix", matrix.counts},
            {"total", matrix.total()},
            {"accuracy", scores.accuracy},
            {"per_class", per_class}};
  json auc = json::object();
  for (const auto& [label, curve] : roc) auc[std::string(label_name(label))] = curve.auc;
  j["auc"] = auc;
  if (runs) j["runs"] = runs->to_json();
  return j;
}

std::string format_confusion(const ConfusionMatrix& m) {
  std::size_t width = 6;
  for (auto c : m.classes) width = std::max(width, label_name(c).size());
  for (const auto& row : m.counts) {
    for (auto v : row) width = std::max(width, std::to_string(v).size());
  }
  const std::size_t head = std::max<std::size_t>(width, 6) + 8;
  std::ostringstream out;
  out << std::setw(static_cast<int>(head)) << "" << "Predicted\n";
  out << std::left << std::setw(static_cast<int>(head)) << "Actual";
  for (auto c : m.classes) out << std::right << std::setw(static_cast<int>(width + 2)) << label_name(c);
  out << '\n';
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(head)) << ("  " + std::string(label_name(m.classes[i])));
    for (auto v : m.counts[i]) out << std::right << std::setw(static_cast<int>(width + 2)) << v;
    out << '\n';
  }
  return out.str();
}

std::string roc_csv(const RocCurve& roc) {
  std::ostringstream out;
  out << "threshold,fpr,tpr\n" << std::setprecision(17);
  for (const auto& p : roc.points) {
    if (std::isinf(p.threshold)) {
      out << "inf";
    } else {
      out << p.threshold;
    }
    out << ',' << p.fpr << ',' << p.tpr << '\n';
  }
  return out.str();
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

}  // namespace cxnet::eval
