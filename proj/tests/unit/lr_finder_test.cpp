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

#include <cmath>

#include "cxnet/lr_finder.hpp"
#include "support.hpp"

namespace cxnet::models {
namespace {

// Least squares 0.5 * mean((Aw - b)^2) with feature scales spread over 0.5..2.
struct LeastSquares {
  int n = 200, d = 10;
  std::vector<double> a, b;

  explicit LeastSquares(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> truth(static_cast<std::size_t>(d));
    for (auto& v : truth) v = rng.normal();
    for (int i = 0; i < n; ++i) {
      double y = 0;
      for (int j = 0; j < d; ++j) {
        const double x = rng.normal() * (0.5 + 1.5 * j / (d - 1));
        a.push_back(x);
        y += x * truth[static_cast<std::size_t>(j)];
      }
      b.push_back(y + 0.1 * rng.normal());
    }
  }

  double loss(const std::vector<double>& w, std::vector<double>* grad = nullptr) const {
    double l = 0;
    if (grad) grad->assign(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < n; ++i) {
      double r = -b[static_cast<std::size_t>(i)];
      for (int j = 0; j < d; ++j) r += a[static_cast<std::size_t>(i * d + j)] * w[static_cast<std::size_t>(j)];
      l += 0.5 * r * r / n;
      if (grad)
        for (int j = 0; j < d; ++j) (*grad)[static_cast<std::size_t>(j)] += a[static_cast<std::size_t>(i * d + j)] * r / n;
    }
    return l;
  }

  // Loss before a gradient step at `lr`, then the step.
  double step(std::vector<double>& w, double lr) const {
    std::vector<double> g;
    const double l = loss(w, &g);
    for (int j = 0; j < d; ++j) w[static_cast<std::size_t>(j)] -= lr * g[static_cast<std::size_t>(j)];
    return l;
  }
};

// Fixed rates on a log grid, 20 steps each: the window holds every rate that
// gets within 10% of the best achievable reduction.
std::pair<double, double> good_window(const LeastSquares& p) {
  std::vector<double> grid, final_loss;
  for (int k = 0; k <= 50; ++k) grid.push_back(std::pow(10.0, -4.0 + 0.1 * k));
  const std::vector<double> zero(static_cast<std::size_t>(p.d), 0.0);
  for (double lr : grid) {
    auto w = zero;
    for (int s = 0; s < 20; ++s) p.step(w, lr);
    const double l = p.loss(w);
    final_loss.push_back(std::isfinite(l) ? l : INFINITY);
  }
  const double start = p.loss(zero);
  const double best = *std::min_element(final_loss.begin(), final_loss.end());
  double lo = INFINITY, hi = 0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (final_loss[k] <= best + 0.1 * (start - best)) {
      lo = std::min(lo, grid[k]);
      hi = std::max(hi, grid[k]);
    }
  return {lo, hi};
}

TEST(LrRangeTest, ConvexTaskLandsInsideGridSearchWindow) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const LeastSquares p(seed);
    const auto [lo, hi] = good_window(p);
    ASSERT_LT(lo, hi);
    std::vector<double> w(static_cast<std::size_t>(p.d), 0.0);
    LrFinderOptions o;
    o.lr_min = 1e-4;
    o.lr_max = 10;
    const auto r = lr_range_test([&](double lr) { return p.step(w, lr); }, o);
    EXPECT_GE(r.learning_rate, lo) << seed;
    EXPECT_LE(r.learning_rate, hi) << seed;
    EXPECT_EQ(r.learning_rate, r.trace.lr[r.index]);
  }
}

TEST(LrRangeTest, SweepIsExponentialAndStopsOnDivergence) {
  const LeastSquares p(3);
  std::vector<double> w(static_cast<std::size_t>(p.d), 0.0);
  LrFinderOptions o;
  o.lr_min = 1e-4;
  o.lr_max = 100;
  const auto r = lr_range_test([&](double lr) { return p.step(w, lr); }, o);
  ASSERT_GE(r.trace.lr.size(), 2u);
  EXPECT_DOUBLE_EQ(r.trace.lr[0], 1e-4);
  const double ratio = r.trace.lr[1] / r.trace.lr[0];
  EXPECT_NEAR(ratio, std::pow(1e6, 1.0 / 99), 1e-12);
  for (std::size_t i = 1; i < r.trace.lr.size(); ++i) EXPECT_NEAR(r.trace.lr[i] / r.trace.lr[i - 1], ratio, 1e-9);
  // GD blows up past 2/L, long before 100.
  EXPECT_LT(r.trace.lr.size(), 100u);
  EXPECT_TRUE(std::isfinite(r.learning_rate));
}

TEST(LrRangeTest, SmoothedLossIsBiasCorrectedEma) {
  const std::vector<double> losses{5, 4, 6, 3, 2, 2.5, 1, 1, 0.5, 0.4, 0.3, 0.3, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  std::size_t i = 0;
  const auto r = lr_range_test([&](double) { return losses[i++]; }, {1e-3, 1, 20, 0.5, 1e9});
  double avg = 0;
  for (std::size_t k = 0; k < losses.size(); ++k) {
    avg = 0.5 * avg + 0.5 * losses[k];
    EXPECT_NEAR(r.trace.smoothed[k], avg / (1 - std::pow(0.5, static_cast<double>(k + 1))), 1e-12);
  }
}

TEST(LrRangeTest, InvalidRangesAreRejected) {
  const LrStep step = [](double) { return 1.0; };
  EXPECT_THROW(lr_range_test(step, {1e-3, 1e-3, 100}), ConfigError);
  EXPECT_THROW(lr_range_test(step, {1e-2, 1e-3, 100}), ConfigError);
  EXPECT_THROW(lr_range_test(step, {1e-5, 1, 19}), ConfigError);
  EXPECT_THROW(lr_range_test(step, {0.0, 1, 100}), ConfigError);
}

TEST(LrRangeTest, NonDecreasingLossCarriesTheTrace) {
  int calls = 0;
  try {
    lr_range_test([&](double) { return 1.0 + 0.01 * calls++; }, {1e-5, 1, 30});
    FAIL() << "expected LrFinderError";
  } catch (const LrFinderError& e) {
    EXPECT_EQ(e.trace().lr.size(), 30u);
    EXPECT_EQ(e.trace().loss.front(), 1.0);
  }
}

TEST(LrRangeTest, NonFiniteLossEndsTheSweep) {
  int calls = 0;
  const auto r = lr_range_test(
      [&](double) {
        ++calls;
        return calls < 25 ? 10.0 / calls : NAN;
      },
      {1e-5, 1, 60});
  EXPECT_EQ(calls, 25);
  EXPECT_EQ(r.trace.loss.size(), 25u);
  EXPECT_EQ(r.trace.smoothed.size(), 24u);
  EXPECT_LT(r.index, 24u);
}

TEST(FindLearningRate, ModelSweepIsFiniteAndRestoresWeights) {
  const auto data = test::planted_square_dataset(12, 32, 8, 9);
  Classifier model(build_base_cnn(32, 32, 1, 2));
  const auto before = model.network().params().state();
  TrainConfig cfg;
  cfg.batch_size = 4;
  const auto r = find_learning_rate(model, data, cfg, {1e-5, 1, 30});
  EXPECT_TRUE(std::isfinite(r.learning_rate));
  EXPECT_GT(r.learning_rate, 0);
  EXPECT_LT(r.trace.smoothed[r.index + 1], r.trace.smoothed[r.index]);
  EXPECT_EQ(model.network().params().state(), before);
}

}  // namespace
}  // namespace cxnet::models
