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

#include <benchmark/benchmark.h>

#include "cxnet/eval.hpp"
#include "cxnet/explain.hpp"
#include "cxnet/models.hpp"

namespace {

using namespace cxnet;

enhance::ChannelStack noise_stack(int side, std::uint64_t seed) {
  Rng rng(seed);
  enhance::ChannelStack s;
  for (auto& p : s.planes) {
    p = Plane(side, side);
    for (auto& v : p.pixels()) v = rng.uniform();
  }
  return s;
}

void BM_GradCam(benchmark::State& state) {
  models::Classifier model(models::build_base_cnn(64, 64, 1, 2));
  const auto stack = noise_stack(64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(explain::grad_cam(model, stack, Label::Cp));
}
BENCHMARK(BM_GradCam)->Unit(benchmark::kMillisecond);

void BM_Slic(benchmark::State& state) {
  const auto stack = noise_stack(static_cast<int>(state.range(0)), 2);
  explain::SlicOptions opts;
  opts.n_segments = 50;
  for (auto _ : state) benchmark::DoNotOptimize(explain::slic(stack.planes[0], opts));
}
BENCHMARK(BM_Slic)->Arg(64)->Arg(224)->Unit(benchmark::kMillisecond);

void BM_RocAuc(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<bool> positive(n);
  for (std::size_t i = 0; i < n; ++i) {
    positive[i] = rng.bernoulli(0.3);
    scores[i] = rng.uniform() + (positive[i] ? 0.3 : 0.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::roc_auc(scores, positive));
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(100000);

void BM_ComposeHierarchical(benchmark::State& state) {
  Rng rng(4);
  std::vector<std::pair<double, double>> ps(1024);
  for (auto& p : ps) p = {rng.uniform(), rng.uniform()};
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [p1, p2] = ps[i++ & 1023];
    benchmark::DoNotOptimize(models::compose_hierarchical(p1, p2));
  }
}
BENCHMARK(BM_ComposeHierarchical);

}  // namespace

BENCHMARK_MAIN();
