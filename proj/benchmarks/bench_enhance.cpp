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

#include "cxnet/enhance.hpp"
#include "cxnet/lungseg.hpp"
#include "cxnet/rng.hpp"

namespace {

using namespace cxnet;

// Smooth gradient plus noise, roughly the histogram of a radiograph.
GrayImage synthetic_cxr(int size) {
  Rng rng(1);
  GrayImage img(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double v = 60 + 120.0 * r / size + 30 * rng.uniform();
      img(r, c) = static_cast<std::uint8_t>(std::min(255.0, v));
    }
  return img;
}

void BM_HistEqualize(benchmark::State& state) {
  const auto img = synthetic_cxr(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(enhance::hist_equalize(img));
}
BENCHMARK(BM_HistEqualize)->Arg(320)->Arg(1024);

void BM_Clahe(benchmark::State& state) {
  const auto img = synthetic_cxr(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(enhance::clahe(img, {8, 8, 2.0}));
}
BENCHMARK(BM_Clahe)->Arg(320)->Arg(1024);

void BM_Beasf(benchmark::State& state) {
  const auto img = synthetic_cxr(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(enhance::beasf(img, {1.5}));
}
BENCHMARK(BM_Beasf)->Arg(320)->Arg(1024);

void BM_BuildStack(benchmark::State& state) {
  const auto img = synthetic_cxr(1024);
  enhance::StackParams params;
  for (auto _ : state) benchmark::DoNotOptimize(enhance::build_stack(img, params));
}
BENCHMARK(BM_BuildStack)->Unit(benchmark::kMillisecond);

void BM_PostprocessMask(benchmark::State& state) {
  lungseg::LungMask m;
  m.mask = BinaryGrid(256, 256);
  for (int r = 40; r < 220; ++r)
    for (int c = 30; c < 226; ++c) m.mask(r, c) = (c < 110 || c > 146) ? 1 : 0;
  for (auto _ : state) benchmark::DoNotOptimize(lungseg::postprocess_mask(m, 5, 10));
}
BENCHMARK(BM_PostprocessMask);

}  // namespace

BENCHMARK_MAIN();
