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

#include "cxnet/models.hpp"
#include "cxnet/lungseg.hpp"
#include "cxnet/ops.hpp"

namespace {

using namespace cxnet;
using nn::Tensor;
using nn::Var;

Tensor random_tensor(nn::Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(-1, 1);
  return t;
}

// Args: spatial side, channels in and out.
void BM_Conv2dForward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0)), ch = static_cast<int>(state.range(1));
  const Var x(random_tensor({4, ch, side, side}, 1));
  const Var w(random_tensor({ch, ch, 3, 3}, 2));
  const Var b(random_tensor({ch}, 3));
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, w, b, {1, 1}));
}
BENCHMARK(BM_Conv2dForward)->Args({32, 8})->Args({64, 32})->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0)), ch = static_cast<int>(state.range(1));
  const Tensor x = random_tensor({4, ch, side, side}, 1);
  const Tensor w = random_tensor({ch, ch, 3, 3}, 2);
  const Tensor b = random_tensor({ch}, 3);
  for (auto _ : state) {
    Var xv(x, true), wv(w, true), bv(b, true);
    const Var y = nn::conv2d(xv, wv, bv, {1, 1});
    nn::backward(y, Tensor(y.shape(), 1.0));
    benchmark::DoNotOptimize(wv.grad());
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({32, 8})->Args({64, 32})->Unit(benchmark::kMillisecond);

void BM_BaseCnnForward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  auto net = models::build_network(models::build_base_cnn(side, side, 1, 2));
  const Var x(random_tensor({1, 1, side, side}, 4));
  nn::ForwardContext ctx;
  ctx.param_grads = false;
  for (auto _ : state) benchmark::DoNotOptimize(net->forward(x, ctx));
}
BENCHMARK(BM_BaseCnnForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DenseNetForward(benchmark::State& state) {
  auto spec = models::build_backbone_model({10, 0.2, models::OutputHead::Sigmoid1}, models::BackboneWeights::None, 64, 64);
  spec.backbone = {3, 12, {3, 3, 3}, 16, 4, 0.5};
  auto net = models::build_network(spec);
  const Var x(random_tensor({1, 3, 64, 64}, 5));
  nn::ForwardContext ctx;
  ctx.param_grads = false;
  for (auto _ : state) benchmark::DoNotOptimize(net->forward(x, ctx));
}
BENCHMARK(BM_DenseNetForward)->Unit(benchmark::kMillisecond);

void BM_UNetForward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  auto net = models::build_network(lungseg::build_unet(side, side, 2, 8, 1));
  const Var x(random_tensor({1, 1, side, side}, 6));
  nn::ForwardContext ctx;
  ctx.param_grads = false;
  for (auto _ : state) benchmark::DoNotOptimize(net->forward(x, ctx));
}
BENCHMARK(BM_UNetForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
