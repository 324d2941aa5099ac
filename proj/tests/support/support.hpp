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
#include <functional>
#include <string>
#include <vector>

#include "cxnet/autograd.hpp"
#include "cxnet/enhance.hpp"
#include "cxnet/image.hpp"
#include "cxnet/rng.hpp"
#include "cxnet/training.hpp"

namespace cxnet::test {

std::filesystem::path fixtures_dir();
std::filesystem::path fixture(const std::string& relative);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs the cxnet binary with `args` (shell-quoted) and captures both streams.
CliResult run_cli(const std::vector<std::string>& args);

GrayImage random_image(Rng& rng, int rows, int cols, int lo = 0, int hi = 255);
/// Image with exactly `levels` distinct intensities drawn at random.
GrayImage random_levels_image(Rng& rng, int rows, int cols, int levels);

/// Stack whose three planes hold low-level noise, with a bright square of
/// side `square` at the top-left corner when `planted`.
enhance::ChannelStack planted_square_stack(Rng& rng, int size, int square, bool planted);
/// Balanced set: half NORMAL (no square), half CP (square).
models::Dataset planted_square_dataset(int n, int size, int square, std::uint64_t seed);

std::string read_text(const std::filesystem::path& path);

/// Largest relative gap between analytic and central-difference gradients of
/// the scalar `f` with respect to every element of every input.
double gradcheck(const std::function<nn::Var(const std::vector<nn::Var>&)>& f, const std::vector<nn::Var>& inputs,
                 double step = 1e-6);

/// Relative difference |a - b| / max(|a|, |b|, floor).
double rel_diff(double a, double b, double floor = 1e-12);

}  // namespace cxnet::test
