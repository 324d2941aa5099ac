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

#include "support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cxnet::test {

namespace fs = std::filesystem;

fs::path fixtures_dir() { return CXNET_FIXTURES_DIR; }
fs::path fixture(const std::string& relative) { return fixtures_dir() / relative; }

TempDir::TempDir() {
  static std::uint64_t counter = 0;
  Rng rng(static_cast<std::uint64_t>(::getpid()) * 7919 + counter++);
  for (;;) {
    path_ = fs::temp_directory_path() / ("cxnet-test-" + std::to_string(rng.next() % 100000000));
    if (fs::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') {
      q += "'\\''";
    } else {
      q += c;
    }
  }
  return q + "'";
}

}  // namespace

CliResult run_cli(const std::vector<std::string>& args) {
  TempDir capture;
  std::string cmd = quote(CXNET_CLI_PATH);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >" + quote((capture / "out").string()) + " 2>" + quote((capture / "err").string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(capture / "out");
  r.err = read_text(capture / "err");
  return r;
}

GrayImage random_image(Rng& rng, int rows, int cols, int lo, int hi) {
  GrayImage img(rows, cols);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(lo + rng.index(static_cast<std::uint64_t>(hi - lo + 1)));
  return img;
}

GrayImage random_levels_image(Rng& rng, int rows, int cols, int levels) {
  std::vector<int> all(kLevels);
  for (int i = 0; i < kLevels; ++i) all[i] = i;
  rng.shuffle(all.begin(), all.end());
  all.resize(static_cast<std::size_t>(levels));
  GrayImage img(rows, cols);
  // Every chosen level appears at least once.
  for (std::size_t i = 0; i < img.size(); ++i) {
    img.pixels()[i] = static_cast<std::uint8_t>(i < all.size() ? all[i] : all[rng.index(all.size())]);
  }
  rng.shuffle(img.pixels().begin(), img.pixels().end());
  return img;
}

enhance::ChannelStack planted_square_stack(Rng& rng, int size, int square, bool planted) {
  enhance::ChannelStack s;
  for (auto& p : s.planes) {
    p = Plane(size, size);
    for (auto& v : p.pixels()) v = 0.1 * rng.uniform();
  }
  if (planted) {
    for (auto& p : s.planes) {
      for (int r = 0; r < square; ++r) {
        for (int c = 0; c < square; ++c) p(r, c) = 0.9 + 0.1 * rng.uniform();
      }
    }
  }
  return s;
}

models::Dataset planted_square_dataset(int n, int size, int square, std::uint64_t seed) {
  Rng rng(seed);
  models::Dataset d;
  for (int i = 0; i < n; ++i) {
    const bool pos = i % 2 == 1;
    d.add("toy" + std::to_string(i), planted_square_stack(rng, size, square, pos), pos ? Label::Cp : Label::Normal);
  }
  return d;
}

double rel_diff(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double gradcheck(const std::function<nn::Var(const std::vector<nn::Var>&)>& f, const std::vector<nn::Var>& inputs,
                 double step) {
  for (nn::Var v : inputs) v.zero_grad();  // copies share the node
  nn::backward(f(inputs));
  double worst = 0.0;
  for (const auto& input : inputs) {
    if (!input.requires_grad()) continue;
    const nn::Tensor analytic = input.grad();
    nn::Var handle = input;
    nn::Tensor& x = handle.mutable_value();
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const double orig = x[i];
      x[i] = orig + step;
      const double up = f(inputs).value()[0];
      x[i] = orig - step;
      const double down = f(inputs).value()[0];
      x[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      worst = std::max(worst, rel_diff(analytic[i], numeric, 1e-4));
    }
  }
  return worst;
}

}  // namespace cxnet::test
