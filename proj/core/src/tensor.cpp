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

#include "cxnet/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "cxnet/error.hpp"

namespace cxnet::nn {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_(const Tensor& other) {
  if (other.numel() != numel()) throw ShapeError("add_: size mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void Tensor::scale_(double s) {
  for (auto& v : data_) v *= s;
}

Tensor Tensor::slice0(int index) const {
  if (shape_.empty() || index < 0 || index >= shape_[0]) throw ShapeError("slice0 index out of range");
  Shape s = shape_;
  s[0] = 1;
  const std::size_t stride = numel() / shape_[0];
  std::vector<double> part(data_.begin() + static_cast<std::ptrdiff_t>(stride * index),
                           data_.begin() + static_cast<std::ptrdiff_t>(stride * (index + 1)));
  return Tensor(std::move(s), std::move(part));
}

Tensor Tensor::stack0(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("stack0 of nothing");
  Shape s = parts[0].shape();
  if (s.empty()) throw ShapeError("stack0 needs rank >= 1");
  int total = 0;
  for (const auto& p : parts) {
    Shape q = p.shape();
    if (q.size() != s.size() || !std::equal(q.begin() + 1, q.end(), s.begin() + 1)) {
      throw ShapeError("stack0 shape mismatch");
    }
    total += q[0];
  }
  std::vector<double> data;
  data.reserve(shape_numel(s) / std::max(1, s[0]) * total);
  for (const auto& p : parts) data.insert(data.end(), p.data_.begin(), p.data_.end());
  s[0] = total;
  return Tensor(std::move(s), std::move(data));
}

}  // namespace cxnet::nn
