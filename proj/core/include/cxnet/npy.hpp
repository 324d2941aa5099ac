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

#include <filesystem>

#include "cxnet/tensor.hpp"

namespace cxnet::io {

/// Writes a little-endian float64 NumPy .npy file (format 1.0).
void write_npy(const std::filesystem::path& path, const nn::Tensor& tensor);
/// Reads a C-ordered '<f8' or '<f4' .npy file.
nn::Tensor read_npy(const std::filesystem::path& path);

}  // namespace cxnet::io
