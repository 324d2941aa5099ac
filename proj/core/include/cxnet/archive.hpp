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
#include <map>
#include <string>

#include <json.hpp>

#include "cxnet/tensor.hpp"

namespace cxnet::io {

/// Self-describing container of named tensors plus JSON metadata.
///
/// Layout: 8-byte magic "CXNETARC", u32 format version, u64 header length,
/// UTF-8 JSON header, then the float64 little-endian payload of every tensor
/// in header order. The header records each tensor's name, shape and offset,
/// and the SHA-256 of the payload, which is verified on load.
struct TensorArchive {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, nn::Tensor> tensors;

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);

  /// SHA-256 over the serialized payload, independent of metadata.
  std::string payload_sha256() const;
};

}  // namespace cxnet::io
