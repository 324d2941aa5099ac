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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor/image shape disagreement.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// I/O failure: missing, unreadable or corrupt file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// One problem found while validating a manifest row.
struct RowIssue {
  std::size_t row = 0;  // 1-based data row (header is row 0)
  std::string message;
};

/// Manifest validation failure carrying every row-indexed problem found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<RowIssue> issues);
  const std::vector<RowIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<RowIssue> issues_;
};

}  // namespace cxnet
