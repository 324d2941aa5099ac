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

#include "cxnet/error.hpp"

#include <sstream>

namespace cxnet {

namespace {

std::string summarize(const std::vector<RowIssue>& issues) {
  std::ostringstream os;
  os << issues.size() << " manifest error(s)";
  for (const auto& issue : issues) {
    os << "\n  " << issue.message;
  }
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<RowIssue> issues)
    : Error(summarize(issues)), issues_(std::move(issues)) {}

}  // namespace cxnet
