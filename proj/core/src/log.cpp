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

#include "cxnet/log.hpp"

#include <iostream>
#include <mutex>

namespace cxnet::log {

namespace {

std::mutex mutex;
Sink sink;
bool verbose = false;

void emit(Level level, const std::string& message) {
  std::lock_guard lock(mutex);
  if (sink) {
    sink(level, message);
    return;
  }
  if (level == Level::Warning) {
    std::cerr << "warning: " << message << '\n';
  } else if (verbose) {
    std::cerr << message << '\n';
  }
}

}  // namespace

void set_sink(Sink s) {
  std::lock_guard lock(mutex);
  sink = std::move(s);
}

void set_verbose(bool v) {
  std::lock_guard lock(mutex);
  verbose = v;
}

void info(const std::string& message) { emit(Level::Info, message); }
void warn(const std::string& message) { emit(Level::Warning, message); }

}  // namespace cxnet::log
