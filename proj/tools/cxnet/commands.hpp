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

#include <functional>

#include <CLI11.hpp>

namespace cxnet::cli {

/// The chosen command's body, set while parsing; returns the exit code.
using Runner = std::function<int()>;

void register_ingest(CLI::App& app, Runner& run);
void register_enhance(CLI::App& app, Runner& run);
void register_segment(CLI::App& app, Runner& run);
void register_train(CLI::App& app, Runner& run);
void register_eval(CLI::App& app, Runner& run);
void register_explain(CLI::App& app, Runner& run);
void register_lrfind(CLI::App& app, Runner& run);

}  // namespace cxnet::cli
