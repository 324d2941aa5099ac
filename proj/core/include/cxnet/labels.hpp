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

#include <optional>
#include <string>
#include <string_view>

namespace cxnet {

/// Diagnostic class of a radiograph.
enum class Label : int { Normal = 0, Cap = 1, Cp = 2 };

/// Classification task a model is trained for. Each task maps labels onto
/// consecutive class indices; labels outside the task are excluded.
enum class Task {
  Binary,      // NORMAL -> 0, CP -> 1 (CAP rejected)
  Multiclass,  // NORMAL -> 0, CAP -> 1, CP -> 2
  Level1,      // NORMAL -> 0, pneumonia (CAP or CP) -> 1
  Level2,      // CAP -> 0, CP -> 1 (NORMAL excluded)
};

std::string_view label_name(Label label);
/// Case-insensitive; accepts NORMAL, CAP, CP.
std::optional<Label> parse_label(std::string_view token);

std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view token);

int task_classes(Task task);
/// Class index of `label` under `task`, or nullopt when the task excludes it.
std::optional<int> task_target(Task task, Label label);
/// Label reported for a predicted class index. Level1 index 1 reports CP.
Label task_label(Task task, int index);
std::string_view task_class_name(Task task, int index);

}  // namespace cxnet
