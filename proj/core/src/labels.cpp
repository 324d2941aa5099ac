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

#include "cxnet/labels.hpp"

#include <algorithm>
#include <cctype>

namespace cxnet {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

}  // namespace

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Normal: return "NORMAL";
    case Label::Cap: return "CAP";
    case Label::Cp: return "CP";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view token) {
  const std::string t = upper(token);
  if (t == "NORMAL") return Label::Normal;
  if (t == "CAP") return Label::Cap;
  if (t == "CP") return Label::Cp;
  return std::nullopt;
}

std::string_view task_name(Task task) {
  switch (task) {
    case Task::Binary: return "binary";
    case Task::Multiclass: return "multiclass";
    case Task::Level1: return "level1";
    case Task::Level2: return "level2";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view token) {
  for (Task t : {Task::Binary, Task::Multiclass, Task::Level1, Task::Level2}) {
    if (task_name(t) == token) return t;
  }
  return std::nullopt;
}

int task_classes(Task task) { return task == Task::Multiclass ? 3 : 2; }

std::optional<int> task_target(Task task, Label label) {
  switch (task) {
    case Task::Binary:
      if (label == Label::Cap) return std::nullopt;
      return label == Label::Cp ? 1 : 0;
    case Task::Multiclass:
      return static_cast<int>(label);
    case Task::Level1:
      return label == Label::Normal ? 0 : 1;
    case Task::Level2:
      if (label == Label::Normal) return std::nullopt;
      return label == Label::Cp ? 1 : 0;
  }
  return std::nullopt;
}

Label task_label(Task task, int index) {
  switch (task) {
    case Task::Binary:
    case Task::Level1:
      return index == 0 ? Label::Normal : Label::Cp;
    case Task::Multiclass:
      return static_cast<Label>(index);
    case Task::Level2:
      return index == 0 ? Label::Cap : Label::Cp;
  }
  return Label::Normal;
}

std::string_view task_class_name(Task task, int index) {
  if (task == Task::Level1 && index == 1) return "PNEUMONIA";
  return label_name(task_label(task, index));
}

}  // namespace cxnet
