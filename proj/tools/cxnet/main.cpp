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

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "common.hpp"
#include "cxnet/error.hpp"
#include "cxnet/log.hpp"

int main(int argc, char** argv) {
  using namespace cxnet::cli;
  CLI::App app{"cxnet: chest radiograph enhancement, segmentation, classification and explanation"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

  Runner run;
  register_ingest(app, run);
  register_enhance(app, run);
  register_segment(app, run);
  register_train(app, run);
  register_eval(app, run);
  register_explain(app, run);
  register_lrfind(app, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  cxnet::log::set_verbose(verbose);

  try {
    return run();
  } catch (const cxnet::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& issue : e.issues()) std::cerr << "  row " << issue.row << ": " << issue.message << "\n";
    return kConfigError;
  } catch (const cxnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}
