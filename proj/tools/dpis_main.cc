// Copyright 2026 The DPIS Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// dpis: train with DPIS or DP-SGD from a config file, or compare two runs.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "dpis/runner.h"

namespace {

int Fail(const absl::Status& status) {
  std::cerr << "dpis: " << status.message() << "\n";
  return dpis::ExitCodeFor(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DPIS / DP-SGD training and run comparison"};
  app.require_subcommand(1);

  std::string config_path, run_out;
  std::optional<uint64_t> seed_override;
  CLI::App* run = app.add_subcommand("run", "train from a config file");
  run->add_option("--config", config_path, "run configuration (INI)")
      ->required();
  run->add_option("--seed-override", seed_override,
                  "train this single seed instead of the configured list");
  run->add_option("--out", run_out, "output directory (overrides [run] out)");

  std::string dir_a, dir_b, csv_path;
  CLI::App* compare =
      app.add_subcommand("compare", "summarize two run directories as CSV");
  compare->add_option("dir_a", dir_a)->required();
  compare->add_option("dir_b", dir_b)->required();
  compare->add_option("--out", csv_path, "CSV file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) {
    absl::StatusOr<dpis::RunConfig> config = dpis::ParseRunConfig(config_path);
    if (!config.ok()) return Fail(config.status());
    if (seed_override) config->seeds = {*seed_override};
    if (!run_out.empty()) config->out = run_out;
    absl::Status status = dpis::RunExperiment(*config, std::cout);
    return status.ok() ? 0 : Fail(status);
  }

  absl::Status status;
  if (csv_path.empty()) {
    status = dpis::CompareRuns(dir_a, dir_b, std::cout);
  } else {
    std::ofstream out(csv_path);
    if (!out) {
      status = absl::UnavailableError(absl::StrCat("cannot write ", csv_path));
    } else {
      status = dpis::CompareRuns(dir_a, dir_b, out);
      out.close();
      if (status.ok() && !out) {
        status = absl::UnavailableError(absl::StrCat("cannot write ", csv_path));
      }
    }
  }
  return status.ok() ? 0 : Fail(status);
}
