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

// Config-driven experiment runner behind the command-line tool.

#ifndef DPIS_RUNNER_H_
#define DPIS_RUNNER_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpis/accountant.h"
#include "dpis/data_io.h"
#include "dpis/engine.h"

namespace dpis {

// Where the examples come from. Relative paths are resolved against the
// config file's directory, then against $DPIS_DATA_DIR.
struct DataSpec {
  std::string source = "idx";  // idx | csv | synth
  std::string train_images, train_labels, test_images, test_labels;
  std::string train_csv, test_csv;
  std::string label_column = "label";
  int n_per_class = 500;
  int dims = 10;
  int classes = 2;
  double separation = 2;
  uint64_t data_seed = 1;
  int64_t train_size = 0;  // Subsample to this many; 0 keeps all.
  int64_t test_size = 0;   // Held-out size when no test file is given.
};

struct RunConfig {
  Method method = Method::kDpis;
  DataSpec data;
  std::string model = "mlp";
  int hidden = Mlp::kDefaultHidden;
  TrainConfig train;
  bool k_set = false;
  double epsilon0 = 0;
  double delta0 = 1e-5;
  std::optional<double> sigma_N;  // Defaults to 0.02·N.
  std::optional<double> sigma_K;  // Defaults to 0.02·N.
  std::string out = "runs";
  std::vector<uint64_t> seeds = {1};
  std::string config_dir;
};

struct LoadedData {
  Dataset train;
  Dataset test;
};

// Parses an INI file with [run], [data], [model], [train] and [privacy]
// sections. Unknown keys are errors.
absl::StatusOr<RunConfig> ParseRunConfig(const std::string& path);

absl::StatusOr<LoadedData> LoadRunData(const RunConfig& config);

// 0.02·N defaults, and k = 5 for image data or 3 otherwise.
PrivacySpec ResolvePrivacy(const RunConfig& config, int64_t N);
TrainConfig ResolveTrain(const RunConfig& config, uint64_t seed);

// metrics.jsonl, ledger.json and model.bin inside `dir`.
absl::Status WriteRunOutputs(const std::string& dir, const RunConfig& config,
                             uint64_t seed, const PrivacySpec& spec,
                             const TrainResult& result);

// Runs every seed of `config` into <out>/seed_<n>/.
absl::Status RunExperiment(const RunConfig& config, std::ostream& log);

// Long-format CSV (run,dir,seed,epoch,metric,value) comparing two output
// directories: per-seed and mean final accuracy, final ε, and the σ_G
// series.
absl::Status CompareRuns(const std::string& dir_a, const std::string& dir_b,
                         std::ostream& csv);

// 2 invalid config, 3 calibration infeasible, 4 I/O failure, 1 otherwise.
int ExitCodeFor(const absl::Status& status);

// Marks a status as a configuration error so that it maps to exit code 2.
absl::Status ConfigError(const absl::Status& status);

}  // namespace dpis

#endif  // DPIS_RUNNER_H_
