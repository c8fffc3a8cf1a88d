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

// Dataset loading and synthesis.

#ifndef DPIS_DATA_IO_H_
#define DPIS_DATA_IO_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpis/models.h"

namespace dpis {

struct Dataset {
  std::vector<Example> examples;
  int n_features = 0;
  int n_classes = 0;
  std::string provenance;

  int64_t size() const { return static_cast<int64_t>(examples.size()); }

  // Nonempty, uniform feature width, labels in [0, n_classes).
  absl::Status Validate() const;
};

// Big-endian IDX image and label files, gzip-compressed or plain. Pixels
// are scaled to [0, 1]. Errors: NotFound (missing file), InvalidArgument
// (bad magic), DataLoss (truncated), FailedPrecondition (counts disagree).
absl::StatusOr<Dataset> LoadIdx(const std::string& images_path,
                                const std::string& labels_path);

// CSV with a header row. The column named `label_column` holds
// nonnegative integer labels; every other column is a numeric feature.
absl::StatusOr<Dataset> LoadCsv(const std::string& path,
                                const std::string& label_column = "label");

// Writes features as f0..f{d-1} followed by "label", with enough digits to
// read back the same doubles.
absl::Status WriteCsv(const Dataset& dataset, const std::string& path);

// `n_per_class` points per class; class c is centred at separation·u_c with
// u_c = +e_c for c < dims and -e_{c-dims} after that, plus unit isotropic
// Gaussian noise. Examples are shuffled. Requires classes <= 2·dims.
absl::StatusOr<Dataset> SynthGaussians(int n_per_class, int dims, int classes,
                                       double separation, uint64_t seed);

// n examples drawn uniformly without replacement.
absl::StatusOr<Dataset> Subset(const Dataset& dataset, int64_t n,
                               uint64_t seed);

// Random split into (train, test) with `test_size` test examples.
absl::StatusOr<std::pair<Dataset, Dataset>> TrainTestSplit(
    const Dataset& dataset, int64_t test_size, uint64_t seed);

}  // namespace dpis

#endif  // DPIS_DATA_IO_H_
