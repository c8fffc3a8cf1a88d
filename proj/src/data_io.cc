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

#include "dpis/data_io.h"

#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpis/rng.h"
#include "dpis/status_macros.h"

namespace dpis {
namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

// Whole file, decompressed when it is gzip. zlib passes plain files through.
absl::StatusOr<std::vector<unsigned char>> ReadMaybeGzip(
    const std::string& path) {
  if (!std::filesystem::exists(path)) {
    return absl::NotFoundError(absl::StrCat("no such file: ", path));
  }
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path));
  }
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  while (true) {
    const int n = gzread(f, buf, sizeof(buf));
    if (n < 0) {
      int code = 0;
      const std::string message = gzerror(f, &code);
      gzclose(f);
      return absl::DataLossError(
          absl::StrCat("read error in ", path, ": ", message));
    }
    if (n == 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  // A cut-off gzip stream ends without error but leaves Z_BUF_ERROR behind.
  int code = Z_OK;
  gzerror(f, &code);
  gzclose(f);
  if (code != Z_OK) {
    return absl::DataLossError(absl::StrCat("truncated gzip stream: ", path));
  }
  return out;
}

class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& bytes, std::string path)
      : bytes_(bytes), path_(std::move(path)) {}

  absl::StatusOr<uint32_t> U32() {
    if (bytes_.size() - pos_ < 4) return Truncated();
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | bytes_[pos_++];
    return v;
  }

  absl::Status Need(uint64_t n) const {
    if (bytes_.size() - pos_ < n) return Truncated();
    if (bytes_.size() - pos_ > n) {
      return absl::DataLossError(
          absl::StrFormat("%s has %d trailing bytes", path_,
                          bytes_.size() - pos_ - n));
    }
    return absl::OkStatus();
  }

  const unsigned char* here() const { return bytes_.data() + pos_; }

 private:
  absl::Status Truncated() const {
    return absl::DataLossError(absl::StrCat("truncated IDX file: ", path_));
  }

  const std::vector<unsigned char>& bytes_;
  std::string path_;
  size_t pos_ = 0;
};

absl::StatusOr<double> ParseNumber(absl::string_view cell, int line) {
  cell = absl::StripAsciiWhitespace(cell);
  double v = 0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size() ||
      !std::isfinite(v)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("line %d: '%s' is not a number", line, cell));
  }
  return v;
}

}  // namespace

absl::Status Dataset::Validate() const {
  if (examples.empty()) return absl::InvalidArgumentError("dataset is empty");
  if (n_features < 1 || n_classes < 2) {
    return absl::InvalidArgumentError(
        "dataset needs at least one feature and two classes");
  }
  for (size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].features.size() != n_features) {
      return absl::InvalidArgumentError(
          absl::StrFormat("example %d has %d features, expected %d", i,
                          examples[i].features.size(), n_features));
    }
    if (examples[i].label < 0 || examples[i].label >= n_classes) {
      return absl::InvalidArgumentError(
          absl::StrFormat("example %d has label %d", i, examples[i].label));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<Dataset> LoadIdx(const std::string& images_path,
                                const std::string& labels_path) {
  ASSIGN_OR_RETURN(std::vector<unsigned char> image_bytes,
                   ReadMaybeGzip(images_path));
  ASSIGN_OR_RETURN(std::vector<unsigned char> label_bytes,
                   ReadMaybeGzip(labels_path));

  ByteReader images(image_bytes, images_path);
  ASSIGN_OR_RETURN(uint32_t image_magic, images.U32());
  if (image_magic != kImageMagic) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%s: bad magic 0x%08x for IDX images", images_path, image_magic));
  }
  ASSIGN_OR_RETURN(uint32_t count, images.U32());
  ASSIGN_OR_RETURN(uint32_t rows, images.U32());
  ASSIGN_OR_RETURN(uint32_t cols, images.U32());
  const uint64_t pixels = uint64_t{rows} * cols;
  RETURN_IF_ERROR(images.Need(pixels * count));

  ByteReader labels(label_bytes, labels_path);
  ASSIGN_OR_RETURN(uint32_t label_magic, labels.U32());
  if (label_magic != kLabelMagic) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%s: bad magic 0x%08x for IDX labels", labels_path, label_magic));
  }
  ASSIGN_OR_RETURN(uint32_t label_count, labels.U32());
  RETURN_IF_ERROR(labels.Need(label_count));
  if (label_count != count) {
    return absl::FailedPreconditionError(
        absl::StrFormat("%d images but %d labels", count, label_count));
  }
  if (count == 0 || pixels == 0) {
    return absl::InvalidArgumentError("IDX files hold no examples");
  }

  Dataset out;
  out.n_features = static_cast<int>(pixels);
  out.provenance = absl::StrCat("idx:", images_path);
  out.examples.resize(count);
  const unsigned char* px = images.here();
  const unsigned char* lb = labels.here();
  int max_label = 1;
  for (uint32_t i = 0; i < count; ++i) {
    Example& x = out.examples[i];
    x.features.resize(static_cast<Eigen::Index>(pixels));
    for (uint64_t j = 0; j < pixels; ++j) x.features[j] = px[i * pixels + j] / 255.0;
    x.label = lb[i];
    max_label = std::max(max_label, x.label);
  }
  out.n_classes = max_label + 1;
  return out;
}

absl::StatusOr<Dataset> LoadCsv(const std::string& path,
                                const std::string& label_column) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::string line;
  if (!std::getline(in, line) || absl::StripAsciiWhitespace(line).empty()) {
    return absl::InvalidArgumentError(absl::StrCat(path, " has no header"));
  }
  const std::vector<std::string> header =
      absl::StrSplit(absl::StripTrailingAsciiWhitespace(line), ',');
  const auto label_it = std::find_if(
      header.begin(), header.end(), [&](const std::string& h) {
        return absl::StripAsciiWhitespace(h) == label_column;
      });
  if (label_it == header.end()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%s: no column named '%s'", path, label_column));
  }
  const size_t label_index = label_it - header.begin();
  if (header.size() < 2) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": no feature columns"));
  }

  Dataset out;
  out.n_features = static_cast<int>(header.size() - 1);
  out.provenance = absl::StrCat("csv:", path);
  int max_label = 1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    absl::string_view row = absl::StripTrailingAsciiWhitespace(line);
    if (row.empty()) continue;
    const std::vector<absl::string_view> cells = absl::StrSplit(row, ',');
    if (cells.size() != header.size()) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "%s line %d: %d cells, header has %d", path, line_no, cells.size(),
          header.size()));
    }
    Example x;
    x.features.resize(out.n_features);
    int f = 0;
    for (size_t c = 0; c < cells.size(); ++c) {
      ASSIGN_OR_RETURN(double v, ParseNumber(cells[c], line_no));
      if (c == label_index) {
        if (v < 0 || v != std::floor(v) || v > 1e6) {
          return absl::InvalidArgumentError(absl::StrFormat(
              "%s line %d: label %g is not a class index", path, line_no, v));
        }
        x.label = static_cast<int>(v);
      } else {
        x.features[f++] = v;
      }
    }
    max_label = std::max(max_label, x.label);
    out.examples.push_back(std::move(x));
  }
  if (out.examples.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(path, " has no data rows"));
  }
  out.n_classes = max_label + 1;
  return out;
}

absl::Status WriteCsv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  for (int j = 0; j < dataset.n_features; ++j) out << 'f' << j << ',';
  out << "label\n";
  for (const Example& x : dataset.examples) {
    for (int j = 0; j < dataset.n_features; ++j) {
      out << absl::StrFormat("%.17g", x.features[j]) << ',';
    }
    out << x.label << '\n';
  }
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::StatusOr<Dataset> SynthGaussians(int n_per_class, int dims, int classes,
                                       double separation, uint64_t seed) {
  if (n_per_class < 1 || dims < 1 || classes < 2) {
    return absl::InvalidArgumentError(
        "need n_per_class >= 1, dims >= 1, classes >= 2");
  }
  if (classes > 2 * dims) {
    return absl::InvalidArgumentError("classes must not exceed 2*dims");
  }
  Rng rng(seed);
  Dataset out;
  out.n_features = dims;
  out.n_classes = classes;
  out.provenance = absl::StrFormat("synth:n=%d,d=%d,c=%d,sep=%g,seed=%d",
                                   n_per_class, dims, classes, separation,
                                   seed);
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < n_per_class; ++i) {
      Example x;
      x.label = c;
      x.features.resize(dims);
      for (int j = 0; j < dims; ++j) x.features[j] = rng.Gaussian(1.0);
      if (c < dims) {
        x.features[c] += separation;
      } else {
        x.features[c - dims] -= separation;
      }
      out.examples.push_back(std::move(x));
    }
  }
  std::shuffle(out.examples.begin(), out.examples.end(), rng.engine());
  return out;
}

absl::StatusOr<Dataset> Subset(const Dataset& dataset, int64_t n,
                               uint64_t seed) {
  if (n < 1 || n > dataset.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "subset size %d outside [1, %d]", n, dataset.size()));
  }
  std::vector<int64_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first n slots are a uniform sample.
  for (int64_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<int64_t> pick(i, dataset.size() - 1);
    std::swap(order[i], order[pick(rng.engine())]);
  }
  Dataset out;
  out.n_features = dataset.n_features;
  out.n_classes = dataset.n_classes;
  out.provenance = absl::StrFormat("%s|subset:n=%d,seed=%d",
                                   dataset.provenance, n, seed);
  out.examples.reserve(n);
  for (int64_t i = 0; i < n; ++i) out.examples.push_back(dataset.examples[order[i]]);
  return out;
}

absl::StatusOr<std::pair<Dataset, Dataset>> TrainTestSplit(
    const Dataset& dataset, int64_t test_size, uint64_t seed) {
  if (test_size < 1 || test_size >= dataset.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "test size %d outside [1, %d)", test_size, dataset.size()));
  }
  ASSIGN_OR_RETURN(Dataset shuffled, Subset(dataset, dataset.size(), seed));
  Dataset test = shuffled;
  test.examples.assign(shuffled.examples.begin(),
                       shuffled.examples.begin() + test_size);
  test.provenance += "|test";
  shuffled.examples.erase(shuffled.examples.begin(),
                          shuffled.examples.begin() + test_size);
  shuffled.provenance += "|train";
  return std::make_pair(std::move(shuffled), std::move(test));
}

}  // namespace dpis
