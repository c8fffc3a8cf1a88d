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

#include "dpis/runner.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "absl/strings/cord.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpis/status_macros.h"
#include "json.hpp"

namespace dpis {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kExitPayload[] = "type.dpis/exit_code";
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;

absl::Status WithExitCode(absl::Status status, int code) {
  if (!status.ok()) status.SetPayload(kExitPayload, absl::Cord(absl::StrCat(code)));
  return status;
}

// Typed access to one INI section that remembers which keys were read.
class Section {
 public:
  Section(const boost::property_tree::ptree* tree, std::string name)
      : tree_(tree), name_(std::move(name)) {}

  absl::Status Get(const std::string& key, std::string* out) {
    seen_.insert(key);
    if (tree_ == nullptr) return absl::OkStatus();
    if (auto v = tree_->get_optional<std::string>(
            boost::property_tree::ptree::path_type(key, '\0'))) {
      *out = std::string(absl::StripAsciiWhitespace(*v));
    }
    return absl::OkStatus();
  }

  template <typename T>
  absl::Status Get(const std::string& key, T* out) {
    std::string text;
    RETURN_IF_ERROR(Get(key, &text));
    if (text.empty()) return absl::OkStatus();
    return Parse(key, text, out);
  }

  absl::Status Get(const std::string& key, std::optional<double>* out) {
    std::string text;
    RETURN_IF_ERROR(Get(key, &text));
    if (text.empty()) return absl::OkStatus();
    double v = 0;
    RETURN_IF_ERROR(Parse(key, text, &v));
    *out = v;
    return absl::OkStatus();
  }

  absl::Status Get(const std::string& key, bool* out, bool* was_set) {
    std::string text;
    RETURN_IF_ERROR(Get(key, &text));
    *was_set = !text.empty();
    if (text.empty()) return absl::OkStatus();
    return Parse(key, text, out);
  }

  // Every key in the file must have been asked for.
  absl::Status CheckNoUnknownKeys() const {
    if (tree_ == nullptr) return absl::OkStatus();
    for (const auto& [key, unused] : *tree_) {
      if (!seen_.contains(key)) {
        return absl::InvalidArgumentError(
            absl::StrFormat("unknown key '%s' in [%s]", key, name_));
      }
    }
    return absl::OkStatus();
  }

 private:
  absl::Status Bad(const std::string& key, const std::string& text) const {
    return absl::InvalidArgumentError(
        absl::StrFormat("[%s] %s: cannot parse '%s'", name_, key, text));
  }
  absl::Status Parse(const std::string& key, const std::string& text,
                     double* out) const {
    if (!absl::SimpleAtod(text, out)) return Bad(key, text);
    return absl::OkStatus();
  }
  absl::Status Parse(const std::string& key, const std::string& text,
                     int* out) const {
    if (!absl::SimpleAtoi(text, out)) return Bad(key, text);
    return absl::OkStatus();
  }
  absl::Status Parse(const std::string& key, const std::string& text,
                     int64_t* out) const {
    if (!absl::SimpleAtoi(text, out)) return Bad(key, text);
    return absl::OkStatus();
  }
  absl::Status Parse(const std::string& key, const std::string& text,
                     uint64_t* out) const {
    if (!absl::SimpleAtoi(text, out)) return Bad(key, text);
    return absl::OkStatus();
  }
  absl::Status Parse(const std::string& key, const std::string& text,
                     bool* out) const {
    if (!absl::SimpleAtob(text, out)) return Bad(key, text);
    return absl::OkStatus();
  }

  const boost::property_tree::ptree* tree_;
  std::string name_;
  std::set<std::string> seen_;
};

absl::Status ParseSections(const boost::property_tree::ptree& root,
                           RunConfig& c) {
  static const std::set<std::string> kSections = {"run", "data", "model",
                                                  "train", "privacy"};
  for (const auto& [name, unused] : root) {
    if (!kSections.contains(name)) {
      return absl::InvalidArgumentError(
          absl::StrFormat("unknown section [%s]", name));
    }
  }
  auto section = [&](const char* name) {
    auto child = root.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
  };

  Section run = section("run");
  std::string method = "dpis", seeds;
  RETURN_IF_ERROR(run.Get("method", &method));
  ASSIGN_OR_RETURN(c.method, ParseMethod(method));
  RETURN_IF_ERROR(run.Get("out", &c.out));
  RETURN_IF_ERROR(run.Get("seeds", &seeds));
  if (!seeds.empty()) {
    c.seeds.clear();
    for (absl::string_view s : absl::StrSplit(seeds, ',', absl::SkipWhitespace())) {
      uint64_t seed = 0;
      if (!absl::SimpleAtoi(absl::StripAsciiWhitespace(s), &seed)) {
        return absl::InvalidArgumentError(
            absl::StrCat("[run] seeds: bad entry '", s, "'"));
      }
      c.seeds.push_back(seed);
    }
  }
  RETURN_IF_ERROR(run.CheckNoUnknownKeys());

  Section data = section("data");
  DataSpec& d = c.data;
  RETURN_IF_ERROR(data.Get("source", &d.source));
  RETURN_IF_ERROR(data.Get("train_images", &d.train_images));
  RETURN_IF_ERROR(data.Get("train_labels", &d.train_labels));
  RETURN_IF_ERROR(data.Get("test_images", &d.test_images));
  RETURN_IF_ERROR(data.Get("test_labels", &d.test_labels));
  RETURN_IF_ERROR(data.Get("train_csv", &d.train_csv));
  RETURN_IF_ERROR(data.Get("test_csv", &d.test_csv));
  RETURN_IF_ERROR(data.Get("label_column", &d.label_column));
  RETURN_IF_ERROR(data.Get("n_per_class", &d.n_per_class));
  RETURN_IF_ERROR(data.Get("dims", &d.dims));
  RETURN_IF_ERROR(data.Get("classes", &d.classes));
  RETURN_IF_ERROR(data.Get("separation", &d.separation));
  RETURN_IF_ERROR(data.Get("data_seed", &d.data_seed));
  RETURN_IF_ERROR(data.Get("train_size", &d.train_size));
  RETURN_IF_ERROR(data.Get("test_size", &d.test_size));
  RETURN_IF_ERROR(data.CheckNoUnknownKeys());

  Section model = section("model");
  RETURN_IF_ERROR(model.Get("kind", &c.model));
  RETURN_IF_ERROR(model.Get("hidden", &c.hidden));
  RETURN_IF_ERROR(model.CheckNoUnknownKeys());

  Section train = section("train");
  TrainConfig& t = c.train;
  RETURN_IF_ERROR(train.Get("b", &t.b));
  RETURN_IF_ERROR(train.Get("E", &t.E));
  RETURN_IF_ERROR(train.Get("T", &t.T));
  RETURN_IF_ERROR(train.Get("a_E", &t.a_E));
  RETURN_IF_ERROR(train.Get("C1", &t.C1));
  RETURN_IF_ERROR(train.Get("C_star", &t.C_star));
  std::optional<double> k;
  RETURN_IF_ERROR(train.Get("k", &k));
  if (k) {
    t.k = *k;
    c.k_set = true;
  }
  RETURN_IF_ERROR(train.Get("g_L", &t.g_L));
  RETURN_IF_ERROR(train.Get("lambda", &t.lambda));
  RETURN_IF_ERROR(train.Get("eta", &t.eta));
  RETURN_IF_ERROR(train.Get("momentum", &t.momentum));
  bool unused_set = false;
  RETURN_IF_ERROR(train.Get("adaptive_clip", &t.adaptive_clip, &unused_set));
  RETURN_IF_ERROR(train.CheckNoUnknownKeys());

  Section privacy = section("privacy");
  RETURN_IF_ERROR(privacy.Get("epsilon0", &c.epsilon0));
  RETURN_IF_ERROR(privacy.Get("delta0", &c.delta0));
  RETURN_IF_ERROR(privacy.Get("sigma_N", &c.sigma_N));
  RETURN_IF_ERROR(privacy.Get("sigma_K", &c.sigma_K));
  RETURN_IF_ERROR(privacy.CheckNoUnknownKeys());
  return absl::OkStatus();
}

absl::Status ValidateRunConfig(const RunConfig& c) {
  if (!(c.epsilon0 > 0)) {
    return absl::InvalidArgumentError("[privacy] epsilon0 must be positive");
  }
  if (!(c.delta0 > 0 && c.delta0 < 1)) {
    return absl::InvalidArgumentError("[privacy] delta0 must be in (0, 1)");
  }
  if ((c.sigma_N && !(*c.sigma_N > 0)) || (c.sigma_K && !(*c.sigma_K > 0))) {
    return absl::InvalidArgumentError("[privacy] sigma_N, sigma_K must be > 0");
  }
  if (c.seeds.empty()) return absl::InvalidArgumentError("[run] no seeds");
  if (c.model != "mlp" && c.model != "logreg") {
    return absl::InvalidArgumentError(
        absl::StrCat("[model] unknown kind '", c.model, "'"));
  }
  static const std::set<std::string> kSources = {"idx", "csv", "synth"};
  if (!kSources.contains(c.data.source)) {
    return absl::InvalidArgumentError(
        absl::StrCat("[data] unknown source '", c.data.source, "'"));
  }
  if (c.data.source == "idx" &&
      (c.data.train_images.empty() || c.data.train_labels.empty())) {
    return absl::InvalidArgumentError(
        "[data] idx source needs train_images and train_labels");
  }
  if (c.data.test_images.empty() != c.data.test_labels.empty()) {
    return absl::InvalidArgumentError(
        "[data] test_images and test_labels go together");
  }
  if (c.data.source == "csv" && c.data.train_csv.empty()) {
    return absl::InvalidArgumentError("[data] csv source needs train_csv");
  }
  if (c.data.train_size < 0 || c.data.test_size < 0) {
    return absl::InvalidArgumentError("[data] sizes must be >= 0");
  }
  TrainConfig t = c.train;
  return t.Validate();
}

absl::StatusOr<std::string> ResolvePath(const RunConfig& c,
                                        const std::string& path) {
  if (fs::path(path).is_absolute()) return path;
  const fs::path near_config = fs::path(c.config_dir) / path;
  if (fs::exists(near_config)) return near_config.string();
  if (const char* root = std::getenv("DPIS_DATA_DIR"); root != nullptr) {
    const fs::path under_root = fs::path(root) / path;
    if (fs::exists(under_root)) return under_root.string();
  }
  return absl::NotFoundError(absl::StrFormat(
      "'%s' not found next to the config or under $DPIS_DATA_DIR", path));
}

std::optional<double> Finite(std::optional<double> v) {
  if (v && !std::isfinite(*v)) return std::nullopt;
  return v;
}

json Nullable(std::optional<double> v) {
  v = Finite(v);
  return v ? json(*v) : json(nullptr);
}

json RowJson(const MetricsRow& r) {
  return json{{"epoch", r.epoch},
              {"iteration", r.iteration},
              {"sigma_G", r.sigma_G},
              {"C", r.C},
              {"K_tilde", Nullable(r.K_tilde)},
              {"X_q", r.x_q},
              {"X_p", r.x_p},
              {"train_loss", Nullable(r.train_loss)},
              {"eval_accuracy", Nullable(r.eval_accuracy)},
              {"epsilon", r.epsilon}};
}

absl::Status WriteFile(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) {
    return absl::UnavailableError(absl::StrCat("cannot write ", path.string()));
  }
  return absl::OkStatus();
}

absl::StatusOr<json> ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    return absl::DataLossError(absl::StrCat("malformed JSON in ", path.string()));
  }
  return j;
}

struct SeedSummary {
  std::string seed;
  double final_accuracy = std::nan("");
  double final_epsilon = std::nan("");
  std::vector<double> sigma_by_epoch;
};

absl::StatusOr<std::vector<SeedSummary>> SummarizeRun(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    return absl::NotFoundError(absl::StrCat("no run directory ", dir));
  }
  std::vector<fs::path> seed_dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() &&
        entry.path().filename().string().starts_with("seed_")) {
      seed_dirs.push_back(entry.path());
    }
  }
  std::sort(seed_dirs.begin(), seed_dirs.end());
  if (seed_dirs.empty()) {
    return absl::NotFoundError(absl::StrCat("no seed_* directories in ", dir));
  }
  std::vector<SeedSummary> out;
  for (const fs::path& sd : seed_dirs) {
    SeedSummary s;
    s.seed = sd.filename().string().substr(5);
    ASSIGN_OR_RETURN(json ledger, ReadJson(sd / "ledger.json"));
    s.final_epsilon = ledger.value("epsilon", std::nan(""));
    std::ifstream metrics(sd / "metrics.jsonl");
    if (!metrics) {
      return absl::NotFoundError(
          absl::StrCat("cannot open ", (sd / "metrics.jsonl").string()));
    }
    std::string line;
    std::map<int, double> sigma;
    while (std::getline(metrics, line)) {
      if (line.empty()) continue;
      json row = json::parse(line, nullptr, false);
      if (row.is_discarded()) {
        return absl::DataLossError(absl::StrCat("malformed metrics row in ",
                                                sd.string()));
      }
      sigma[row.at("epoch").get<int>()] = row.at("sigma_G").get<double>();
      if (!row.at("eval_accuracy").is_null()) {
        s.final_accuracy = row.at("eval_accuracy").get<double>();
      }
    }
    for (const auto& [epoch, value] : sigma) s.sigma_by_epoch.push_back(value);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

absl::Status ConfigError(const absl::Status& status) {
  return WithExitCode(status, kExitConfig);
}

int ExitCodeFor(const absl::Status& status) {
  if (status.ok()) return 0;
  if (auto payload = status.GetPayload(kExitPayload)) {
    int code = 1;
    if (absl::SimpleAtoi(std::string(*payload), &code)) return code;
  }
  switch (status.code()) {
    case absl::StatusCode::kOutOfRange:
      return kExitInfeasible;
    case absl::StatusCode::kInvalidArgument:
      return kExitConfig;
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kDataLoss:
    case absl::StatusCode::kUnavailable:
    case absl::StatusCode::kPermissionDenied:
      return kExitIo;
    default:
      return 1;
  }
}

absl::StatusOr<RunConfig> ParseRunConfig(const std::string& path) {
  if (!fs::exists(path)) {
    return ConfigError(absl::NotFoundError(absl::StrCat("no config ", path)));
  }
  boost::property_tree::ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(path, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    return ConfigError(absl::InvalidArgumentError(e.what()));
  }
  RunConfig c;
  c.config_dir = fs::absolute(path).parent_path().string();
  if (absl::Status s = ParseSections(root, c); !s.ok()) return ConfigError(s);
  if (absl::Status s = ValidateRunConfig(c); !s.ok()) return ConfigError(s);
  // Referenced files must exist now, not halfway through a sweep.
  for (std::string* file :
       {&c.data.train_images, &c.data.train_labels, &c.data.test_images,
        &c.data.test_labels, &c.data.train_csv, &c.data.test_csv}) {
    if (file->empty()) continue;
    absl::StatusOr<std::string> resolved = ResolvePath(c, *file);
    if (!resolved.ok()) return ConfigError(resolved.status());
    *file = *std::move(resolved);
  }
  return c;
}

absl::StatusOr<LoadedData> LoadRunData(const RunConfig& c) {
  const DataSpec& d = c.data;
  LoadedData out;
  bool have_test = false;
  if (d.source == "idx") {
    ASSIGN_OR_RETURN(std::string images, ResolvePath(c, d.train_images));
    ASSIGN_OR_RETURN(std::string labels, ResolvePath(c, d.train_labels));
    ASSIGN_OR_RETURN(out.train, LoadIdx(images, labels));
    if (!d.test_images.empty()) {
      ASSIGN_OR_RETURN(std::string ti, ResolvePath(c, d.test_images));
      ASSIGN_OR_RETURN(std::string tl, ResolvePath(c, d.test_labels));
      ASSIGN_OR_RETURN(out.test, LoadIdx(ti, tl));
      have_test = true;
    }
  } else if (d.source == "csv") {
    ASSIGN_OR_RETURN(std::string train, ResolvePath(c, d.train_csv));
    ASSIGN_OR_RETURN(out.train, LoadCsv(train, d.label_column));
    if (!d.test_csv.empty()) {
      ASSIGN_OR_RETURN(std::string test, ResolvePath(c, d.test_csv));
      ASSIGN_OR_RETURN(out.test, LoadCsv(test, d.label_column));
      have_test = true;
    }
  } else {
    ASSIGN_OR_RETURN(out.train, SynthGaussians(d.n_per_class, d.dims,
                                               d.classes, d.separation,
                                               d.data_seed));
  }
  if (!have_test) {
    const int64_t test_size =
        d.test_size > 0 ? d.test_size : std::max<int64_t>(1, out.train.size() / 6);
    ASSIGN_OR_RETURN(auto split,
                     TrainTestSplit(out.train, test_size, d.data_seed));
    out.train = std::move(split.first);
    out.test = std::move(split.second);
  } else if (d.test_size > 0 && d.test_size < out.test.size()) {
    ASSIGN_OR_RETURN(out.test, Subset(out.test, d.test_size, d.data_seed));
  }
  if (d.train_size > 0 && d.train_size < out.train.size()) {
    ASSIGN_OR_RETURN(out.train, Subset(out.train, d.train_size, d.data_seed));
  }
  // Both halves must agree on the label space.
  const int classes = std::max(out.train.n_classes, out.test.n_classes);
  out.train.n_classes = out.test.n_classes = classes;
  RETURN_IF_ERROR(out.train.Validate());
  RETURN_IF_ERROR(out.test.Validate());
  if (out.train.n_features != out.test.n_features) {
    return absl::InvalidArgumentError("train and test feature widths differ");
  }
  return out;
}

PrivacySpec ResolvePrivacy(const RunConfig& c, int64_t N) {
  const double fallback = 0.02 * static_cast<double>(N);
  return {.epsilon0 = c.epsilon0,
          .delta0 = c.delta0,
          .sigma_N = c.sigma_N.value_or(fallback),
          .sigma_K = c.sigma_K.value_or(fallback)};
}

TrainConfig ResolveTrain(const RunConfig& c, uint64_t seed) {
  TrainConfig t = c.train;
  t.method = c.method;
  t.seed = seed;
  if (!c.k_set) t.k = c.data.source == "idx" ? 5 : 3;
  return t;
}

absl::Status WriteRunOutputs(const std::string& dir, const RunConfig& c,
                             uint64_t seed, const PrivacySpec& spec,
                             const TrainResult& result) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrFormat("cannot create %s: %s", dir, ec.message()));
  }

  std::string metrics;
  for (const MetricsRow& row : result.rows) {
    absl::StrAppend(&metrics, RowJson(row).dump(), "\n");
  }
  RETURN_IF_ERROR(WriteFile(fs::path(dir) / "metrics.jsonl", metrics));

  json tau = json::object();
  const AlphaGrid& grid = result.ledger.grid();
  for (size_t i = 0; i < grid.size(); ++i) {
    tau[std::to_string(grid[i])] = result.ledger.tau_at(i);
  }
  json ledger{{"method", MethodName(c.method)},
              {"seed", seed},
              {"epsilon0", spec.epsilon0},
              {"delta", spec.delta0},
              {"epsilon", result.guarantee.epsilon},
              {"alpha_star", result.guarantee.alpha},
              {"N_tilde", result.N_tilde},
              {"sigma_N", spec.sigma_N},
              {"sigma_K", spec.sigma_K},
              {"gradient_evaluations", result.gradient_evaluations},
              {"tau", tau}};
  RETURN_IF_ERROR(
      WriteFile(fs::path(dir) / "ledger.json", ledger.dump(2) + "\n"));

  std::string model;
  const auto dim = static_cast<uint32_t>(result.theta.size());
  for (int shift = 0; shift < 32; shift += 8) model.push_back(dim >> shift & 0xff);
  for (int64_t j = 0; j < result.theta.size(); ++j) {
    uint64_t bits = 0;
    const double v = result.theta[j];
    std::memcpy(&bits, &v, sizeof bits);
    for (int shift = 0; shift < 64; shift += 8) model.push_back(bits >> shift & 0xff);
  }
  return WriteFile(fs::path(dir) / "model.bin", model);
}

absl::Status RunExperiment(const RunConfig& c, std::ostream& log) {
  absl::StatusOr<LoadedData> data = LoadRunData(c);
  if (!data.ok()) {
    return WithExitCode(data.status(), kExitIo);
  }
  absl::StatusOr<std::unique_ptr<Model>> model =
      MakeModel(c.model, data->train.n_features, data->train.n_classes,
                c.hidden);
  if (!model.ok()) return ConfigError(model.status());

  const PrivacySpec spec = ResolvePrivacy(c, data->train.size());
  for (uint64_t seed : c.seeds) {
    const TrainConfig train = ResolveTrain(c, seed);
    log << absl::StrFormat("%s seed %d: N=%d, d=%d, epsilon0=%g\n",
                           MethodName(c.method), seed, data->train.size(),
                           (*model)->dim(), spec.epsilon0);
    absl::StatusOr<TrainResult> result =
        RunTraining(train, spec, data->train, &data->test, **model);
    if (!result.ok()) {
      if (result.status().code() == absl::StatusCode::kOutOfRange) {
        return WithExitCode(result.status(), kExitInfeasible);
      }
      if (result.status().code() == absl::StatusCode::kInvalidArgument) {
        return ConfigError(result.status());
      }
      return result.status();
    }
    for (const std::string& w : result->warnings) log << "warning: " << w << "\n";
    const std::string dir =
        (fs::path(c.out) / absl::StrCat("seed_", seed)).string();
    RETURN_IF_ERROR(
        WithExitCode(WriteRunOutputs(dir, c, seed, spec, *result), kExitIo));
    log << absl::StrFormat("  accuracy %.4f, epsilon %.4f (alpha %d) -> %s\n",
                           result->epochs.back().eval_accuracy.value_or(NAN),
                           result->guarantee.epsilon, result->guarantee.alpha,
                           dir);
  }
  return absl::OkStatus();
}

absl::Status CompareRuns(const std::string& dir_a, const std::string& dir_b,
                         std::ostream& csv) {
  csv << "run,dir,seed,epoch,metric,value\n";
  const std::pair<const char*, const std::string*> runs[] = {{"A", &dir_a},
                                                             {"B", &dir_b}};
  for (const auto& [label, dir] : runs) {
    absl::StatusOr<std::vector<SeedSummary>> seeds = SummarizeRun(*dir);
    if (!seeds.ok()) return WithExitCode(seeds.status(), kExitIo);
    double acc = 0, eps = 0;
    for (const SeedSummary& s : *seeds) {
      csv << absl::StrFormat("%s,%s,%s,,final_accuracy,%.17g\n", label, *dir,
                             s.seed, s.final_accuracy);
      csv << absl::StrFormat("%s,%s,%s,,final_epsilon,%.17g\n", label, *dir,
                             s.seed, s.final_epsilon);
      for (size_t e = 0; e < s.sigma_by_epoch.size(); ++e) {
        csv << absl::StrFormat("%s,%s,%s,%d,sigma_G,%.17g\n", label, *dir,
                               s.seed, e + 1, s.sigma_by_epoch[e]);
      }
      acc += s.final_accuracy;
      eps += s.final_epsilon;
    }
    const double n = static_cast<double>(seeds->size());
    csv << absl::StrFormat("%s,%s,mean,,final_accuracy,%.17g\n", label, *dir,
                           acc / n);
    csv << absl::StrFormat("%s,%s,mean,,final_epsilon,%.17g\n", label, *dir,
                           eps / n);
  }
  return absl::OkStatus();
}

}  // namespace dpis
