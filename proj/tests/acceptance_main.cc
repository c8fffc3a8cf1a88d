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

// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpis/accountant.h"
#include "dpis/engine.h"
#include "dpis/models.h"
#include "dpis/rng.h"
#include "dpis/runner.h"
#include "dpis/sampler.h"
#include "dpis/status_macros.h"
#include "json.hpp"
#include "oracles/oracles.h"
#include "support/gradcheck.h"
#include "support/instances.h"

namespace dpis {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Tolerances.
constexpr double kOracleRelTol = 1e-6;
constexpr double kOracleAbsTol = 1e-10;
constexpr double kReductionTol = 1e-12;
constexpr double kCalibrationStep = 2e-3;
constexpr double kEnumerationTol = 1e-10;
constexpr double kSamplerSizeTol = 0.05;
constexpr double kBinomialSigmas = 3;
// 1000 records tested at 3σ: about 2.7 expected outside by chance alone.
// More than 7 has probability below 1% if the sampler is right.
constexpr int kMaxRecordsOutside = 7;
constexpr double kGradientTol = 1e-5;
constexpr double kOracleSeconds = 30;
constexpr double kEndToEndSeconds = 15 * 60;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

Outcome OracleAgreement() {
  const auto start = Clock::now();
  double worst_ratio = 0;
  std::string worst;
  bool ok = true;
  for (double p : {0.001, 0.01, 0.1}) {
    for (double sigma : {0.5, 1.0, 2.0}) {
      for (int alpha : {2, 4, 8, 16, 32, 64}) {
        const absl::StatusOr<double> closed =
            RdpSampledGaussian(alpha, p, sigma);
        const absl::StatusOr<oracles::QuadratureResult> oracle =
            oracles::RenyiDivergenceQuadrature(
                alpha, {.p = p, .shift = 1, .sigma = sigma});
        if (!closed.ok() || !oracle.ok()) {
          return {false, absl::StrFormat("evaluation failed at p=%g sigma=%g "
                                         "alpha=%d",
                                         p, sigma, alpha)};
        }
        const double bound =
            std::max(kOracleAbsTol, kOracleRelTol * oracle->tau);
        const double ratio = std::abs(*closed - oracle->tau) / bound;
        if (ratio > worst_ratio) {
          worst_ratio = ratio;
          worst = absl::StrFormat("p=%g sigma=%g alpha=%d", p, sigma, alpha);
        }
        ok = ok && ratio <= 1;
      }
    }
  }
  const double secs = Seconds(start);
  return {ok && secs < kOracleSeconds,
          absl::StrFormat("54 points, worst |diff|/bound %.3g at %s, %.1f s",
                          worst_ratio, worst, secs)};
}

Outcome GaussianReduction() {
  double worst = 0;
  for (double sigma : {0.5, 1.0, 2.0, 4.0}) {
    for (int alpha : AlphaGrid::Default().orders()) {
      const double sgm = RdpSampledGaussian(alpha, 1, sigma).value();
      worst = std::max(worst, std::abs(sgm - alpha / (2 * sigma * sigma)));
    }
  }
  return {worst <= kReductionTol,
          absl::StrFormat("max |rdp_sgm(a,1,s) - a/(2s^2)| = %.3g", worst)};
}

Outcome DpisReductionAndMonotonicity() {
  const AlphaGrid& grid = AlphaGrid::Default();
  double worst = 0;
  for (double b : {16.0, 128.0}) {
    for (double N_tilde : {1000.0, 6000.5}) {
      for (double C : {0.5, 1.0, 4.0}) {
        for (double sigma : {0.6, 1.0, 3.0}) {
          const IterationCostParams params{.b = b, .C = C,
                                           .K_tilde = N_tilde * C,
                                           .N_tilde = N_tilde,
                                           .sigma_G = sigma};
          for (int alpha : grid.orders()) {
            const double dpis = RdpDpisIteration(alpha, params).value();
            const double sgm =
                RdpSampledGaussian(alpha, b / N_tilde, sigma).value();
            worst = std::max(worst, std::abs(dpis - sgm));
          }
        }
      }
    }
  }

  // τ over 50 K̃ values in (bC, ÑC].
  int decreases = 0;
  const double b = 64, C = 1, N_tilde = 6000;
  for (double sigma : {0.7, 1.2}) {
    for (int alpha : grid.orders()) {
      double previous = 0;
      for (int i = 1; i <= 50; ++i) {
        const double K = b * C + (N_tilde * C - b * C) * i / 50.0;
        const double tau =
            RdpDpisIteration(alpha, {.b = b, .C = C, .K_tilde = K,
                                     .N_tilde = N_tilde, .sigma_G = sigma})
                .value();
        if (tau < previous) ++decreases;
        previous = tau;
      }
    }
  }
  return {worst <= kReductionTol && decreases == 0,
          absl::StrFormat("max |dpis(K=NC) - sgm(b/N)| = %.3g; %d decreases "
                          "over 50 K values x %d orders x 2 sigmas",
                          worst, decreases, grid.size())};
}

Outcome CalibrationRoundTrip() {
  // 20 epochs over N = 6000, b = 128, with K̃ at 40% of its ceiling.
  const AlphaGrid& grid = AlphaGrid::Default();
  const double N_tilde = 6000, b = 128, C = 1;
  const int epochs = 20;
  const int64_t T = 46;
  const std::vector<IterationBlock> schedule = {
      {.params = {.b = b, .C = C, .K_tilde = 0.4 * N_tilde * C,
                  .N_tilde = N_tilde},
       .count = epochs * T}};
  std::string detail;
  bool ok = true;
  for (double eps0 : {0.5, 1.0, 2.0, 4.0}) {
    const PrivacySpec spec{.epsilon0 = eps0, .delta0 = 1e-5,
                           .sigma_N = 0.02 * N_tilde,
                           .sigma_K = 0.02 * N_tilde};
    const RdpLedger fixed =
        FixedReleaseCost(grid, spec, b, N_tilde, epochs).value();
    auto epsilon_at = [&](double sigma) {
      IterationCostParams params = schedule[0].params;
      params.sigma_G = sigma;
      RdpLedger total = fixed;
      (void)total.AddScaled(DpisIterationLedger(grid, params).value(),
                            schedule[0].count);
      return RdpToDp(total, spec.delta0).value().epsilon;
    };
    const absl::StatusOr<double> sigma = CalibrateSigma(spec, fixed, schedule);
    if (!sigma.ok()) {
      ok = false;
      absl::StrAppend(&detail, absl::StrFormat("eps0=%g: %s; ", eps0,
                                               sigma.status().ToString()));
      continue;
    }
    const double at = epsilon_at(*sigma);
    const double below = epsilon_at(*sigma / (1 + kCalibrationStep));
    ok = ok && at <= eps0 && below > eps0;
    absl::StrAppend(&detail, absl::StrFormat(
                                 "eps0=%g: sigma %.4f eps %.4f, 0.2%% lower "
                                 "eps %.4f; ",
                                 eps0, *sigma, at, below));
  }
  if (detail.ends_with("; ")) detail.resize(detail.size() - 2);
  return {ok, detail};
}

std::vector<test_support::FrozenInstance> FrozenInstances() {
  Rng rng(20260101);
  std::vector<test_support::FrozenInstance> out;
  for (int i = 0; i < 20; ++i) {
    out.push_back(test_support::MakeFrozenInstance(6, 3, rng, /*k=*/2,
                                                   /*b=*/1 + i % 3));
  }
  return out;
}

std::vector<std::vector<double>> AsRows(const std::vector<GradVec>& grads) {
  std::vector<std::vector<double>> rows;
  for (const GradVec& g : grads) rows.emplace_back(g.data(), g.data() + g.size());
  return rows;
}

std::vector<double> Inclusions(const test_support::FrozenInstance& inst) {
  std::vector<double> pi;
  for (int64_t i = 0; i < inst.size(); ++i) pi.push_back(inst.inclusion(i));
  return pi;
}

Outcome ExactUnbiasedness() {
  double worst_estimator = 0, worst_oracle = 0;
  for (const auto& inst : FrozenInstances()) {
    const GradVec mean = inst.Mean();
    const auto enumerated = test_support::EnumerateDpisEstimator(inst);
    worst_estimator =
        std::max(worst_estimator, (enumerated.mean - mean).cwiseAbs().maxCoeff());
    const auto oracle = oracles::EnumerateEstimatorMoments(
        AsRows(inst.clipped), Inclusions(inst), inst.b, inst.N, 0, inst.C);
    for (int j = 0; j < mean.size(); ++j) {
      worst_oracle = std::max(worst_oracle, std::abs(oracle->mean[j] - mean[j]));
    }
  }
  return {worst_estimator <= kEnumerationTol && worst_oracle <= kEnumerationTol,
          absl::StrFormat("20 instances; max |E[g] - mean| estimator %.3g, "
                          "oracle %.3g",
                          worst_estimator, worst_oracle)};
}

Outcome VarianceIdentity() {
  double worst_estimator = 0, worst_oracle = 0;
  int not_smaller = 0, unequal = 0;
  const double sigma = 0.8;
  for (const auto& inst : FrozenInstances()) {
    const double closed0 = test_support::ClosedFormSecondMoment(inst, 0);
    const double closed = test_support::ClosedFormSecondMoment(inst, sigma);
    worst_estimator = std::max(
        worst_estimator,
        std::abs(test_support::EnumerateDpisEstimator(inst).second_moment -
                 closed0));
    const auto oracle = oracles::EnumerateEstimatorMoments(
        AsRows(inst.clipped), Inclusions(inst), inst.b, inst.N, sigma, inst.C);
    worst_oracle = std::max(worst_oracle, std::abs(oracle->second_moment - closed));

    const auto terms = test_support::CompareSampleVariance(inst.clipped);
    double lo = INFINITY, hi = 0;
    for (const GradVec& g : inst.clipped) {
      lo = std::min(lo, g.norm());
      hi = std::max(hi, g.norm());
    }
    if (hi > lo) {
      ++unequal;
      if (!(terms.importance < terms.uniform)) ++not_smaller;
    } else if (terms.importance > terms.uniform * (1 + 1e-12)) {
      ++not_smaller;
    }
  }
  return {worst_estimator <= kEnumerationTol && worst_oracle <= kEnumerationTol &&
              not_smaller == 0,
          absl::StrFormat("max |E||g||^2 - closed form| estimator %.3g, oracle "
                          "(sigma=%.1f) %.3g; IS term below uniform on %d/%d "
                          "unequal-norm instances, violations %d",
                          worst_estimator, sigma, worst_oracle,
                          unequal - not_smaller, unequal, not_smaller)};
}

Outcome SamplerStatistics() {
  const int64_t N = 1000, iterations = 10000;
  const double k = 5, b = 50, C = 1;
  Rng population(7);
  std::vector<double> norms(N);
  double K_tilde = 0;
  for (double& n : norms) {
    n = 0.05 + 0.95 * population.Uniform();
    K_tilde += n;
  }
  const std::vector<RecordState> states = InitEpoch(norms, k, 1e-6);

  Rng rng(8);
  std::vector<int64_t> included(N, 0);
  double total_q = 0, total_p = 0;
  for (int64_t t = 0; t < iterations; ++t) {
    const std::vector<int64_t> x_q = FirstStage(states, b, K_tilde, rng);
    std::vector<GradVec> grads;
    for (int64_t i : x_q) grads.push_back(GradVec::Constant(1, norms[i]));
    const SampledBatch batch =
        SecondStage(x_q, std::move(grads), states, b, K_tilde, rng).value();
    total_q += static_cast<double>(x_q.size());
    total_p += static_cast<double>(batch.members.size());
    for (const BatchMember& m : batch.members) ++included[m.index];
  }
  const double mean_q = total_q / iterations, mean_p = total_p / iterations;
  int outside = 0;
  for (int64_t i = 0; i < N; ++i) {
    const double pi = b * std::min(norms[i], C) / K_tilde;
    const double freq = static_cast<double>(included[i]) / iterations;
    if (std::abs(freq - pi) >
        kBinomialSigmas * std::sqrt(pi * (1 - pi) / iterations)) {
      ++outside;
    }
  }
  const bool ok = std::abs(mean_q - k * b) <= kSamplerSizeTol * k * b &&
                  std::abs(mean_p - b) <= kSamplerSizeTol * b &&
                  outside <= kMaxRecordsOutside;
  return {ok, absl::StrFormat("mean |X_q| %.2f (kb=%g), mean |X_p| %.2f (b=%g), "
                              "%d of %d records outside 3-sigma (allowed %d)",
                              mean_q, k * b, mean_p, b, outside, N,
                              kMaxRecordsOutside)};
}

Outcome GradientCorrectness() {
  LogisticRegression logreg(20, 10);
  Mlp mlp(16, Mlp::kDefaultHidden, 10);
  std::string detail;
  bool ok = true;
  Rng rng(11);
  for (const Model* model : {static_cast<const Model*>(&logreg),
                             static_cast<const Model*>(&mlp)}) {
    double worst = 0;
    for (int probe = 0; probe < 100; ++probe) {
      const GradVec theta = test_support::RandomTheta(*model, 0.5, rng);
      const Example x = test_support::RandomExample(
          model->input_dim(), model->num_classes(), rng);
      worst = std::max(worst,
                       test_support::FiniteDifferenceError(*model, theta, x));
    }
    ok = ok && worst <= kGradientTol;
    absl::StrAppend(&detail, detail.empty() ? " " : "; ",
                    absl::StrFormat("%s (d=%d) worst %.3g", model->name(),
                                    model->dim(), worst));
  }
  return {ok, "100 probes each:" + detail};
}

struct SeedRun {
  json ledger;
  std::vector<json> rows;
};

absl::StatusOr<SeedRun> ReadSeedRun(const fs::path& dir) {
  SeedRun run;
  std::ifstream ledger(dir / "ledger.json");
  std::ifstream metrics(dir / "metrics.jsonl");
  if (!ledger || !metrics) {
    return absl::NotFoundError("missing outputs in " + dir.string());
  }
  run.ledger = json::parse(ledger);
  for (std::string line; std::getline(metrics, line);) {
    if (!line.empty()) run.rows.push_back(json::parse(line));
  }
  return run;
}

double FinalAccuracy(const SeedRun& run) {
  for (auto it = run.rows.rbegin(); it != run.rows.rend(); ++it) {
    if (!(*it)["eval_accuracy"].is_null()) return (*it)["eval_accuracy"];
  }
  return NAN;
}

const fs::path& WorkDir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 absl::StrFormat("dpis_acceptance_%d", ::getpid());
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

absl::Status RunConfigFile(const std::string& name, const fs::path& out) {
  ASSIGN_OR_RETURN(RunConfig config,
                   ParseRunConfig(std::string(DPIS_SOURCE_DIR) + "/configs/" + name));
  config.out = out.string();
  std::ostringstream log;
  return RunExperiment(config, log);
}

Outcome EndToEnd() {
  const auto start = Clock::now();
  const fs::path dpis_dir = WorkDir() / "mnist_dpis";
  const fs::path sgd_dir = WorkDir() / "mnist_dpsgd";
  for (const auto& [cfg, dir] : {std::pair{"mnist_dpis.cfg", dpis_dir},
                                 std::pair{"mnist_dpsgd.cfg", sgd_dir}}) {
    if (absl::Status s = RunConfigFile(cfg, dir); !s.ok()) {
      return {false, absl::StrFormat("%s: %s", cfg, s.ToString())};
    }
  }
  const double secs = Seconds(start);

  double acc_dpis = 0, acc_sgd = 0;
  int seeds = 0, phase2_epochs = 0, increases = 0, not_lower = 0;
  double min_drop = INFINITY;
  std::string per_seed, increase_seeds;
  for (int seed = 1; seed <= 5; ++seed) {
    const std::string name = absl::StrFormat("seed_%d", seed);
    absl::StatusOr<SeedRun> a = ReadSeedRun(dpis_dir / name);
    absl::StatusOr<SeedRun> b = ReadSeedRun(sgd_dir / name);
    if (!a.ok() || !b.ok()) return {false, "missing seed outputs for " + name};
    ++seeds;
    acc_dpis += FinalAccuracy(*a);
    acc_sgd += FinalAccuracy(*b);
    absl::StrAppend(&per_seed, absl::StrFormat(" %.3f/%.3f", FinalAccuracy(*a),
                                               FinalAccuracy(*b)));

    // Per-epoch σ, K̃ and largest C (σ and K̃ are constant within an epoch).
    struct Epoch {
      double sigma = 0, K_tilde = 0, C = 0;
    };
    std::map<int, Epoch> epoch;
    for (const json& row : a->rows) {
      Epoch& ep = epoch[row["epoch"].get<int>()];
      ep.sigma = row["sigma_G"];
      ep.K_tilde = row["K_tilde"];
      ep.C = std::max(ep.C, row["C"].get<double>());
    }
    const double N_tilde = a->ledger["N_tilde"];
    const int num_epochs = static_cast<int>(epoch.size());
    const int boundary = PhaseOneEpochs(0.8, num_epochs);
    double phase1_min = INFINITY;
    for (int e = 1; e <= boundary; ++e) {
      phase1_min = std::min(phase1_min, epoch[e].sigma);
    }
    for (int e = boundary + 1; e <= num_epochs; ++e) {
      ++phase2_epochs;
      if (e > boundary + 1 && epoch[e].sigma > epoch[e - 1].sigma) {
        ++increases;
        const double rise = epoch[e].sigma / epoch[e - 1].sigma - 1;
        absl::StrAppend(&increase_seeds,
                        absl::StrFormat(" s%d:e%d +%.1f%%", seed, e, 100 * rise));
      }
      if (epoch[e].K_tilde < N_tilde * epoch[e].C) {
        if (!(epoch[e].sigma < phase1_min)) ++not_lower;
        min_drop = std::min(min_drop, 1 - epoch[e].sigma / phase1_min);
      }
    }
  }
  acc_dpis /= seeds;
  acc_sgd /= seeds;
  const bool accuracy_ok = acc_dpis >= acc_sgd;
  const bool trend_ok = increases == 0 && not_lower == 0;
  return {accuracy_ok && trend_ok && secs < kEndToEndSeconds,
          absl::StrFormat(
              "(a) %s mean accuracy DPIS %.4f vs DP-SGD %.4f (per seed%s); "
              "(b) %s phase-2 sigma below phase-1 min in %d/%d epochs (drop "
              ">= %.1f%%), consecutive phase-2 increases %d%s; %.0f s",
              accuracy_ok ? "ok" : "FAIL", acc_dpis, acc_sgd, per_seed,
              trend_ok ? "ok" : "FAIL", phase2_epochs - not_lower,
              phase2_epochs, 100 * min_drop, increases,
              increase_seeds.empty() ? "" : " [" + increase_seeds.substr(1) + "]",
              secs)};
}

Outcome PrivacyAudit() {
  // Everything the end-to-end check left behind plus two fresh synthetic runs.
  for (const char* cfg : {"synth_dpis.cfg", "synth_dpsgd.cfg"}) {
    if (absl::Status s = RunConfigFile(cfg, WorkDir() / cfg); !s.ok()) {
      return {false, absl::StrFormat("%s: %s", cfg, s.ToString())};
    }
  }
  int runs = 0, failures = 0;
  double worst_margin = -INFINITY;
  for (const auto& entry : fs::recursive_directory_iterator(WorkDir())) {
    if (entry.path().filename() != "ledger.json") continue;
    absl::StatusOr<SeedRun> run = ReadSeedRun(entry.path().parent_path());
    if (!run.ok()) return {false, run.status().ToString()};
    ++runs;
    const double eps = run->ledger["epsilon"], eps0 = run->ledger["epsilon0"];
    worst_margin = std::max(worst_margin, eps - eps0);
    bool good = eps <= eps0 && !run->rows.empty();
    double previous = 0;
    for (const json& row : run->rows) {
      good = good && row["epsilon"].get<double>() >= previous;
      previous = row["epsilon"];
    }
    good = good && previous == eps;
    if (!good) ++failures;
  }
  return {runs > 0 && failures == 0,
          absl::StrFormat("%d runs audited, %d failing; max eps - eps0 = %.3g",
                          runs, failures, worst_margin)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace
}  // namespace dpis

int main(int argc, char** argv) {
  using dpis::Criterion;
  const std::vector<Criterion> criteria = {
      {1, "accountant-oracle agreement", dpis::OracleAgreement},
      {2, "Gaussian reduction", dpis::GaussianReduction},
      {3, "DPIS-to-SGM reduction and monotonicity in K",
       dpis::DpisReductionAndMonotonicity},
      {4, "calibration round-trip", dpis::CalibrationRoundTrip},
      {5, "exact unbiasedness", dpis::ExactUnbiasedness},
      {6, "variance identity", dpis::VarianceIdentity},
      {7, "sampler statistics", dpis::SamplerStatistics},
      {8, "gradient correctness", dpis::GradientCorrectness},
      {9, "end-to-end MNIST subset comparison", dpis::EndToEnd},
      {10, "privacy audit", dpis::PrivacyAudit},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const dpis::Outcome outcome = c.check();
    std::cout << (outcome.pass ? "[PASS] " : "[FAIL] ") << c.id << ". "
              << c.name << ": " << outcome.detail << std::endl;
    if (!outcome.pass) ++failed;
  }
  std::filesystem::remove_all(dpis::WorkDir());
  return failed == 0 ? 0 : 1;
}
