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

// Private training loops: DPIS and the DP-SGD baseline.

#ifndef DPIS_ENGINE_H_
#define DPIS_ENGINE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpis/accountant.h"
#include "dpis/data_io.h"
#include "dpis/models.h"
#include "dpis/rng.h"
#include "dpis/sampler.h"
#include "dpis/types.h"

namespace dpis {

enum class Method { kDpis, kDpsgd };

const char* MethodName(Method method);
absl::StatusOr<Method> ParseMethod(const std::string& name);

struct TrainConfig {
  Method method = Method::kDpis;
  int64_t b = 128;  // Expected batch size.
  int E = 10;
  int64_t T = 0;  // Iterations per epoch; 0 means ⌊N/b⌋.
  double a_E = 0.8;
  double C1 = 1.0;
  double C_star = 0;  // 0 means 4·C1.
  double k = 5;
  double g_L = 1e-3;
  double lambda = 1.0;
  double eta = 0.1;
  bool adaptive_clip = false;
  double momentum = 0;
  uint64_t seed = 0;

  absl::Status Validate() const;
  double external_clip() const { return C_star > 0 ? C_star : 4 * C1; }
  int64_t iterations_per_epoch(int64_t N) const { return T > 0 ? T : N / b; }
};

struct MetricsRow {
  int epoch = 0;
  int64_t iteration = 0;  // Within the epoch, 1-based.
  double sigma_G = 0;
  double C = 0;
  std::optional<double> K_tilde;  // DPIS only.
  int64_t x_q = 0;  // Fresh gradient evaluations this iteration.
  int64_t x_p = 0;  // Records in the update.
  std::optional<double> train_loss;     // Mean over evaluated records.
  std::optional<double> eval_accuracy;  // Last iteration of an epoch.
  double epsilon = 0;  // Cumulative, at δ₀, over everything released so far.
};

struct EpochSummary {
  double sigma_G = 0;
  double C = 0;
  std::optional<double> K_tilde;
  double mean_x_q = 0;
  double mean_x_p = 0;
  double train_loss = 0;
  std::optional<double> eval_loss;
  std::optional<double> eval_accuracy;
};

struct TrainResult {
  GradVec theta;
  double N_tilde = 0;
  std::vector<MetricsRow> rows;
  std::vector<EpochSummary> epochs;
  RdpLedger ledger{AlphaGrid::Default()};  // Every release actually made.
  DpGuarantee guarantee;
  int64_t gradient_evaluations = 0;
  std::vector<std::string> warnings;
};

// g / max(1, ‖g‖/C).
GradVec Clip(const GradVec& g, double C);

// Plain SGD with optional heavy-ball momentum, applied to released
// gradients only.
class Optimizer {
 public:
  Optimizer(double eta, double momentum) : eta_(eta), momentum_(momentum) {}
  void Step(const GradVec& noisy_grad, GradVec& theta);

 private:
  double eta_;
  double momentum_;
  GradVec velocity_;
};

// Σ_{X_p} ḡ/(Ñ·q·p) + N(0, σ²C²·I)/b. The d noise coordinates are drawn in
// order after the batch.
GradVec DpisNoisyGradient(const SampledBatch& batch, double N_tilde, double b,
                          double C, double sigma, int64_t d, Rng& rng);

// (Σ ḡ + N(0, σ²C²·I))/b over already clipped gradients.
GradVec DpsgdNoisyGradient(std::span<const GradVec> clipped, double b,
                           double C, double sigma, int64_t d, Rng& rng);

void DpisStep(const SampledBatch& batch, double N_tilde, double b, double C,
              double sigma, Optimizer& optimizer, GradVec& theta, Rng& rng);
void DpsgdStep(std::span<const GradVec> clipped, double b, double C,
               double sigma, Optimizer& optimizer, GradVec& theta, Rng& rng);

// Records 0..N-1 each taken independently with probability p, in order.
std::vector<int64_t> UniformBatch(int64_t N, double p, Rng& rng);

struct AdaptiveClip {
  double K_star_tilde = 0;
  double C_next = 0;
};

// K̃* = Σ star_norms + N(0, σ_K²C*²); C_next = max(λ·K̃*/Ñ, 10·g_L).
AdaptiveClip AdaptiveClipUpdate(std::span<const double> star_norms,
                                double sigma_K, double C_star, double N_tilde,
                                double lambda, double g_L, Rng& rng);

// Full run. `eval` may be null; accuracy is then left empty. Fails with
// kOutOfRange when no σ_G in range meets the budget.
absl::StatusOr<TrainResult> RunTraining(const TrainConfig& config,
                                        const PrivacySpec& spec,
                                        const Dataset& train,
                                        const Dataset* eval,
                                        const Model& model);

}  // namespace dpis

#endif  // DPIS_ENGINE_H_
