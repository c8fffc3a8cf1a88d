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

// Private dataset statistics and two-stage batch selection.
//
// A record enters the first stage with probability q = min(b·ĝ/K̃, 1), where
// ĝ is a cached multiple of its last clipped gradient norm. Its gradient is
// then evaluated and the record is accepted with p = ‖ḡ‖/ĝ, so whenever
// q < 1 the overall inclusion probability is b‖ḡ‖/K̃. Only first-stage
// records need a fresh gradient.

#ifndef DPIS_SAMPLER_H_
#define DPIS_SAMPLER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dpis/rng.h"
#include "dpis/types.h"

namespace dpis {

// Retries allowed when the noisy count lands below the batch size.
inline constexpr int kMaxCountRedraws = 100;

// Lower clamp margin of K̃ above b·C.
inline double ClampMargin(double b, double C) { return 1e-3 * b * C; }

struct NoisyStats {
  double N_tilde = 0;
  double K_tilde = 0;
};

struct RecordState {
  double g_hat = 0;              // Sampling numerator ĝ.
  double last_clipped_norm = 0;  // ‖ḡ‖ at the latest evaluation.
};

struct BatchMember {
  int64_t index = 0;
  GradVec grad;  // Clipped to min(ĝ, C_e).
  double q = 0;  // First-stage probability.
  double p = 0;  // Acceptance probability.
};

// X_p with the probabilities needed to weight each member.
struct SampledBatch {
  std::vector<BatchMember> members;
  int64_t first_stage_size = 0;  // |X_q|
};

// Ñ = N + N(0, σ_N²), redrawn while below b. Fails after kMaxCountRedraws.
absl::StatusOr<double> NoisyCount(int64_t N, double sigma_N, double b,
                                  Rng& rng);

// K′ = (1/p_K)·Σ_{i∈B_K} norms[i] + N(0, σ_K²C²). B_K takes each record
// independently with probability p_K, drawn in index order before the
// Gaussian.
absl::StatusOr<double> NoisyGradSum(std::span<const double> clipped_norms,
                                    double p_K, double sigma_K, double C,
                                    Rng& rng);

// min(max(K′, bC + ξ), ÑC).
absl::StatusOr<double> ClampK(double K_prime, double b, double C,
                              double N_tilde, double xi);

// ĝ = k·max(norm, g_L).
double Numerator(double clipped_norm, double k, double g_L);

// ĝ for every record from a full pass of clipped norms.
std::vector<RecordState> InitEpoch(std::span<const double> clipped_norms,
                                   double k, double g_L);

double FirstStageProbability(const RecordState& state, double b,
                             double K_tilde);

// X_q: one uniform draw per record, in index order.
std::vector<int64_t> FirstStage(std::span<const RecordState> states, double b,
                                double K_tilde, Rng& rng);

// Accepts each X_q member, in order, with p = ‖ḡ‖/ĝ. `grads[j]` is the
// fresh gradient of `x_q[j]`, already clipped to min(ĝ, C_e).
absl::StatusOr<SampledBatch> SecondStage(std::span<const int64_t> x_q,
                                         std::vector<GradVec> grads,
                                         std::span<const RecordState> states,
                                         double b, double K_tilde, Rng& rng);

// ĝ ← k·max(‖ḡ‖, g_L) for the records of X_q; others are untouched.
absl::Status UpdateNumerators(std::span<const int64_t> x_q,
                              std::span<const double> fresh_norms, double k,
                              double g_L, std::span<RecordState> states);

// The first stage reaches its intended size of about k·b only when
// K̃ > k·b·C. Below that the oversampling saturates; the caller may warn.
inline bool OversamplingSaturated(double K_tilde, double k, double b,
                                  double C) {
  return K_tilde <= k * b * C;
}

}  // namespace dpis

#endif  // DPIS_SAMPLER_H_
