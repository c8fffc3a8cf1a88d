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

#include "dpis/sampler.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"

namespace dpis {

absl::StatusOr<double> NoisyCount(int64_t N, double sigma_N, double b,
                                  Rng& rng) {
  if (N < 1) return absl::InvalidArgumentError("record count must be >= 1");
  if (!(sigma_N >= 0)) {
    return absl::InvalidArgumentError("sigma_N must be nonnegative");
  }
  for (int attempt = 0; attempt < kMaxCountRedraws; ++attempt) {
    const double n_tilde = static_cast<double>(N) + rng.Gaussian(sigma_N);
    if (n_tilde >= b && n_tilde > 0) return n_tilde;
  }
  return absl::FailedPreconditionError(absl::StrFormat(
      "noisy record count stayed below b = %g after %d draws", b,
      kMaxCountRedraws));
}

absl::StatusOr<double> NoisyGradSum(std::span<const double> clipped_norms,
                                    double p_K, double sigma_K, double C,
                                    Rng& rng) {
  if (!(p_K > 0 && p_K <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("p_K must be in (0, 1], got %g", p_K));
  }
  if (!(C > 0)) return absl::InvalidArgumentError("C must be positive");
  double sum = 0;
  for (double norm : clipped_norms) {
    if (rng.Bernoulli(p_K)) sum += norm;
  }
  return sum / p_K + rng.Gaussian(sigma_K * C);
}

absl::StatusOr<double> ClampK(double K_prime, double b, double C,
                              double N_tilde, double xi) {
  if (!std::isfinite(K_prime)) {
    return absl::InvalidArgumentError("K_prime is not finite");
  }
  const double lower = b * C + xi;
  const double upper = N_tilde * C;
  if (!(upper > lower)) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "empty clamp window: bC + xi = %g, N_tilde*C = %g", lower, upper));
  }
  return std::min(std::max(K_prime, lower), upper);
}

double Numerator(double clipped_norm, double k, double g_L) {
  return k * std::max(clipped_norm, g_L);
}

std::vector<RecordState> InitEpoch(std::span<const double> clipped_norms,
                                   double k, double g_L) {
  std::vector<RecordState> states(clipped_norms.size());
  for (size_t i = 0; i < clipped_norms.size(); ++i) {
    states[i] = {Numerator(clipped_norms[i], k, g_L), clipped_norms[i]};
  }
  return states;
}

double FirstStageProbability(const RecordState& state, double b,
                             double K_tilde) {
  return std::min(b * state.g_hat / K_tilde, 1.0);
}

std::vector<int64_t> FirstStage(std::span<const RecordState> states, double b,
                                double K_tilde, Rng& rng) {
  std::vector<int64_t> x_q;
  for (size_t i = 0; i < states.size(); ++i) {
    if (rng.Bernoulli(FirstStageProbability(states[i], b, K_tilde))) {
      x_q.push_back(static_cast<int64_t>(i));
    }
  }
  return x_q;
}

absl::StatusOr<SampledBatch> SecondStage(std::span<const int64_t> x_q,
                                         std::vector<GradVec> grads,
                                         std::span<const RecordState> states,
                                         double b, double K_tilde, Rng& rng) {
  if (grads.size() != x_q.size()) {
    return absl::InvalidArgumentError("one fresh gradient per X_q member");
  }
  SampledBatch batch;
  batch.first_stage_size = static_cast<int64_t>(x_q.size());
  for (size_t j = 0; j < x_q.size(); ++j) {
    const RecordState& state = states[x_q[j]];
    const double norm = grads[j].norm();
    // Clipping to ĝ bounds the ratio by 1 up to rounding.
    const double p = std::min(norm / state.g_hat, 1.0);
    if (!rng.Bernoulli(p)) continue;
    batch.members.push_back({.index = x_q[j],
                             .grad = std::move(grads[j]),
                             .q = FirstStageProbability(state, b, K_tilde),
                             .p = p});
  }
  return batch;
}

absl::Status UpdateNumerators(std::span<const int64_t> x_q,
                              std::span<const double> fresh_norms, double k,
                              double g_L, std::span<RecordState> states) {
  if (fresh_norms.size() != x_q.size()) {
    return absl::InvalidArgumentError("one fresh norm per X_q member");
  }
  for (size_t j = 0; j < x_q.size(); ++j) {
    RecordState& state = states[x_q[j]];
    state.last_clipped_norm = fresh_norms[j];
    state.g_hat = Numerator(fresh_norms[j], k, g_L);
  }
  return absl::OkStatus();
}

}  // namespace dpis
