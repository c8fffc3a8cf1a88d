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

// Rényi-DP accounting for DPIS and DP-SGD.
//
// Every release of a training run is described by its Rényi cost τ(α) over a
// fixed grid of integer orders. Costs compose by pointwise addition and are
// converted to an (ε, δ) guarantee by minimizing over the grid. The noise
// multiplier of the gradient release is then calibrated as the smallest σ_G
// whose composed cost stays within the target budget.

#ifndef DPIS_ACCOUNTANT_H_
#define DPIS_ACCOUNTANT_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace dpis {

// Bracket and tolerance of the σ_G search.
inline constexpr double kSigmaFloor = 0.1;
inline constexpr double kSigmaCeiling = 100.0;
inline constexpr double kSigmaRelativeTolerance = 1e-3;

// Largest Rényi order accepted by AlphaGrid.
inline constexpr int kMaxRenyiOrder = 4096;

// Ordered set of integer Rényi orders, strictly increasing, all >= 2.
class AlphaGrid {
 public:
  static absl::StatusOr<AlphaGrid> Create(std::vector<int> orders);

  // 2..128 plus {160, 192, 224, 256}.
  static const AlphaGrid& Default();

  const std::vector<int>& orders() const { return orders_; }
  size_t size() const { return orders_.size(); }
  int operator[](size_t i) const { return orders_[i]; }

  friend bool operator==(const AlphaGrid&, const AlphaGrid&) = default;

 private:
  explicit AlphaGrid(std::vector<int> orders) : orders_(std::move(orders)) {}
  std::vector<int> orders_;
};

// Accumulated Rényi cost τ(α), aligned to an AlphaGrid.
class RdpLedger {
 public:
  // All-zero ledger on `grid`.
  explicit RdpLedger(AlphaGrid grid);

  // `tau` must match the grid in size and be nonnegative.
  static absl::StatusOr<RdpLedger> FromCosts(AlphaGrid grid,
                                             std::vector<double> tau);

  const AlphaGrid& grid() const { return grid_; }
  const std::vector<double>& tau() const { return tau_; }
  double tau_at(size_t i) const { return tau_[i]; }

  // Pointwise addition; fails on grid mismatch.
  absl::Status Add(const RdpLedger& other);
  // Adds `times` copies of `other`.
  absl::Status AddScaled(const RdpLedger& other, double times);

 private:
  RdpLedger(AlphaGrid grid, std::vector<double> tau)
      : grid_(std::move(grid)), tau_(std::move(tau)) {}

  AlphaGrid grid_;
  std::vector<double> tau_;
};

struct PrivacySpec {
  double epsilon0 = 0;  // Total budget, nats.
  double delta0 = 0;
  double sigma_N = 0;  // Absolute std of the record-count noise.
  double sigma_K = 0;  // Multiplier of the gradient-norm-sum noise.

  absl::Status Validate() const;
};

// Inputs of one DPIS gradient release.
struct IterationCostParams {
  double b = 0;        // Expected batch size.
  double C = 0;        // Clipping bound.
  double K_tilde = 0;  // Noisy clamped sum of clipped gradient norms.
  double N_tilde = 0;  // Noisy record count.
  double sigma_G = 0;  // Gradient noise multiplier.

  // Checks b >= 1, C > 0, b*C < K_tilde <= N_tilde*C and sigma_G > 0.
  // `require_sigma` = false skips the last check for calibration schedules.
  absl::Status Validate(bool require_sigma = true) const;
};

// A run of `count` iterations sharing the same cost parameters.
struct IterationBlock {
  IterationCostParams params;
  int64_t count = 1;
};

// (ε, δ) guarantee and the order that attains it.
struct DpGuarantee {
  double epsilon = 0;
  int alpha = 0;
};

// α / (2σ²): Gaussian mechanism with unit sensitivity.
absl::StatusOr<double> RdpGaussian(int alpha, double sigma);

// Sampled Gaussian mechanism with sampling probability p:
//   (1/(α-1)) ln Σ_m C(α,m) (1-p)^(α-m) p^m exp((m²-m)/(2σ²)),
// summed in log space.
absl::StatusOr<double> RdpSampledGaussian(int alpha, double p, double sigma);

// One DPIS iteration: the sampled-Gaussian sum with p = bC/K̃ and the
// exponent scaled by K̃²/(Ñ²C²).
absl::StatusOr<double> RdpDpisIteration(int alpha,
                                        const IterationCostParams& params);

// The same three costs evaluated across a grid.
absl::StatusOr<RdpLedger> GaussianLedger(const AlphaGrid& grid, double sigma);
absl::StatusOr<RdpLedger> SampledGaussianLedger(const AlphaGrid& grid,
                                                double p, double sigma);
absl::StatusOr<RdpLedger> DpisIterationLedger(
    const AlphaGrid& grid, const IterationCostParams& params);

absl::StatusOr<RdpLedger> Compose(std::span<const RdpLedger> ledgers);

// Minimizes τ(α) + (ln(1/δ) + (α-1) ln(1-1/α) - ln α)/(α-1) over the grid.
// Ties go to the smaller order.
absl::StatusOr<DpGuarantee> RdpToDp(const RdpLedger& ledger, double delta);

// Cost of the non-gradient releases of a DPIS run: Ñ once, then
// `releases_per_epoch` subsampled norm sums (K̃_{e,1} and K̃*_e) per epoch,
// each at p_K = b/Ñ and multiplier σ_K.
absl::StatusOr<RdpLedger> FixedReleaseCost(const AlphaGrid& grid,
                                           const PrivacySpec& spec, double b,
                                           double N_tilde, int64_t epochs,
                                           int releases_per_epoch = 2);

// Smallest σ in [kSigmaFloor, kSigmaCeiling] such that
// RdpToDp(fixed + cost(σ), δ₀).epsilon <= ε₀, found by bisection in log(σ)
// down to kSigmaRelativeTolerance. `cost` must be nonincreasing in σ.
// Returns kSigmaFloor when the floor already fits and kOutOfRange when even
// kSigmaCeiling does not.
absl::StatusOr<double> CalibrateNoiseMultiplier(
    const PrivacySpec& target, const RdpLedger& fixed,
    const std::function<absl::StatusOr<RdpLedger>(double)>& cost);

// CalibrateNoiseMultiplier over a schedule of DPIS iterations. The sigma_G
// fields of the schedule are ignored.
absl::StatusOr<double> CalibrateSigma(const PrivacySpec& target,
                                      const RdpLedger& fixed,
                                      std::span<const IterationBlock> schedule);

// What the budget planner knows at the start of epoch `epoch` (1-based).
struct EpochPlanInput {
  int epoch = 1;
  int num_epochs = 1;
  int64_t iterations_per_epoch = 1;
  double a_E = 0.8;
  double b = 0;
  double N_tilde = 0;
  double K_tilde = 0;  // Observed for this epoch.
  double C = 0;        // Clip bound of this epoch, assumed for all later ones.
};

// Number of epochs budgeted under the worst-case K̃ assumption.
int PhaseOneEpochs(double a_E, int num_epochs);

// σ_G for every iteration of epoch `input.epoch`. `committed` holds all
// costs already paid or reserved outside the gradient releases of this and
// later epochs. In phase one later epochs are budgeted at K̃ = ÑC; in phase
// two at the current K̃.
absl::StatusOr<double> PlanEpochSigma(const EpochPlanInput& input,
                                      const RdpLedger& committed,
                                      const PrivacySpec& target);

}  // namespace dpis

#endif  // DPIS_ACCOUNTANT_H_
