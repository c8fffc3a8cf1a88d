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

#include "dpis/accountant.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "dpis/status_macros.h"

namespace dpis {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ln(n!) for n in [0, kMaxRenyiOrder], built once.
const std::vector<double>& LogFactorials() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kMaxRenyiOrder + 1, 0.0);
    for (int n = 2; n <= kMaxRenyiOrder; ++n) {
      t[n] = t[n - 1] + std::log(static_cast<double>(n));
    }
    return t;
  }();
  return table;
}

double LogBinomial(int n, int k) {
  const std::vector<double>& lf = LogFactorials();
  return lf[n] - lf[k] - lf[n - k];
}

absl::Status CheckOrder(int alpha) {
  if (alpha < 2 || alpha > kMaxRenyiOrder) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "Rényi order must be in [2, %d], got %d", kMaxRenyiOrder, alpha));
  }
  return absl::OkStatus();
}

// (1/(α-1)) ln Σ_{m=0}^{α} C(α,m) (1-p)^{α-m} p^m exp((m²-m)·scale),
// with every term kept as a logarithm.
double BinomialMixtureCost(int alpha, double p, double scale) {
  const double log_p = p > 0 ? std::log(p) : kNegInf;
  const double log_q = p < 1 ? std::log1p(-p) : kNegInf;
  std::vector<double> terms;
  terms.reserve(alpha + 1);
  double max_term = kNegInf;
  for (int m = 0; m <= alpha; ++m) {
    if ((m > 0 && p == 0) || (m < alpha && p == 1)) continue;
    const double md = m;
    double term = LogBinomial(alpha, m) + md * (m > 0 ? log_p : 0.0) +
                  (alpha - md) * (m < alpha ? log_q : 0.0) +
                  (md * md - md) * scale;
    terms.push_back(term);
    max_term = std::max(max_term, term);
  }
  double sum = 0;
  for (double t : terms) sum += std::exp(t - max_term);
  const double tau = (max_term + std::log(sum)) / (alpha - 1);
  // Rounding can leave a value a few ulp below zero when p is tiny.
  return std::max(tau, 0.0);
}

template <typename Fn>
absl::StatusOr<RdpLedger> Tabulate(const AlphaGrid& grid, Fn&& cost) {
  std::vector<double> tau(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    ASSIGN_OR_RETURN(tau[i], cost(grid[i]));
  }
  return RdpLedger::FromCosts(grid, std::move(tau));
}

}  // namespace

absl::StatusOr<AlphaGrid> AlphaGrid::Create(std::vector<int> orders) {
  if (orders.empty()) {
    return absl::InvalidArgumentError("alpha grid must be non-empty");
  }
  for (size_t i = 0; i < orders.size(); ++i) {
    RETURN_IF_ERROR(CheckOrder(orders[i]));
    if (i > 0 && orders[i] <= orders[i - 1]) {
      return absl::InvalidArgumentError(
          "alpha grid must be strictly increasing");
    }
  }
  return AlphaGrid(std::move(orders));
}

const AlphaGrid& AlphaGrid::Default() {
  static const AlphaGrid grid = [] {
    std::vector<int> orders;
    for (int a = 2; a <= 128; ++a) orders.push_back(a);
    for (int a : {160, 192, 224, 256}) orders.push_back(a);
    return AlphaGrid(std::move(orders));
  }();
  return grid;
}

RdpLedger::RdpLedger(AlphaGrid grid)
    : grid_(std::move(grid)), tau_(grid_.size(), 0.0) {}

absl::StatusOr<RdpLedger> RdpLedger::FromCosts(AlphaGrid grid,
                                               std::vector<double> tau) {
  if (tau.size() != grid.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "ledger has %d costs for %d orders", tau.size(), grid.size()));
  }
  for (double t : tau) {
    if (!(t >= 0)) {
      return absl::InvalidArgumentError(
          absl::StrFormat("Rényi cost must be nonnegative, got %g", t));
    }
  }
  return RdpLedger(std::move(grid), std::move(tau));
}

absl::Status RdpLedger::Add(const RdpLedger& other) {
  return AddScaled(other, 1.0);
}

absl::Status RdpLedger::AddScaled(const RdpLedger& other, double times) {
  if (!(grid_ == other.grid_)) {
    return absl::InvalidArgumentError("ledgers use different alpha grids");
  }
  if (!(times >= 0)) {
    return absl::InvalidArgumentError("ledger multiplier must be nonnegative");
  }
  for (size_t i = 0; i < tau_.size(); ++i) tau_[i] += times * other.tau_[i];
  return absl::OkStatus();
}

absl::Status PrivacySpec::Validate() const {
  if (!(epsilon0 > 0)) {
    return absl::InvalidArgumentError("epsilon0 must be positive");
  }
  if (!(delta0 > 0 && delta0 < 1)) {
    return absl::InvalidArgumentError("delta0 must be in (0, 1)");
  }
  if (!(sigma_N > 0)) {
    return absl::InvalidArgumentError("sigma_N must be positive");
  }
  if (!(sigma_K > 0)) {
    return absl::InvalidArgumentError("sigma_K must be positive");
  }
  return absl::OkStatus();
}

absl::Status IterationCostParams::Validate(bool require_sigma) const {
  if (!(b >= 1)) {
    return absl::InvalidArgumentError("expected batch size must be >= 1");
  }
  if (!(C > 0)) {
    return absl::InvalidArgumentError("clipping bound must be positive");
  }
  if (!(K_tilde > b * C)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "K_tilde = %g must exceed b*C = %g", K_tilde, b * C));
  }
  // A few ulp of slack so that K_tilde = N_tilde * C computed elsewhere passes.
  if (K_tilde > N_tilde * C * (1 + 4 * std::numeric_limits<double>::epsilon())) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "K_tilde = %g exceeds N_tilde*C = %g", K_tilde, N_tilde * C));
  }
  if (require_sigma && !(sigma_G > 0)) {
    return absl::InvalidArgumentError("sigma_G must be positive");
  }
  return absl::OkStatus();
}

absl::StatusOr<double> RdpGaussian(int alpha, double sigma) {
  RETURN_IF_ERROR(CheckOrder(alpha));
  if (!(sigma > 0)) {
    return absl::InvalidArgumentError("noise multiplier must be positive");
  }
  return alpha / (2 * sigma * sigma);
}

absl::StatusOr<double> RdpSampledGaussian(int alpha, double p, double sigma) {
  RETURN_IF_ERROR(CheckOrder(alpha));
  if (!(p >= 0 && p <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("sampling probability must be in [0, 1], got %g", p));
  }
  if (!(sigma > 0)) {
    return absl::InvalidArgumentError("noise multiplier must be positive");
  }
  return BinomialMixtureCost(alpha, p, 1.0 / (2 * sigma * sigma));
}

absl::StatusOr<double> RdpDpisIteration(int alpha,
                                        const IterationCostParams& params) {
  RETURN_IF_ERROR(CheckOrder(alpha));
  RETURN_IF_ERROR(params.Validate());
  const double p = params.b * params.C / params.K_tilde;
  const double ratio =
      params.K_tilde / (params.N_tilde * params.sigma_G * params.C);
  return BinomialMixtureCost(alpha, p, ratio * ratio / 2);
}

absl::StatusOr<RdpLedger> GaussianLedger(const AlphaGrid& grid, double sigma) {
  return Tabulate(grid, [sigma](int a) { return RdpGaussian(a, sigma); });
}

absl::StatusOr<RdpLedger> SampledGaussianLedger(const AlphaGrid& grid,
                                                double p, double sigma) {
  return Tabulate(
      grid, [p, sigma](int a) { return RdpSampledGaussian(a, p, sigma); });
}

absl::StatusOr<RdpLedger> DpisIterationLedger(
    const AlphaGrid& grid, const IterationCostParams& params) {
  return Tabulate(
      grid, [&params](int a) { return RdpDpisIteration(a, params); });
}

absl::StatusOr<RdpLedger> Compose(std::span<const RdpLedger> ledgers) {
  if (ledgers.empty()) {
    return absl::InvalidArgumentError("nothing to compose");
  }
  RdpLedger total(ledgers.front().grid());
  for (const RdpLedger& ledger : ledgers) {
    RETURN_IF_ERROR(total.Add(ledger));
  }
  return total;
}

absl::StatusOr<DpGuarantee> RdpToDp(const RdpLedger& ledger, double delta) {
  if (!(delta > 0 && delta < 1)) {
    return absl::InvalidArgumentError("delta must be in (0, 1)");
  }
  const AlphaGrid& grid = ledger.grid();
  if (grid.size() == 0) {
    return absl::InvalidArgumentError("empty alpha grid");
  }
  const double log_inv_delta = -std::log(delta);
  DpGuarantee best{std::numeric_limits<double>::infinity(), 0};
  for (size_t i = 0; i < grid.size(); ++i) {
    const double a = grid[i];
    const double eps =
        ledger.tau_at(i) +
        (log_inv_delta + (a - 1) * std::log1p(-1 / a) - std::log(a)) / (a - 1);
    if (eps < best.epsilon) best = {eps, grid[i]};
  }
  return best;
}

absl::StatusOr<RdpLedger> FixedReleaseCost(const AlphaGrid& grid,
                                           const PrivacySpec& spec, double b,
                                           double N_tilde, int64_t epochs,
                                           int releases_per_epoch) {
  RETURN_IF_ERROR(spec.Validate());
  if (!(b > 0 && b < N_tilde)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "p_K = b/N_tilde must be in (0, 1): b = %g, N_tilde = %g", b,
        N_tilde));
  }
  if (epochs < 0 || releases_per_epoch < 0) {
    return absl::InvalidArgumentError("negative release count");
  }
  ASSIGN_OR_RETURN(RdpLedger total, GaussianLedger(grid, spec.sigma_N));
  if (epochs > 0 && releases_per_epoch > 0) {
    ASSIGN_OR_RETURN(RdpLedger norm_sum,
                     SampledGaussianLedger(grid, b / N_tilde, spec.sigma_K));
    RETURN_IF_ERROR(total.AddScaled(
        norm_sum, static_cast<double>(epochs) * releases_per_epoch));
  }
  return total;
}

absl::StatusOr<double> CalibrateNoiseMultiplier(
    const PrivacySpec& target, const RdpLedger& fixed,
    const std::function<absl::StatusOr<RdpLedger>(double)>& cost) {
  RETURN_IF_ERROR(target.Validate());
  auto fits = [&](double sigma) -> absl::StatusOr<bool> {
    ASSIGN_OR_RETURN(RdpLedger total, cost(sigma));
    RETURN_IF_ERROR(total.Add(fixed));
    ASSIGN_OR_RETURN(DpGuarantee dp, RdpToDp(total, target.delta0));
    return dp.epsilon <= target.epsilon0;
  };

  ASSIGN_OR_RETURN(bool floor_fits, fits(kSigmaFloor));
  if (floor_fits) return kSigmaFloor;
  ASSIGN_OR_RETURN(bool ceiling_fits, fits(kSigmaCeiling));
  if (!ceiling_fits) {
    return absl::OutOfRangeError(absl::StrFormat(
        "budget epsilon0 = %g is infeasible even at sigma_G = %g",
        target.epsilon0, kSigmaCeiling));
  }
  // Bisection on a fixed log-spaced lattice: the result is the smallest
  // lattice point that fits, so it is monotone in the required noise.
  double lo = kSigmaFloor;
  double hi = kSigmaCeiling;
  while (hi / lo > 1 + kSigmaRelativeTolerance) {
    const double mid = std::sqrt(lo * hi);
    ASSIGN_OR_RETURN(bool mid_fits, fits(mid));
    (mid_fits ? hi : lo) = mid;
  }
  return hi;
}

absl::StatusOr<double> CalibrateSigma(
    const PrivacySpec& target, const RdpLedger& fixed,
    std::span<const IterationBlock> schedule) {
  if (schedule.empty()) {
    return absl::InvalidArgumentError("calibration schedule is empty");
  }
  for (const IterationBlock& block : schedule) {
    RETURN_IF_ERROR(block.params.Validate(/*require_sigma=*/false));
    if (block.count < 0) {
      return absl::InvalidArgumentError("negative iteration count");
    }
  }
  const AlphaGrid& grid = fixed.grid();
  return CalibrateNoiseMultiplier(
      target, fixed, [&](double sigma) -> absl::StatusOr<RdpLedger> {
        RdpLedger total(grid);
        for (const IterationBlock& block : schedule) {
          IterationCostParams params = block.params;
          params.sigma_G = sigma;
          ASSIGN_OR_RETURN(RdpLedger one, DpisIterationLedger(grid, params));
          RETURN_IF_ERROR(
              total.AddScaled(one, static_cast<double>(block.count)));
        }
        return total;
      });
}

int PhaseOneEpochs(double a_E, int num_epochs) {
  return static_cast<int>(std::floor(a_E * num_epochs + 1e-9));
}

absl::StatusOr<double> PlanEpochSigma(const EpochPlanInput& input,
                                      const RdpLedger& committed,
                                      const PrivacySpec& target) {
  if (input.epoch < 1 || input.epoch > input.num_epochs) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "epoch %d outside [1, %d]", input.epoch, input.num_epochs));
  }
  if (!(input.a_E >= 0 && input.a_E <= 1)) {
    return absl::InvalidArgumentError("a_E must be in [0, 1]");
  }
  if (input.iterations_per_epoch < 1) {
    return absl::InvalidArgumentError("need at least one iteration per epoch");
  }
  const IterationCostParams current{.b = input.b,
                                    .C = input.C,
                                    .K_tilde = input.K_tilde,
                                    .N_tilde = input.N_tilde};
  const bool phase_one =
      input.epoch <= PhaseOneEpochs(input.a_E, input.num_epochs);
  IterationCostParams future = current;
  if (phase_one) future.K_tilde = input.N_tilde * input.C;

  std::vector<IterationBlock> schedule;
  schedule.push_back({current, input.iterations_per_epoch});
  const int64_t later_epochs = input.num_epochs - input.epoch;
  if (later_epochs > 0) {
    schedule.push_back({future, later_epochs * input.iterations_per_epoch});
  }
  return CalibrateSigma(target, committed, schedule);
}

}  // namespace dpis
