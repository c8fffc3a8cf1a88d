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

#include "dpis/engine.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/strings/str_format.h"
#include "dpis/status_macros.h"

namespace dpis {
namespace {

// Adds `d` Gaussian coordinates of standard deviation `stddev` to `g`.
void AddNoise(GradVec& g, double stddev, Rng& rng) {
  for (int64_t j = 0; j < g.size(); ++j) g[j] += rng.Gaussian(stddev);
}

// Releases made so far, as (ε, α*).
absl::StatusOr<double> Epsilon(const RdpLedger& ledger,
                               const PrivacySpec& spec) {
  ASSIGN_OR_RETURN(DpGuarantee dp, RdpToDp(ledger, spec.delta0));
  return dp.epsilon;
}

class Trainer {
 public:
  Trainer(const TrainConfig& config, const PrivacySpec& spec,
          const Dataset& train, const Dataset* eval, const Model& model)
      : config_(config),
        spec_(spec),
        train_(train),
        eval_(eval),
        model_(model),
        grid_(AlphaGrid::Default()),
        rng_(config.seed),
        optimizer_(config.eta, config.momentum) {}

  absl::StatusOr<TrainResult> Run() {
    N_ = train_.size();
    T_ = config_.iterations_per_epoch(N_);
    if (T_ < 1) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "b = %d leaves no iterations for %d records", config_.b, N_));
    }
    b_ = static_cast<double>(config_.b);

    result_.theta = model_.Init(rng_);
    ASSIGN_OR_RETURN(result_.N_tilde, NoisyCount(N_, spec_.sigma_N, b_, rng_));
    if (!(result_.N_tilde > b_)) {
      return absl::FailedPreconditionError("noisy count does not exceed b");
    }
    ASSIGN_OR_RETURN(result_.ledger, GaussianLedger(grid_, spec_.sigma_N));

    if (config_.method == Method::kDpis) {
      RETURN_IF_ERROR(RunDpis());
    } else {
      RETURN_IF_ERROR(RunDpsgd());
    }
    ASSIGN_OR_RETURN(result_.guarantee,
                     RdpToDp(result_.ledger, spec_.delta0));
    return std::move(result_);
  }

 private:
  // Gradient of record i at the current θ; counts the evaluation.
  absl::StatusOr<double> Gradient(int64_t i, GradVec* grad) {
    ++result_.gradient_evaluations;
    return model_.LossAndGrad(result_.theta, train_.examples[i], grad);
  }

  absl::Status Pay(const RdpLedger& cost) { return result_.ledger.Add(cost); }

  absl::Status FinishEpoch(EpochSummary summary, double loss_sum,
                           int64_t loss_count, int64_t x_q_sum,
                           int64_t x_p_sum) {
    summary.mean_x_q = static_cast<double>(x_q_sum) / T_;
    summary.mean_x_p = static_cast<double>(x_p_sum) / T_;
    summary.train_loss = loss_count > 0 ? loss_sum / loss_count : NAN;
    if (eval_ != nullptr) {
      ASSIGN_OR_RETURN(EvalResult ev,
                       Evaluate(model_, result_.theta, eval_->examples));
      summary.eval_loss = ev.mean_loss;
      summary.eval_accuracy = ev.accuracy;
      result_.rows.back().eval_accuracy = ev.accuracy;
    }
    result_.epochs.push_back(summary);
    return absl::OkStatus();
  }

  absl::Status RunDpis() {
    const double N_tilde = result_.N_tilde;
    const double p_K = b_ / N_tilde;
    const double C_star = config_.external_clip();
    const int releases_per_epoch = config_.adaptive_clip ? 2 : 1;
    ASSIGN_OR_RETURN(RdpLedger committed,
                     FixedReleaseCost(grid_, spec_, b_, N_tilde, config_.E,
                                      releases_per_epoch));
    ASSIGN_OR_RETURN(RdpLedger norm_sum_cost,
                     SampledGaussianLedger(grid_, p_K, spec_.sigma_K));

    std::vector<double> norms(N_);
    std::vector<double> star_norms(N_);
    GradVec grad;
    double C = config_.C1;

    for (int e = 1; e <= config_.E; ++e) {
      // Full pass at t = 1.
      for (int64_t i = 0; i < N_; ++i) {
        RETURN_IF_ERROR(Gradient(i, &grad).status());
        const double norm = grad.norm();
        norms[i] = std::min(norm, C);
        star_norms[i] = std::min(norm, C_star);
      }
      std::vector<RecordState> states = InitEpoch(norms, config_.k, config_.g_L);
      ASSIGN_OR_RETURN(double K_prime,
                       NoisyGradSum(norms, p_K, spec_.sigma_K, C, rng_));
      ASSIGN_OR_RETURN(double K_tilde, ClampK(K_prime, b_, C, N_tilde,
                                              ClampMargin(b_, C)));
      RETURN_IF_ERROR(Pay(norm_sum_cost));
      if (OversamplingSaturated(K_tilde, config_.k, b_, C)) {
        result_.warnings.push_back(absl::StrFormat(
            "epoch %d: K_tilde = %g is not above k*b*C = %g; first-stage "
            "probabilities saturate",
            e, K_tilde, config_.k * b_ * C));
      }

      const EpochPlanInput plan{.epoch = e,
                                .num_epochs = config_.E,
                                .iterations_per_epoch = T_,
                                .a_E = config_.a_E,
                                .b = b_,
                                .N_tilde = N_tilde,
                                .K_tilde = K_tilde,
                                .C = C};
      ASSIGN_OR_RETURN(double sigma, PlanEpochSigma(plan, committed, spec_));
      ASSIGN_OR_RETURN(
          RdpLedger iteration_cost,
          DpisIterationLedger(grid_, {.b = b_,
                                      .C = C,
                                      .K_tilde = K_tilde,
                                      .N_tilde = N_tilde,
                                      .sigma_G = sigma}));

      double loss_sum = 0;
      int64_t loss_count = 0, x_q_sum = 0, x_p_sum = 0;
      for (int64_t t = 1; t <= T_; ++t) {
        const std::vector<int64_t> x_q =
            FirstStage(states, b_, K_tilde, rng_);
        std::vector<GradVec> fresh(x_q.size());
        std::vector<double> fresh_norms(x_q.size());
        for (size_t j = 0; j < x_q.size(); ++j) {
          const int64_t i = x_q[j];
          ASSIGN_OR_RETURN(double loss, Gradient(i, &grad));
          loss_sum += loss;
          ++loss_count;
          const double norm = grad.norm();
          star_norms[i] = std::min(norm, C_star);
          fresh[j] = Clip(grad, std::min(states[i].g_hat, C));
          fresh_norms[j] = fresh[j].norm();
        }
        ASSIGN_OR_RETURN(SampledBatch batch,
                         SecondStage(x_q, std::move(fresh), states, b_,
                                     K_tilde, rng_));
        RETURN_IF_ERROR(UpdateNumerators(x_q, fresh_norms, config_.k,
                                         config_.g_L, states));
        DpisStep(batch, N_tilde, b_, C, sigma, optimizer_, result_.theta,
                 rng_);

        RETURN_IF_ERROR(Pay(iteration_cost));
        RETURN_IF_ERROR(committed.Add(iteration_cost));
        const auto n_q = static_cast<int64_t>(x_q.size());
        const auto n_p = static_cast<int64_t>(batch.members.size());
        x_q_sum += n_q;
        x_p_sum += n_p;
        ASSIGN_OR_RETURN(double eps, Epsilon(result_.ledger, spec_));
        MetricsRow row{.epoch = e,
                       .iteration = t,
                       .sigma_G = sigma,
                       .C = C,
                       .K_tilde = K_tilde,
                       .x_q = n_q,
                       .x_p = n_p,
                       .epsilon = eps};
        if (n_q > 0) row.train_loss = loss_sum / loss_count;
        result_.rows.push_back(row);
      }
      RETURN_IF_ERROR(FinishEpoch({.sigma_G = sigma, .C = C, .K_tilde = K_tilde},
                                  loss_sum, loss_count, x_q_sum, x_p_sum));

      if (config_.adaptive_clip) {
        const AdaptiveClip next =
            AdaptiveClipUpdate(star_norms, spec_.sigma_K, C_star, N_tilde,
                               config_.lambda, config_.g_L, rng_);
        RETURN_IF_ERROR(Pay(norm_sum_cost));
        C = next.C_next;
      }
    }
    return absl::OkStatus();
  }

  absl::Status RunDpsgd() {
    const double p = b_ / result_.N_tilde;
    const double C = config_.C1;
    const int64_t iterations = static_cast<int64_t>(config_.E) * T_;
    ASSIGN_OR_RETURN(
        double sigma,
        CalibrateNoiseMultiplier(
            spec_, result_.ledger,
            [&](double s) -> absl::StatusOr<RdpLedger> {
              ASSIGN_OR_RETURN(RdpLedger one,
                               SampledGaussianLedger(grid_, p, s));
              RdpLedger total(grid_);
              RETURN_IF_ERROR(
                  total.AddScaled(one, static_cast<double>(iterations)));
              return total;
            }));
    ASSIGN_OR_RETURN(RdpLedger step_cost, SampledGaussianLedger(grid_, p, sigma));

    GradVec grad;
    for (int e = 1; e <= config_.E; ++e) {
      double loss_sum = 0;
      int64_t loss_count = 0, x_sum = 0;
      for (int64_t t = 1; t <= T_; ++t) {
        const std::vector<int64_t> batch = UniformBatch(N_, p, rng_);
        std::vector<GradVec> clipped(batch.size());
        for (size_t j = 0; j < batch.size(); ++j) {
          ASSIGN_OR_RETURN(double loss, Gradient(batch[j], &grad));
          loss_sum += loss;
          ++loss_count;
          clipped[j] = Clip(grad, C);
        }
        DpsgdStep(clipped, b_, C, sigma, optimizer_, result_.theta, rng_);
        RETURN_IF_ERROR(Pay(step_cost));
        const auto n = static_cast<int64_t>(batch.size());
        x_sum += n;
        ASSIGN_OR_RETURN(double eps, Epsilon(result_.ledger, spec_));
        MetricsRow row{.epoch = e,
                       .iteration = t,
                       .sigma_G = sigma,
                       .C = C,
                       .x_q = n,
                       .x_p = n,
                       .epsilon = eps};
        if (n > 0) row.train_loss = loss_sum / loss_count;
        result_.rows.push_back(row);
      }
      RETURN_IF_ERROR(FinishEpoch({.sigma_G = sigma, .C = C}, loss_sum,
                                  loss_count, x_sum, x_sum));
    }
    return absl::OkStatus();
  }

  const TrainConfig& config_;
  const PrivacySpec& spec_;
  const Dataset& train_;
  const Dataset* eval_;
  const Model& model_;
  const AlphaGrid& grid_;
  Rng rng_;
  Optimizer optimizer_;
  TrainResult result_;
  int64_t N_ = 0;
  int64_t T_ = 0;
  double b_ = 0;
};

}  // namespace

const char* MethodName(Method method) {
  return method == Method::kDpis ? "dpis" : "dpsgd";
}

absl::StatusOr<Method> ParseMethod(const std::string& name) {
  if (name == "dpis") return Method::kDpis;
  if (name == "dpsgd") return Method::kDpsgd;
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown method '%s' (expected dpis or dpsgd)", name));
}

absl::Status TrainConfig::Validate() const {
  if (b < 1) return absl::InvalidArgumentError("b must be >= 1");
  if (E < 1) return absl::InvalidArgumentError("E must be >= 1");
  if (T < 0) return absl::InvalidArgumentError("T must be >= 0");
  if (!(a_E >= 0 && a_E <= 1)) {
    return absl::InvalidArgumentError("a_E must be in [0, 1]");
  }
  if (!(C1 > 0)) return absl::InvalidArgumentError("C1 must be positive");
  if (!(C_star >= 0)) return absl::InvalidArgumentError("C_star must be >= 0");
  if (!(k >= 1)) return absl::InvalidArgumentError("k must be >= 1");
  if (!(g_L > 0 && g_L < C1)) {
    return absl::InvalidArgumentError("g_L must be in (0, C1)");
  }
  if (!(lambda > 0)) return absl::InvalidArgumentError("lambda must be > 0");
  if (!(eta > 0)) return absl::InvalidArgumentError("eta must be > 0");
  if (!(momentum >= 0 && momentum < 1)) {
    return absl::InvalidArgumentError("momentum must be in [0, 1)");
  }
  return absl::OkStatus();
}

GradVec Clip(const GradVec& g, double C) {
  const double norm = g.norm();
  if (norm <= C) return g;
  return g * (C / norm);
}

void Optimizer::Step(const GradVec& noisy_grad, GradVec& theta) {
  if (momentum_ == 0) {
    theta -= eta_ * noisy_grad;
    return;
  }
  if (velocity_.size() != noisy_grad.size()) {
    velocity_ = GradVec::Zero(noisy_grad.size());
  }
  velocity_ = momentum_ * velocity_ + noisy_grad;
  theta -= eta_ * velocity_;
}

GradVec DpisNoisyGradient(const SampledBatch& batch, double N_tilde, double b,
                          double C, double sigma, int64_t d, Rng& rng) {
  GradVec g = GradVec::Zero(d);
  for (const BatchMember& m : batch.members) {
    g += m.grad / (N_tilde * m.q * m.p);
  }
  GradVec noise = GradVec::Zero(d);
  AddNoise(noise, sigma * C, rng);
  return g + noise / b;
}

GradVec DpsgdNoisyGradient(std::span<const GradVec> clipped, double b,
                           double C, double sigma, int64_t d, Rng& rng) {
  GradVec g = GradVec::Zero(d);
  for (const GradVec& x : clipped) g += x;
  AddNoise(g, sigma * C, rng);
  return g / b;
}

void DpisStep(const SampledBatch& batch, double N_tilde, double b, double C,
              double sigma, Optimizer& optimizer, GradVec& theta, Rng& rng) {
  optimizer.Step(
      DpisNoisyGradient(batch, N_tilde, b, C, sigma, theta.size(), rng),
      theta);
}

void DpsgdStep(std::span<const GradVec> clipped, double b, double C,
               double sigma, Optimizer& optimizer, GradVec& theta, Rng& rng) {
  optimizer.Step(DpsgdNoisyGradient(clipped, b, C, sigma, theta.size(), rng),
                 theta);
}

std::vector<int64_t> UniformBatch(int64_t N, double p, Rng& rng) {
  std::vector<int64_t> batch;
  for (int64_t i = 0; i < N; ++i) {
    if (rng.Bernoulli(p)) batch.push_back(i);
  }
  return batch;
}

AdaptiveClip AdaptiveClipUpdate(std::span<const double> star_norms,
                                double sigma_K, double C_star, double N_tilde,
                                double lambda, double g_L, Rng& rng) {
  double sum = 0;
  for (double n : star_norms) sum += n;
  const double released = sum + rng.Gaussian(sigma_K * C_star);
  return {released, std::max(lambda * released / N_tilde, 10 * g_L)};
}

absl::StatusOr<TrainResult> RunTraining(const TrainConfig& config,
                                        const PrivacySpec& spec,
                                        const Dataset& train,
                                        const Dataset* eval,
                                        const Model& model) {
  RETURN_IF_ERROR(config.Validate());
  RETURN_IF_ERROR(spec.Validate());
  RETURN_IF_ERROR(train.Validate());
  if (train.n_features != model.input_dim() ||
      train.n_classes > model.num_classes()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "model takes %d features and %d classes; data has %d and %d",
        model.input_dim(), model.num_classes(), train.n_features,
        train.n_classes));
  }
  if (eval != nullptr) {
    RETURN_IF_ERROR(eval->Validate());
    if (eval->n_features != train.n_features) {
      return absl::InvalidArgumentError("eval and train feature widths differ");
    }
  }
  Trainer trainer(config, spec, train, eval, model);
  return trainer.Run();
}

}  // namespace dpis
