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

// Dual-route checks: the binomial sums of the accountant against direct
// numerical integration of the Rényi divergence.

#include "oracles/oracles.h"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "dpis/accountant.h"

namespace dpis {
namespace {

using oracles::MixtureSpec;
using oracles::QuadratureResult;
using oracles::RenyiDivergenceQuadrature;

double RelativeGap(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

TEST(QuadratureTest, PureGaussianMatchesClosedForm) {
  for (double alpha : {1.5, 2.0, 7.0, 32.0}) {
    for (double sigma : {0.7, 1.0, 5.0}) {
      const double tau =
          RenyiDivergenceQuadrature(alpha, {.p = 1, .shift = 1, .sigma = sigma})
              ->tau;
      EXPECT_NEAR(tau, alpha / (2 * sigma * sigma),
                  1e-9 * alpha / (2 * sigma * sigma));
    }
  }
}

TEST(QuadratureTest, ZeroWeightIsZero) {
  for (double alpha : {1.5, 2.0, 64.0}) {
    absl::StatusOr<QuadratureResult> r =
        RenyiDivergenceQuadrature(alpha, {.p = 0, .shift = 1, .sigma = 1});
    ASSERT_TRUE(r.ok()) << r.status();
    EXPECT_NEAR(r->tau, 0, 1e-13);
  }
}

TEST(QuadratureTest, HalvingToleranceMovesTauBelowTenToMinusTen) {
  const MixtureSpec cases[] = {{.p = 0.01, .shift = 1, .sigma = 1},
                               {.p = 0.1, .shift = 1, .sigma = 0.8},
                               {.p = 0.5, .shift = 0.2, .sigma = 1},
                               {.p = 0.02, .shift = 1, .sigma = 4}};
  for (const MixtureSpec& spec : cases) {
    for (double alpha : {2.0, 9.5, 40.0}) {
      absl::StatusOr<QuadratureResult> loose =
          RenyiDivergenceQuadrature(alpha, spec, 1e-9);
      absl::StatusOr<QuadratureResult> tight =
          RenyiDivergenceQuadrature(alpha, spec, 5e-10);
      ASSERT_TRUE(loose.ok() && tight.ok());
      EXPECT_LT(std::abs(loose->tau - tight->tau), 1e-10)
          << "alpha " << alpha << " p " << spec.p << " sigma " << spec.sigma;
    }
  }
}

TEST(QuadratureTest, DpisExampleFrozenValue) {
  // α=2, b=1, C=1, K̃=2, Ñ=10, σ=1: mixture weight bC/K̃ = 0.5 and shift
  // K̃/Ñ = 0.2 in units of σC.
  const double tau =
      RenyiDivergenceQuadrature(2, {.p = 0.5, .shift = 0.2, .sigma = 1})->tau;
  EXPECT_NEAR(tau, 1.015099739957410e-2, 1e-14);
}

struct Case {
  int alpha;
  double p;
  double sigma;
};

class SampledGaussianAgreement : public ::testing::TestWithParam<Case> {};

TEST_P(SampledGaussianAgreement, BinomialSumEqualsIntegral) {
  const Case c = GetParam();
  const double closed = RdpSampledGaussian(c.alpha, c.p, c.sigma).value();
  absl::StatusOr<oracles::QuadratureResult> numeric = RenyiDivergenceQuadrature(
      c.alpha, {.p = c.p, .shift = 1, .sigma = c.sigma});
  ASSERT_TRUE(numeric.ok()) << numeric.status();
  EXPECT_LE(RelativeGap(closed, numeric->tau), 1e-6)
      << closed << " vs " << numeric->tau;
}

INSTANTIATE_TEST_SUITE_P(
    Grid, SampledGaussianAgreement,
    ::testing::Values(Case{2, 0.01, 1.0}, Case{2, 0.5, 0.5}, Case{3, 0.1, 0.8},
                      Case{8, 0.004, 1.1}, Case{16, 0.02, 1.5},
                      Case{32, 0.05, 2.0}, Case{64, 0.0213, 0.9},
                      Case{128, 0.001, 3.0}, Case{256, 0.01, 4.0},
                      Case{5, 0.9, 1.0}));

TEST(DpisAgreementTest, IterationCostIsAShiftedMixture) {
  // The DPIS cost equals the mixture divergence with weight bC/K̃ and shift
  // K̃/(Ñ C) in units of σ.
  for (double k_frac : {0.1, 0.4, 0.95}) {
    for (int alpha : {2, 10, 40}) {
      const IterationCostParams params{.b = 20,
                                       .C = 1.5,
                                       .K_tilde = k_frac * 500 * 1.5,
                                       .N_tilde = 500,
                                       .sigma_G = 0.9};
      const double closed = RdpDpisIteration(alpha, params).value();
      const double numeric =
          RenyiDivergenceQuadrature(
              alpha, {.p = params.b * params.C / params.K_tilde,
                      .shift = params.K_tilde / (params.N_tilde * params.C),
                      .sigma = params.sigma_G})
              ->tau;
      EXPECT_LE(RelativeGap(closed, numeric), 1e-6) << k_frac << " " << alpha;
    }
  }
}

TEST(EnumerationTest, UniformInclusionIsUnbiased) {
  const std::vector<std::vector<double>> grads = {
      {1, 0}, {0, 2}, {-1, 1}, {0.5, 0.5}};
  const auto moments = oracles::EnumerateEstimatorMoments(
      grads, {0.5, 0.5, 0.5, 0.5}, 2, 4, 0, 1);
  ASSERT_TRUE(moments.ok());
  EXPECT_EQ(moments->outcomes, 16);
  EXPECT_NEAR(moments->mean[0], 0.125, 1e-15);
  EXPECT_NEAR(moments->mean[1], 0.875, 1e-15);
}

TEST(EnumerationTest, RejectsLargeN) {
  std::vector<std::vector<double>> grads(13, std::vector<double>{1});
  EXPECT_FALSE(oracles::EnumerateEstimatorMoments(
                   grads, std::vector<double>(13, 0.5), 1, 13, 0, 1)
                   .ok());
}

}  // namespace
}  // namespace dpis
