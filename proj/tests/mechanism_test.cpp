//
// Copyright 2026 The filaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fil/mechanism.hpp"

#include "gtest/gtest.h"

namespace fil {
namespace {

ModelParams TinyModel(int d) {
  ModelParams params;
  params.loss = LossKind::kSquared;
  params.w = Eigen::VectorXd::LinSpaced(d, 1.0, static_cast<double>(d));
  params.lambda = 0.1;
  params.weights = Eigen::VectorXd::Ones(4);
  params.convergence = ConvergenceReport{1e-12, 1, true};
  return params;
}

TEST(PerturbTest, VanishingSigmaRecoversTheMinimizer) {
  const ModelParams params = TinyModel(3);
  const PerturbedModel out = perturb(params, 1e-30, 7);
  // ||w' - w*|| = sigma * ||g||; a crude 1e10 bound on ||g|| keeps the
  // distance far below 1e-20 at sigma = 1e-30.
  EXPECT_LE((out.w_released - params.w).norm(), 1e-20);
}

TEST(PerturbTest, FixedSeedIsDeterministic) {
  const ModelParams params = TinyModel(4);
  const PerturbedModel a = perturb(params, 0.5, 99);
  const PerturbedModel b = perturb(params, 0.5, 99);
  EXPECT_EQ(a.w_released, b.w_released);
}

TEST(PerturbTest, DifferentSeedsDiffer) {
  const ModelParams params = TinyModel(4);
  const PerturbedModel a = perturb(params, 0.5, 1);
  const PerturbedModel b = perturb(params, 0.5, 2);
  EXPECT_NE(a.w_released, b.w_released);
}

TEST(PerturbTest, RejectsNonPositiveSigma) {
  const ModelParams params = TinyModel(2);
  EXPECT_THROW(perturb(params, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(perturb(params, -1.0, 1), std::invalid_argument);
}

TEST(PerturbTest, SampleCovarianceMatchesIsotropicNoise) {
  const ModelParams params = TinyModel(2);
  const int draws = 100000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (int k = 0; k < draws; ++k) {
    const Eigen::VectorXd noise =
        perturb(params, 1.0, static_cast<std::uint64_t>(k)).w_released -
        params.w;
    sum += noise * noise.transpose();
    mean += noise;
  }
  mean /= static_cast<double>(draws);
  const Eigen::MatrixXd cov =
      sum / static_cast<double>(draws) - mean * mean.transpose();
  EXPECT_LE((cov - Eigen::MatrixXd::Identity(2, 2)).norm() /
                Eigen::MatrixXd::Identity(2, 2).norm(),
            0.05);
}

TEST(ScoreTest, ZeroAtTheMean) {
  Eigen::VectorXd w(2);
  w << 1.0, -2.0;
  EXPECT_EQ(score(w, w, 0.7).norm(), 0.0);
}

TEST(ScoreTest, MatchesClosedForm) {
  Eigen::VectorXd w_star(2), w_released(2);
  w_star << 0.0, 0.0;
  w_released << 1.0, 0.0;
  const Eigen::VectorXd s = score(w_released, w_star, 1.0);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 0.0);
  // sigma = 2 divides by 4.
  EXPECT_DOUBLE_EQ(score(w_released, w_star, 2.0)[0], 0.25);
}

TEST(ScoreTest, EmpiricalMeanIsZeroWithinThreeStandardErrors) {
  // The regularity condition behind the Fisher matrix: E[score] = 0.
  const ModelParams params = TinyModel(2);
  const double sigma = 0.8;
  const int draws = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(2);
  for (int k = 0; k < draws; ++k) {
    const PerturbedModel release =
        perturb(params, sigma, static_cast<std::uint64_t>(k) + 1000);
    const Eigen::VectorXd s = score(release.w_released, params.w, sigma);
    sum += s;
    sum_sq += s.cwiseAbs2();
  }
  const Eigen::VectorXd mean = sum / static_cast<double>(draws);
  for (Eigen::Index c = 0; c < 2; ++c) {
    const double variance =
        sum_sq[c] / static_cast<double>(draws) - mean[c] * mean[c];
    const double se = std::sqrt(variance / static_cast<double>(draws));
    EXPECT_LE(std::abs(mean[c]), 3.0 * se);
  }
}

TEST(CalibrateSigmaTest, MatchesHandComputedValue) {
  // sqrt(2 ln(1.25e5)) = 4.8448...
  EXPECT_NEAR(calibrate_sigma(1.0, 1e-5, 1.0), 4.845, 5e-4);
}

TEST(CalibrateSigmaTest, LinearInSensitivityAndInverseInEpsilon) {
  const double base = calibrate_sigma(1.0, 1e-5, 1.0);
  EXPECT_DOUBLE_EQ(calibrate_sigma(1.0, 1e-5, 2.0), 2.0 * base);
  EXPECT_DOUBLE_EQ(calibrate_sigma(0.5, 1e-5, 1.0), 2.0 * base);
}

TEST(CalibrateSigmaTest, RejectsOutOfRangeParameters) {
  EXPECT_THROW(calibrate_sigma(1.5, 1e-5, 1.0), std::invalid_argument);
  EXPECT_THROW(calibrate_sigma(0.5, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(calibrate_sigma(0.5, 1e-5, 0.0), std::invalid_argument);
}

}  // namespace
}  // namespace fil
