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

#include "fil/oracle.hpp"

#include "fil/synthbench.hpp"
#include "gtest/gtest.h"

namespace fil {
namespace {

TrainConfig LinearConfig(double lambda) {
  TrainConfig config;
  config.loss = LossKind::kSquared;
  config.lambda = lambda;
  return config;
}

TrainConfig LogisticConfig(double lambda) {
  TrainConfig config;
  config.loss = LossKind::kLogistic;
  config.lambda = lambda;
  return config;
}

TEST(FdJacobianTest, MicroCaseMatchesHandValue) {
  Dataset ds;
  ds.X.resize(1, 1);
  ds.X(0, 0) = 1.0;
  ds.y.resize(1);
  ds.y[0] = 1.0;
  const Eigen::MatrixXd J = fd_jacobian(make_trainer(LinearConfig(1.0)), ds, 0);
  EXPECT_NEAR(J(0, 0), 0.0, 1e-6);
  EXPECT_NEAR(J(0, 1), 0.5, 1e-6);
}

TEST(FdJacobianTest, TargetColumnIsStepIndependentForLinearModels) {
  // The minimizer is exactly linear in y, so central differences in the
  // target coordinate agree across step sizes up to roundoff.
  const Dataset ds = gen_regression(20, 3, 0.1, 0.5, 71);
  const Trainer trainer = make_trainer(LinearConfig(0.05));
  const Eigen::MatrixXd coarse = fd_jacobian(trainer, ds, 3, 1e-2);
  const Eigen::MatrixXd fine = fd_jacobian(trainer, ds, 3, 1e-5);
  const Eigen::Index d = coarse.rows();
  EXPECT_LE((coarse.col(d) - fine.col(d)).norm(),
            1e-7 * (1.0 + fine.col(d).norm()));
}

TEST(FdJacobianTest, LargeStepOnLogisticProblemIsDetectablyWrong) {
  // Negative control: truncation error grows with the step on a curved
  // problem, so a unit step must disagree with a small one.
  const Dataset ds = gen_classification(40, 3, 0.3, 72);
  const Trainer trainer = make_trainer(LogisticConfig(0.05));
  const Eigen::MatrixXd good = fd_jacobian(trainer, ds, 5, 1e-4);
  const Eigen::MatrixXd bad = fd_jacobian(trainer, ds, 5, 1.0);
  EXPECT_GE((bad - good).norm(), 1e-3 * good.norm());
}

TEST(FdJacobianTest, CentralDifferencesAreSecondOrder) {
  // Halving the step should cut the error roughly fourfold on a logistic
  // problem. Allow a generous band around the asymptotic factor 4.
  const Dataset ds = gen_classification(40, 3, 0.3, 73);
  const Trainer trainer = make_trainer(LogisticConfig(0.05), 1e-13);
  const ModelParams params = fit_logistic(ds, 0.05, {}, 1e-13);
  const Eigen::MatrixXd reference = example_jacobian(ds, params, 7);

  const double err_coarse =
      (fd_jacobian(trainer, ds, 7, 2e-2) - reference).norm();
  const double err_fine =
      (fd_jacobian(trainer, ds, 7, 1e-2) - reference).norm();
  ASSERT_GT(err_fine, 0.0);
  const double ratio = err_coarse / err_fine;
  EXPECT_GE(ratio, 2.0);
  EXPECT_LE(ratio, 8.0);
}

TEST(FdJacobianTest, RejectsBadArguments) {
  const Dataset ds = gen_regression(10, 2, 0.1, 0.5, 74);
  const Trainer trainer = make_trainer(LinearConfig(0.1));
  EXPECT_THROW(fd_jacobian(trainer, ds, 0, 0.0), std::invalid_argument);
  EXPECT_THROW(fd_jacobian(trainer, ds, 99), std::invalid_argument);
}

TEST(McFimTest, MatchesAnalyticFimWithinThreePercent) {
  Rng rng(75);
  Eigen::MatrixXd J(3, 6);
  for (Eigen::Index i = 0; i < J.size(); ++i) J(i / 6, i % 6) = rng.gaussian();
  const double sigma = 0.8;
  const Eigen::MatrixXd analytic = (J.transpose() * J) / (sigma * sigma);
  const McFimResult mc = mc_fim(J, sigma, 100000, 76);
  EXPECT_LE((mc.fim - analytic).norm() / analytic.norm(), 0.03);
}

TEST(McFimTest, MeanScoreIsZeroWithinThreeStandardErrors) {
  Rng rng(77);
  Eigen::MatrixXd J(2, 5);
  for (Eigen::Index i = 0; i < J.size(); ++i) J(i / 5, i % 5) = rng.gaussian();
  const McFimResult mc = mc_fim(J, 1.3, 100000, 78);
  for (Eigen::Index c = 0; c < mc.mean_score.size(); ++c) {
    const double se =
        mc.score_stddev[c] / std::sqrt(static_cast<double>(mc.samples));
    EXPECT_LE(std::abs(mc.mean_score[c]), 3.0 * se);
  }
}

TEST(McFimTest, ZeroJacobianGivesExactZero) {
  const McFimResult mc = mc_fim(Eigen::MatrixXd::Zero(2, 4), 1.0, 2000, 79);
  EXPECT_EQ(mc.fim.norm(), 0.0);
  EXPECT_EQ(mc.mean_score.norm(), 0.0);
}

TEST(McFimTest, RequiresEnoughSamples) {
  EXPECT_THROW(mc_fim(Eigen::MatrixXd::Identity(2, 2), 1.0, 10, 1),
               std::invalid_argument);
}

TEST(McFimTest, DeterministicGivenSeed) {
  Rng rng(93);
  Eigen::MatrixXd J(2, 4);
  for (Eigen::Index i = 0; i < J.size(); ++i) J(i / 4, i % 4) = rng.gaussian();
  const McFimResult a = mc_fim(J, 0.9, 2000, 94);
  const McFimResult b = mc_fim(J, 0.9, 2000, 94);
  EXPECT_EQ(a.fim, b.fim);
  EXPECT_EQ(a.mean_score, b.mean_score);
}

TEST(BlueVarianceTest, EmpiricalVarianceMeetsTheBound) {
  const Dataset ds = gen_regression(50, 3, 0.1, 0.5, 80);
  const BlueVarianceResult out =
      blue_variance_experiment(ds, LinearConfig(0.05), 11, 0.1, 10000, 81);
  ASSERT_FALSE(out.skipped);
  EXPECT_LE(std::abs(out.empirical_variance - out.variance_bound),
            0.05 * out.variance_bound);
}

TEST(BlueVarianceTest, DoublingSigmaQuadruplesVariance) {
  const Dataset ds = gen_regression(50, 3, 0.1, 0.5, 82);
  const BlueVarianceResult lo =
      blue_variance_experiment(ds, LinearConfig(0.05), 7, 0.1, 10000, 83);
  const BlueVarianceResult hi =
      blue_variance_experiment(ds, LinearConfig(0.05), 7, 0.2, 10000, 84);
  EXPECT_NEAR(hi.empirical_variance / lo.empirical_variance, 4.0, 0.4);
}

TEST(BlueVarianceTest, EstimatorIsUnbiased) {
  const Dataset ds = gen_regression(50, 3, 0.1, 0.5, 85);
  const BlueVarianceResult out =
      blue_variance_experiment(ds, LinearConfig(0.05), 23, 0.15, 10000, 86);
  EXPECT_LE(std::abs(out.bias), 3.0 * out.bias_standard_error);
}

TEST(BlueVarianceTest, RejectsLogisticModels) {
  const Dataset ds = gen_classification(20, 2, 0.4, 87);
  EXPECT_THROW(
      blue_variance_experiment(ds, LogisticConfig(0.1), 0, 0.1, 1000, 1),
      std::invalid_argument);
}

TEST(BlockInversionTest, IdentityHasZeroGap) {
  EXPECT_NEAR(pd_block_inversion_gap(Eigen::MatrixXd::Identity(5, 5), {0, 2}),
              0.0, 1e-12);
}

TEST(BlockInversionTest, DiagonalMatrixDecouples) {
  Eigen::MatrixXd M = Eigen::VectorXd::LinSpaced(6, 1.0, 6.0).asDiagonal();
  EXPECT_NEAR(pd_block_inversion_gap(M, {1, 3, 4}), 0.0, 1e-12);
}

TEST(BlockInversionTest, RandomCorrelatedMatricesSatisfyTheInequality) {
  const double worst = pd_block_inversion_check(8, {0, 1, 2}, 88, 100);
  EXPECT_GE(worst, -1e-8);
}

TEST(ValidationSuiteTest, AllChecksPassOnCleanData) {
  const Dataset ds = gen_regression(40, 3, 0.1, 0.5, 89);
  const std::vector<DiagnosticRow> rows =
      validate_model(ds, LinearConfig(0.05), 0.5, 90);
  ASSERT_FALSE(rows.empty());
  for (const DiagnosticRow& row : rows) {
    EXPECT_TRUE(row.pass) << row.check << " relative error "
                          << row.relative_error;
  }
}

TEST(ValidationSuiteTest, CoversLogisticModels) {
  const Dataset ds = gen_classification(40, 3, 0.3, 91);
  const std::vector<DiagnosticRow> rows =
      validate_model(ds, LogisticConfig(0.05), 0.5, 92);
  for (const DiagnosticRow& row : rows) {
    EXPECT_TRUE(row.pass) << row.check << " relative error "
                          << row.relative_error;
  }
}

}  // namespace
}  // namespace fil
