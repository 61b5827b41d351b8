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

#ifndef FILAUDIT_ORACLE_HPP
#define FILAUDIT_ORACLE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "fil/dataset.hpp"
#include "fil/fil_engine.hpp"
#include "fil/glm.hpp"
#include "fil/mechanism.hpp"
#include "fil/random.hpp"

// Brute-force and Monte-Carlo checks that are independent of the analytic
// machinery they verify: finite-difference retraining for minimizer
// Jacobians, score-outer-product estimation for Fisher matrices, an unbiased
// estimation experiment for the variance bound, and a matrix inequality used
// by the threat-model argument.

namespace fil {

using Trainer = std::function<Eigen::VectorXd(const Dataset&)>;

// Deterministic trainer closure over a fixed configuration. Oracle runs
// default to a 1e-12 logistic tolerance so that solver error stays below the
// finite-difference truncation error.
inline Trainer make_trainer(const TrainConfig& config,
                            double logistic_tol = 1e-12) {
  TrainConfig cfg = config;
  if (cfg.loss == LossKind::kLogistic && cfg.grad_tol < 0.0) {
    cfg.grad_tol = logistic_tol;
  }
  return [cfg](const Dataset& ds) { return fit(ds, cfg).w; };
}

// Central-difference Jacobian of the trainer output with respect to the d+1
// coordinates of example i: column c is (f(+step) - f(-step)) / (2 step).
// Full retraining at every perturbed point; no shared state with the
// implicit-differentiation path.
inline Eigen::MatrixXd fd_jacobian(const Trainer& trainer, const Dataset& ds,
                                   std::size_t i, double step = 1e-4) {
  if (!(step > 0.0)) throw std::invalid_argument("fd_jacobian: step must be > 0");
  if (i >= ds.size()) throw std::invalid_argument("fd_jacobian: bad index");
  const std::size_t d = ds.dim();

  Dataset work = ds;
  Eigen::MatrixXd J;
  for (std::size_t c = 0; c <= d; ++c) {
    const std::size_t flat = flat_index(i, c, d);
    const double original = flat_value(work, flat);

    set_flat_value(work, flat, original + step);
    const Eigen::VectorXd plus = trainer(work);
    set_flat_value(work, flat, original - step);
    const Eigen::VectorXd minus = trainer(work);
    set_flat_value(work, flat, original);

    if (J.size() == 0) J.resize(plus.size(), static_cast<Eigen::Index>(d) + 1);
    J.col(static_cast<Eigen::Index>(c)) = (plus - minus) / (2.0 * step);
  }
  return J;
}

// ---------------------------------------------------------------------------
// Monte-Carlo Fisher matrix
// ---------------------------------------------------------------------------

struct McFimResult {
  Eigen::MatrixXd fim;          // empirical E[score score^T]
  Eigen::VectorXd mean_score;   // should be ~0 (regularity condition)
  Eigen::VectorXd score_stddev; // per-coordinate, for standard-error checks
  std::size_t samples = 0;
  double sigma = 0.0;
};

// Estimates the Fisher matrix of the Gaussian release by averaging outer
// products of the data-space score J^T (w' - w*) / sigma^2 over fresh noise
// draws. Converges to sigma^-2 J^T J.
inline McFimResult mc_fim(const Eigen::MatrixXd& J, double sigma,
                          std::size_t samples, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw std::invalid_argument("mc_fim: sigma must be > 0");
  if (samples < 1000) {
    throw std::invalid_argument("mc_fim: needs at least 1000 samples");
  }
  const Eigen::Index d = J.rows();
  const Eigen::Index m = J.cols();

  Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd sum_score = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(m);

  Rng rng(seed);
  for (std::size_t k = 0; k < samples; ++k) {
    const Eigen::VectorXd noise = sigma * rng.gaussian_vector(d);
    const Eigen::VectorXd s = J.transpose() * noise / (sigma * sigma);
    sum_outer.noalias() += s * s.transpose();
    sum_score += s;
    sum_sq += s.cwiseAbs2();
  }

  const double inv = 1.0 / static_cast<double>(samples);
  McFimResult out;
  out.fim = sum_outer * inv;
  out.mean_score = sum_score * inv;
  out.score_stddev =
      ((sum_sq * inv) - out.mean_score.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
  out.samples = samples;
  out.sigma = sigma;
  return out;
}

// ---------------------------------------------------------------------------
// Unbiased-estimation experiment against the variance bound
// ---------------------------------------------------------------------------

struct BlueVarianceResult {
  double empirical_variance = 0.0;
  double variance_bound = 0.0;  // 1 / eta^2 for the target coordinate
  double eta = 0.0;
  double bias = 0.0;
  double bias_standard_error = 0.0;
  bool skipped = false;  // coordinate has no influence on the minimizer
};

// Estimates y_i from noisy releases with the remainder of the data known.
// For squared loss the minimizer is exactly linear in y_i, so the best linear
// unbiased estimate is available in closed form and its variance should meet
// the bound 1/eta^2 with equality.
inline BlueVarianceResult blue_variance_experiment(const Dataset& ds,
                                                   const TrainConfig& victim,
                                                   std::size_t i, double sigma,
                                                   std::size_t trials,
                                                   std::uint64_t seed) {
  if (victim.loss != LossKind::kSquared) {
    throw std::invalid_argument(
        "blue_variance_experiment requires a squared-loss model");
  }
  if (!(sigma > 0.0) || trials < 2 || i >= ds.size()) {
    throw std::invalid_argument("blue_variance_experiment: bad arguments");
  }

  const std::size_t n = ds.size();
  const Eigen::Index d = ds.X.cols();
  const Eigen::VectorXd omega = detail::resolve_weights(victim.weights, n);

  const Eigen::MatrixXd A =
      ds.X.transpose() * omega.asDiagonal() * ds.X +
      static_cast<double>(n) * victim.lambda * Eigen::MatrixXd::Identity(d, d);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);

  const Eigen::VectorXd x_i = ds.X.row(static_cast<Eigen::Index>(i));
  // Sensitivity of the minimizer to y_i.
  const Eigen::VectorXd c =
      omega[static_cast<Eigen::Index>(i)] * ldlt.solve(x_i);

  BlueVarianceResult out;
  out.eta = c.norm() / sigma;
  if (c.norm() <= 1e-14 * std::max(1.0, x_i.norm())) {
    out.skipped = true;
    out.variance_bound = std::numeric_limits<double>::infinity();
    return out;
  }
  out.variance_bound = 1.0 / (out.eta * out.eta);

  // Minimizer with y_i zeroed; the true minimizer is w_base + c * y_i.
  Eigen::VectorXd b = ds.X.transpose() * (omega.asDiagonal() * ds.y);
  b -= omega[static_cast<Eigen::Index>(i)] * x_i *
       ds.y[static_cast<Eigen::Index>(i)];
  const Eigen::VectorXd w_base = ldlt.solve(b);
  const Eigen::VectorXd w_star =
      w_base + c * ds.y[static_cast<Eigen::Index>(i)];
  const double c_sq = c.squaredNorm();

  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Eigen::VectorXd w_released = w_star + sigma * rng.gaussian_vector(d);
    const double estimate = c.dot(w_released - w_base) / c_sq;
    sum += estimate;
    sum_sq += estimate * estimate;
  }
  const double mean = sum / static_cast<double>(trials);
  out.empirical_variance = (sum_sq - static_cast<double>(trials) * mean * mean) /
                           static_cast<double>(trials - 1);
  out.bias = mean - ds.y[static_cast<Eigen::Index>(i)];
  out.bias_standard_error =
      std::sqrt(out.empirical_variance / static_cast<double>(trials));
  return out;
}

// ---------------------------------------------------------------------------
// Block-inversion inequality on positive-definite matrices
// ---------------------------------------------------------------------------

// Minimum eigenvalue of [M^{-1}]_SS - (M_SS)^{-1}; nonnegative for symmetric
// positive-definite M by the block-inversion identity.
inline double pd_block_inversion_gap(const Eigen::MatrixXd& M,
                                     const std::vector<std::size_t>& block) {
  const Eigen::Index m = M.rows();
  Eigen::MatrixXd inv = M.llt().solve(
      Eigen::MatrixXd::Identity(m, m));
  const Eigen::Index k = static_cast<Eigen::Index>(block.size());
  Eigen::MatrixXd inv_sub(k, k), sub(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) {
      inv_sub(r, c) = inv(static_cast<Eigen::Index>(block[r]),
                          static_cast<Eigen::Index>(block[c]));
      sub(r, c) = M(static_cast<Eigen::Index>(block[r]),
                    static_cast<Eigen::Index>(block[c]));
    }
  }
  const Eigen::MatrixXd diff =
      inv_sub - sub.llt().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (diff + diff.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Worst minimum eigenvalue of the difference over random correlated
// positive-definite matrices. Contract: >= -1e-8 across the draws.
inline double pd_block_inversion_check(std::size_t dim,
                                       const std::vector<std::size_t>& block,
                                       std::uint64_t seed, int draws = 100) {
  for (std::size_t b : block) {
    if (b >= dim) throw std::invalid_argument("block index out of range");
  }
  Rng rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < draws; ++k) {
    Eigen::MatrixXd B(static_cast<Eigen::Index>(dim),
                      static_cast<Eigen::Index>(dim));
    for (Eigen::Index r = 0; r < B.rows(); ++r) {
      for (Eigen::Index c = 0; c < B.cols(); ++c) B(r, c) = rng.gaussian();
    }
    const Eigen::MatrixXd M =
        B * B.transpose() +
        0.5 * Eigen::MatrixXd::Identity(B.rows(), B.rows());
    worst = std::min(worst, pd_block_inversion_gap(M, block));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Diagnostic suite (analytic vs. oracle on a given dataset)
// ---------------------------------------------------------------------------

struct DiagnosticRow {
  std::string check;
  double analytic = 0.0;
  double oracle_value = 0.0;
  double relative_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

namespace detail {

inline double relative_frobenius_error(const Eigen::MatrixXd& value,
                                       const Eigen::MatrixXd& reference) {
  const double denom = reference.norm();
  if (denom == 0.0) return value.norm() == 0.0 ? 0.0 : 1.0;
  return (value - reference).norm() / denom;
}

inline DiagnosticRow make_row(const std::string& check, double analytic,
                              double oracle_value, double relative_error,
                              double tolerance) {
  return DiagnosticRow{check,    analytic,  oracle_value,
                       relative_error, tolerance, relative_error <= tolerance};
}

}  // namespace detail

// Runs every oracle against the analytic machinery on the given dataset and
// model configuration. Used by the CLI validate command; each row reports
// analytic value, oracle value, relative error and pass/fail.
inline std::vector<DiagnosticRow> validate_model(const Dataset& ds,
                                                 const TrainConfig& config,
                                                 double sigma,
                                                 std::uint64_t seed) {
  std::vector<DiagnosticRow> rows;
  const ModelParams params = fit(ds, config);
  MinimizerJacobian jac(ds, params);
  const double fd_tol = config.loss == LossKind::kSquared ? 1e-5 : 1e-4;

  // Jacobian vs. finite-difference retraining on a few examples.
  Rng picker(Rng::split(seed, 1));
  const std::size_t checks = std::min<std::size_t>(3, ds.size());
  const Trainer trainer = make_trainer(config);
  for (std::size_t k = 0; k < checks; ++k) {
    const std::size_t i = picker.uniform_index(ds.size());
    const Eigen::MatrixXd analytic = jac.example(i);
    const Eigen::MatrixXd fd = fd_jacobian(trainer, ds, i);
    const double err = detail::relative_frobenius_error(analytic, fd);
    rows.push_back(detail::make_row(
        "jacobian_fd_example_" + std::to_string(i), analytic.norm(), fd.norm(),
        err, fd_tol));
  }

  // Monte-Carlo Fisher matrix and the zero-mean score condition on the first
  // checked example's block.
  {
    const std::size_t i = picker.uniform_index(ds.size());
    const Eigen::MatrixXd J = jac.example(i);
    const Eigen::MatrixXd analytic_fim = (J.transpose() * J) / (sigma * sigma);
    const McFimResult mc = mc_fim(J, sigma, 100000, Rng::split(seed, 2));
    rows.push_back(detail::make_row(
        "mc_fim_example_" + std::to_string(i), analytic_fim.norm(),
        mc.fim.norm(),
        detail::relative_frobenius_error(mc.fim, analytic_fim), 0.03));

    double worst_score_se = 0.0;
    for (Eigen::Index c = 0; c < mc.mean_score.size(); ++c) {
      const double se = mc.score_stddev[c] /
                        std::sqrt(static_cast<double>(mc.samples));
      if (se > 0.0) {
        worst_score_se =
            std::max(worst_score_se, std::abs(mc.mean_score[c]) / se);
      }
    }
    rows.push_back(detail::make_row("mean_score_regularity", 0.0,
                                    worst_score_se, worst_score_se / 3.0, 1.0));
  }

  // Variance bound achievability (squared loss only).
  if (config.loss == LossKind::kSquared) {
    const std::size_t i = picker.uniform_index(ds.size());
    const BlueVarianceResult blue =
        blue_variance_experiment(ds, config, i, sigma, 10000,
                                 Rng::split(seed, 3));
    if (!blue.skipped) {
      const double err = std::abs(blue.empirical_variance -
                                  blue.variance_bound) /
                         blue.variance_bound;
      rows.push_back(detail::make_row("blue_variance_example_" +
                                          std::to_string(i),
                                      blue.variance_bound,
                                      blue.empirical_variance, err, 0.05));
    }
  }

  // Block-inversion inequality on synthetic positive-definite matrices.
  {
    const double worst =
        pd_block_inversion_check(8, {0, 1, 2}, Rng::split(seed, 4));
    rows.push_back(detail::make_row("pd_block_inversion", 0.0, worst,
                                    std::max(0.0, -worst), 1e-8));
  }
  return rows;
}

}  // namespace fil

#endif  // FILAUDIT_ORACLE_HPP
