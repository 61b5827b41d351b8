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

#ifndef FILAUDIT_GLM_HPP
#define FILAUDIT_GLM_HPP

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <json.hpp>

#include "fil/dataset.hpp"

namespace fil {

// Squared pairs with real targets (classification experiments use -1/+1);
// Logistic pairs with targets in {0, 1}.
enum class LossKind { kSquared, kLogistic };

inline std::string to_string(LossKind kind) {
  return kind == LossKind::kSquared ? "squared" : "logistic";
}

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "squared" || s == "linear") return LossKind::kSquared;
  if (s == "logistic") return LossKind::kLogistic;
  throw std::invalid_argument("unknown loss kind '" + s + "'");
}

struct ConvergenceReport {
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Fitted model: minimizer of
//   sum_i w_i * loss(w^T x_i, y_i) + (n * lambda / 2) ||w||^2.
// lambda is per-example (the penalty carries the factor n); published lambda
// values such as 1e-2 use this convention.
struct ModelParams {
  LossKind loss = LossKind::kSquared;
  Eigen::VectorXd w;
  double lambda = 0.0;
  Eigen::VectorXd weights;  // per-example, strictly positive
  ConvergenceReport convergence;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"loss", to_string(loss)},
        {"w", std::vector<double>(w.begin(), w.end())},
        {"lambda", lambda},
        {"weights", std::vector<double>(weights.begin(), weights.end())},
        {"convergence",
         {{"grad_norm", convergence.grad_norm},
          {"iterations", convergence.iterations},
          {"converged", convergence.converged}}}};
  }

  static ModelParams from_json(const nlohmann::json& j) {
    ModelParams p;
    p.loss = loss_kind_from_string(j.at("loss").get<std::string>());
    const auto wv = j.at("w").get<std::vector<double>>();
    p.w = Eigen::Map<const Eigen::VectorXd>(wv.data(),
                                            static_cast<Eigen::Index>(wv.size()));
    p.lambda = j.at("lambda").get<double>();
    const auto om = j.at("weights").get<std::vector<double>>();
    p.weights = Eigen::Map<const Eigen::VectorXd>(
        om.data(), static_cast<Eigen::Index>(om.size()));
    const auto& c = j.at("convergence");
    p.convergence.grad_norm = c.at("grad_norm").get<double>();
    p.convergence.iterations = c.at("iterations").get<int>();
    p.convergence.converged = c.at("converged").get<bool>();
    return p;
  }
};

struct TrainConfig {
  LossKind loss = LossKind::kSquared;
  double lambda = 0.0;
  // Negative means "use the default", 1e-10 * n, for the logistic solver.
  double grad_tol = -1.0;
  Eigen::VectorXd weights;  // empty means all ones
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& message, double grad_norm, int iterations)
      : std::runtime_error(message),
        grad_norm(grad_norm),
        iterations(iterations) {}
  double grad_norm;
  int iterations;
};

// Numerically stable logistic sigmoid.
inline double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

// log(1 + exp(a)) without overflow.
inline double log1pexp(double a) {
  return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a)));
}

// ---------------------------------------------------------------------------
// Per-example loss, gradient and Hessian in w.
// ---------------------------------------------------------------------------

inline double loss_value(LossKind kind, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& x, double y) {
  const double a = w.dot(x);
  if (kind == LossKind::kSquared) return 0.5 * (a - y) * (a - y);
  return -y * a + log1pexp(a);
}

inline Eigen::VectorXd loss_gradient_w(LossKind kind, const Eigen::VectorXd& w,
                                       const Eigen::VectorXd& x, double y) {
  const double a = w.dot(x);
  const double err = kind == LossKind::kSquared ? a - y : sigmoid(a) - y;
  return err * x;
}

inline Eigen::MatrixXd loss_hessian_w(LossKind kind, const Eigen::VectorXd& w,
                                      const Eigen::VectorXd& x, double /*y*/) {
  if (kind == LossKind::kSquared) return x * x.transpose();
  const double s = sigmoid(w.dot(x));
  return s * (1.0 - s) * (x * x.transpose());
}

// ---------------------------------------------------------------------------
// Full-objective evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::VectorXd resolve_weights(const Eigen::VectorXd& weights,
                                       std::size_t n) {
  if (weights.size() == 0) {
    return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  }
  if (static_cast<std::size_t>(weights.size()) != n) {
    throw std::invalid_argument("weight vector length does not match n");
  }
  if ((weights.array() <= 0.0).any()) {
    throw std::invalid_argument("example weights must be strictly positive");
  }
  return weights;
}

}  // namespace detail

// True when every target is exactly 0 or 1. The logistic solver itself
// accepts real targets (finite-difference probes retrain with perturbed
// ones); data entry points use this to validate user datasets.
inline bool has_binary_targets(const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) return false;
  }
  return true;
}

inline double objective_value(const Dataset& ds, LossKind kind,
                              const Eigen::VectorXd& w, double lambda,
                              const Eigen::VectorXd& weights) {
  const Eigen::VectorXd a = ds.X * w;
  const double n = static_cast<double>(ds.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double li = kind == LossKind::kSquared
                          ? 0.5 * (a[i] - ds.y[i]) * (a[i] - ds.y[i])
                          : -ds.y[i] * a[i] + log1pexp(a[i]);
    total += weights[i] * li;
  }
  return total + 0.5 * n * lambda * w.squaredNorm();
}

inline Eigen::VectorXd objective_gradient(const Dataset& ds, LossKind kind,
                                          const Eigen::VectorXd& w,
                                          double lambda,
                                          const Eigen::VectorXd& weights) {
  const Eigen::VectorXd a = ds.X * w;
  Eigen::VectorXd err(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    err[i] = kind == LossKind::kSquared ? a[i] - ds.y[i]
                                        : sigmoid(a[i]) - ds.y[i];
  }
  const double n = static_cast<double>(ds.size());
  return ds.X.transpose() * (weights.asDiagonal() * err) + n * lambda * w;
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

// Exact weighted ridge solve: w = (X^T W X + n*lambda*I)^{-1} X^T W y via a
// symmetric factorization. Requires lambda > 0 or a nonsingular weighted Gram
// matrix.
inline ModelParams fit_linear(const Dataset& ds, double lambda,
                              const Eigen::VectorXd& weights = {}) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  const std::size_t n = ds.size();
  const Eigen::Index d = ds.X.cols();
  const Eigen::VectorXd omega = detail::resolve_weights(weights, n);

  const Eigen::MatrixXd A =
      ds.X.transpose() * omega.asDiagonal() * ds.X +
      static_cast<double>(n) * lambda * Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd b = ds.X.transpose() * (omega.asDiagonal() * ds.y);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  const Eigen::VectorXd diag = ldlt.vectorD();
  const double d_max = diag.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || d_max == 0.0 ||
      diag.cwiseAbs().minCoeff() <=
          static_cast<double>(d) * std::numeric_limits<double>::epsilon() *
              d_max) {
    throw std::runtime_error(
        "weighted Gram matrix is singular at lambda=" + std::to_string(lambda) +
        "; use lambda > 0");
  }
  Eigen::VectorXd w = ldlt.solve(b);
  // One step of iterative refinement tightens the certificate on
  // ill-conditioned systems.
  w += ldlt.solve(b - A * w);

  const double residual = (A * w - b).norm();
  if (!w.allFinite() || residual > 1e-8 * (1.0 + b.norm())) {
    throw std::runtime_error(
        "linear system is singular or ill-conditioned; consider lambda > 0");
  }

  ModelParams params;
  params.loss = LossKind::kSquared;
  params.w = std::move(w);
  params.lambda = lambda;
  params.weights = omega;
  params.convergence.grad_norm =
      objective_gradient(ds, LossKind::kSquared, params.w, lambda, omega).norm();
  params.convergence.iterations = 1;
  params.convergence.converged =
      params.convergence.grad_norm <= 1e-8 * (1.0 + ds.y.norm());
  if (!params.convergence.converged) {
    throw ConvergenceError("linear fit failed its gradient certificate",
                           params.convergence.grad_norm, 1);
  }
  return params;
}

// Damped Newton solve of the weighted logistic objective. lambda > 0 keeps
// the problem strongly convex with a unique minimizer. Deterministic given
// identical inputs. Targets are nominally {0, 1}; real-valued targets are
// accepted so derivative probes can retrain at perturbed points.
inline ModelParams fit_logistic(const Dataset& ds, double lambda,
                                const Eigen::VectorXd& weights = {},
                                double grad_tol = -1.0,
                                const Eigen::VectorXd& initial = {}) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("logistic regression requires lambda > 0");
  }
  const std::size_t n = ds.size();
  const Eigen::Index d = ds.X.cols();
  const Eigen::VectorXd omega = detail::resolve_weights(weights, n);
  const double tol =
      grad_tol > 0.0 ? grad_tol : 1e-10 * static_cast<double>(n);

  Eigen::VectorXd w =
      initial.size() == d ? initial : Eigen::VectorXd::Zero(d);
  const int max_iterations = 200;
  double grad_norm = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter <= max_iterations; ++iter) {
    const Eigen::VectorXd g = objective_gradient(ds, LossKind::kLogistic, w,
                                                 lambda, omega);
    grad_norm = g.norm();
    if (grad_norm <= tol) {
      ModelParams params;
      params.loss = LossKind::kLogistic;
      params.w = w;
      params.lambda = lambda;
      params.weights = omega;
      params.convergence = ConvergenceReport{grad_norm, iter, true};
      return params;
    }
    if (iter == max_iterations) break;

    const Eigen::VectorXd a = ds.X * w;
    Eigen::VectorXd r(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double s = sigmoid(a[i]);
      r[i] = omega[i] * s * (1.0 - s);
    }
    const Eigen::MatrixXd H =
        ds.X.transpose() * r.asDiagonal() * ds.X +
        static_cast<double>(n) * lambda * Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd step = Eigen::LLT<Eigen::MatrixXd>(H).solve(-g);

    // Backtracking line search (Armijo). The acceptance test carries a slack
    // of a few ulps of the objective: near the minimizer the true decrease
    // falls below floating-point resolution while the Newton step still
    // contracts the gradient, and the search must not block it.
    const double f0 = objective_value(ds, LossKind::kLogistic, w, lambda, omega);
    const double slope = g.dot(step);
    const double slack = 1e-14 * (1.0 + std::abs(f0));
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      if (objective_value(ds, LossKind::kLogistic, w + t * step, lambda,
                          omega) <= f0 + 1e-4 * t * slope + slack) {
        break;
      }
      t *= 0.5;
    }
    w += t * step;
  }
  {
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "logistic solver did not reach tolerance %.3e (final "
                  "gradient norm %.3e)",
                  tol, grad_norm);
    throw ConvergenceError(detail, grad_norm, max_iterations);
  }
}

inline ModelParams fit(const Dataset& ds, const TrainConfig& config) {
  if (config.loss == LossKind::kSquared) {
    return fit_linear(ds, config.lambda, config.weights);
  }
  return fit_logistic(ds, config.lambda, config.weights, config.grad_tol);
}

// ---------------------------------------------------------------------------
// Prediction and evaluation
// ---------------------------------------------------------------------------

inline double predict_score(const ModelParams& params,
                            const Eigen::VectorXd& x) {
  return params.w.dot(x);
}

// Probability of the positive class for logistic models.
inline double predict_probability(const ModelParams& params,
                                  const Eigen::VectorXd& x) {
  return sigmoid(predict_score(params, x));
}

// Classification accuracy. Squared-loss models threshold the score at 0
// against sign(y) (the -1/+1 convention); logistic models threshold the
// probability at 0.5 against y in {0, 1}.
inline double accuracy(const ModelParams& params, const Dataset& ds) {
  if (ds.size() == 0) return 0.0;
  const Eigen::VectorXd scores = ds.X * params.w;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (params.loss == LossKind::kSquared) {
      correct += (scores[i] >= 0.0) == (ds.y[i] >= 0.0);
    } else {
      correct += (sigmoid(scores[i]) >= 0.5) == (ds.y[i] >= 0.5);
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

inline double mean_squared_error(const ModelParams& params, const Dataset& ds) {
  if (ds.size() == 0) return 0.0;
  return (ds.X * params.w - ds.y).squaredNorm() /
         static_cast<double>(ds.size());
}

// ---------------------------------------------------------------------------
// Model selection helper
// ---------------------------------------------------------------------------

// Rounds to two significant digits (used to compare training accuracies).
inline double round_two_significant(double x) {
  if (x == 0.0) return 0.0;
  const double magnitude = std::pow(10.0, std::floor(std::log10(std::abs(x))) - 1);
  return std::round(x / magnitude) * magnitude;
}

// Picks the largest logistic lambda whose training accuracy matches the
// squared-loss model's training accuracy up to two significant digits.
// Grid: 10^0 down to 10^-8 in half-decade steps. Targets are remapped from
// the -1/+1 convention to {0, 1} for the logistic fits.
inline double select_logistic_lambda(const Dataset& ds, double linear_lambda,
                                     const Eigen::VectorXd& weights = {}) {
  const ModelParams linear = fit_linear(ds, linear_lambda, weights);
  const double reference = round_two_significant(accuracy(linear, ds));

  Dataset logistic_ds = ds;
  for (Eigen::Index i = 0; i < logistic_ds.y.size(); ++i) {
    logistic_ds.y[i] = logistic_ds.y[i] >= 0.0 ? 1.0 : 0.0;
  }

  for (int step = 0; step <= 16; ++step) {
    const double lambda = std::pow(10.0, -0.5 * step);
    try {
      const ModelParams m = fit_logistic(logistic_ds, lambda, weights);
      if (round_two_significant(accuracy(m, logistic_ds)) == reference) {
        return lambda;
      }
    } catch (const ConvergenceError&) {
      continue;
    }
  }
  throw std::runtime_error(
      "no lambda in the search grid matches the linear training accuracy");
}

}  // namespace fil

#endif  // FILAUDIT_GLM_HPP
