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

#ifndef FILAUDIT_IRFIL_HPP
#define FILAUDIT_IRFIL_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fil/dataset.hpp"
#include "fil/fil_engine.hpp"
#include "fil/glm.hpp"
#include "fil/mechanism.hpp"
#include "fil/parallel.hpp"

// Iterative reweighting that drives every training example toward the same
// per-example FIL: refit with the current weights, release with fresh noise,
// measure per-example eta analytically, then update each weight inversely
// proportional to its eta and renormalize to sum n.

namespace fil {

struct IrfilIteration {
  int iteration = 0;            // 1-based
  Eigen::VectorXd weights;      // weights used for this iteration's fit
  Eigen::VectorXd eta;          // per-example FIL at this iteration's model
  double eta_mean = 0.0;
  double eta_std = 0.0;
  double eta_cv = 0.0;          // std / mean
  Eigen::VectorXd w_star;
  // Intermediate releases are kept for diagnostics only. Publishing more
  // than the final one composes leakage across iterations.
  Eigen::VectorXd w_released;
};

struct IrfilOptions {
  int iterations = 10;
  // Stop once the coefficient of variation of eta drops below this value.
  std::optional<double> cv_stop;
  double grad_tol = -1.0;  // forwarded to the logistic solver
  // When set, the per-example eta driving the reweighting is computed over
  // this attribute's encoded span instead of the full (x_i, y_i) block, so
  // the loop equalizes attribute-specific leakage (the attack-flattening
  // experiment). Default: full example-level eta.
  std::string eta_attribute;
};

struct IrfilTrace {
  std::vector<IrfilIteration> iterations;
  Eigen::VectorXd final_weights;  // after the last update; sums to n
  ModelParams final_params;
  PerturbedModel released;        // the model to publish
  bool stopped_early = false;
};

// One multiplicative update: w_i <- n * (w_i / eta_i) / sum_j (w_j / eta_j).
// Output sums to n; equal etas leave the weights unchanged (fixed point).
inline Eigen::VectorXd weight_update(const Eigen::VectorXd& weights,
                                     const Eigen::VectorXd& eta) {
  if (weights.size() != eta.size()) {
    throw std::invalid_argument("weight_update: size mismatch");
  }
  const Eigen::Index n = weights.size();
  Eigen::VectorXd ratio(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0)) {
      throw std::invalid_argument("weight_update: weights must be positive");
    }
    if (!(eta[i] > 0.0)) {
      throw std::invalid_argument(
          "weight_update: eta[" + std::to_string(i) +
          "] is not positive; an example with zero leakage cannot be "
          "reweighted");
    }
    ratio[i] = weights[i] / eta[i];
  }
  return static_cast<double>(n) * ratio / ratio.sum();
}

// Runs the reweighting loop for T iterations (or until cv_stop triggers).
// Noise is redrawn each iteration from the split stream (seed, t); the
// per-example etas come from the weighted Jacobians, not from noise draws.
inline IrfilTrace run_irfil(const Dataset& ds, LossKind kind, double lambda,
                            double sigma, std::uint64_t seed,
                            const IrfilOptions& options = {}) {
  if (options.iterations < 1) {
    throw std::invalid_argument("run_irfil: needs at least one iteration");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("run_irfil: sigma must be > 0");

  const std::size_t n = ds.size();
  Eigen::VectorXd omega = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));

  IrfilTrace trace;
  for (int t = 1; t <= options.iterations; ++t) {
    IrfilIteration it;
    it.iteration = t;
    it.weights = omega;

    ModelParams params;
    try {
      TrainConfig cfg;
      cfg.loss = kind;
      cfg.lambda = lambda;
      cfg.grad_tol = options.grad_tol;
      cfg.weights = omega;
      params = fit(ds, cfg);
    } catch (const std::exception& e) {
      throw std::runtime_error("IRFIL iteration " + std::to_string(t) +
                               ": solver failed: " + e.what());
    }

    const std::uint64_t iteration_seed =
        Rng::split(seed, static_cast<std::uint64_t>(t));
    const PerturbedModel released = perturb(params, sigma, iteration_seed);

    MinimizerJacobian jac(ds, params);
    if (options.eta_attribute.empty()) {
      it.eta = jac.all_example_etas(sigma);
    } else {
      const AttributeGroup& group = ds.group(options.eta_attribute);
      it.eta.resize(static_cast<Eigen::Index>(n));
      parallel_for(n, [&](std::size_t i) {
        it.eta[static_cast<Eigen::Index>(i)] =
            jac.example_span_eta(i, group.offset, group.width, sigma);
      });
    }
    it.eta_mean = it.eta.mean();
    it.eta_std = std::sqrt((it.eta.array() - it.eta_mean).square().mean());
    it.eta_cv = it.eta_mean > 0.0 ? it.eta_std / it.eta_mean : 0.0;
    it.w_star = params.w;
    it.w_released = released.w_released;

    omega = weight_update(omega, it.eta);
    trace.iterations.push_back(std::move(it));
    trace.final_params = params;
    trace.released = released;

    if (options.cv_stop.has_value() &&
        trace.iterations.back().eta_cv < *options.cv_stop) {
      trace.stopped_early = t < options.iterations;
      break;
    }
  }
  trace.final_weights = omega;
  return trace;
}

}  // namespace fil

#endif  // FILAUDIT_IRFIL_HPP
