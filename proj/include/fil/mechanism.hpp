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

#ifndef FILAUDIT_MECHANISM_HPP
#define FILAUDIT_MECHANISM_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

#include "fil/glm.hpp"
#include "fil/random.hpp"

namespace fil {

// Release produced by adding zero-mean isotropic Gaussian noise to the
// fitted parameters: w' = w* + sigma * g, g standard normal.
struct PerturbedModel {
  Eigen::VectorXd w_released;
  Eigen::VectorXd w_star;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

// Deterministic given (params, sigma, seed); distinct seeds give independent
// noise draws.
inline PerturbedModel perturb(const ModelParams& params, double sigma,
                              std::uint64_t seed) {
  if (!(sigma > 0.0)) throw std::invalid_argument("perturb: sigma must be > 0");
  Rng rng(seed);
  PerturbedModel out;
  out.w_star = params.w;
  out.w_released = params.w + sigma * rng.gaussian_vector(params.w.size());
  out.sigma = sigma;
  out.seed = seed;
  return out;
}

// Gradient of the release log-density with respect to the parameters:
// (w' - w*) / sigma^2. Its expectation over the noise is zero.
inline Eigen::VectorXd score(const Eigen::VectorXd& w_released,
                             const Eigen::VectorXd& w_star, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("score: sigma must be > 0");
  return (w_released - w_star) / (sigma * sigma);
}

// Classic analytic calibration sigma = sensitivity * sqrt(2 ln(1.25/delta)) / eps,
// valid for 0 < eps <= 1. One standard choice among several; provided as a
// convenience for picking a noise scale.
inline double calibrate_sigma(double epsilon, double delta,
                              double sensitivity) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument(
        "calibrate_sigma: the analytic rule requires 0 < epsilon <= 1");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("calibrate_sigma: requires 0 < delta < 1");
  }
  if (!(sensitivity > 0.0)) {
    throw std::invalid_argument("calibrate_sigma: requires sensitivity > 0");
  }
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

}  // namespace fil

#endif  // FILAUDIT_MECHANISM_HPP
