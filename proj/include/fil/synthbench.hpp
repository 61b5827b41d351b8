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

#ifndef FILAUDIT_SYNTHBENCH_HPP
#define FILAUDIT_SYNTHBENCH_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fil/dataset.hpp"
#include "fil/random.hpp"

// Deterministic synthetic dataset generators for tests and acceptance runs.
// All outputs are unit-ball normalized and identical for identical seeds.

namespace fil {

namespace detail {

inline void require_feasible(std::size_t n, std::size_t d) {
  if (n < d + 1) {
    throw std::invalid_argument("synthbench: needs n >= d + 1");
  }
  if (d < 1) throw std::invalid_argument("synthbench: needs d >= 1");
}

inline Dataset finish_numeric_dataset(Eigen::MatrixXd X, Eigen::VectorXd y) {
  Dataset ds;
  ds.X = std::move(X);
  ds.y = std::move(y);
  for (Eigen::Index j = 0; j < ds.X.cols(); ++j) {
    const std::string name = "f" + std::to_string(j);
    ds.feature_names.push_back(name);
    AttributeGroup g;
    g.offset = static_cast<std::size_t>(j);
    g.width = 1;
    ds.groups[name] = g;
  }
  return normalize_unit_ball(ds);
}

}  // namespace detail

// Linear-response data with a per-example spread in both leverage (row norms)
// and residual noise. heteroskedasticity = 0 gives homogeneous rows; larger
// values widen the per-example leakage distribution.
inline Dataset gen_regression(std::size_t n, std::size_t d, double noise,
                              double heteroskedasticity, std::uint64_t seed) {
  detail::require_feasible(n, d);
  Rng rng(seed);

  Eigen::VectorXd beta = rng.gaussian_vector(static_cast<Eigen::Index>(d));
  beta *= 2.0 / beta.norm();

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double leverage = std::exp(0.5 * heteroskedasticity * rng.gaussian());
    const Eigen::VectorXd x =
        leverage * rng.gaussian_vector(static_cast<Eigen::Index>(d));
    const double noise_scale =
        noise * std::exp(0.5 * heteroskedasticity * rng.gaussian());
    X.row(static_cast<Eigen::Index>(i)) = x;
    y[static_cast<Eigen::Index>(i)] = x.dot(beta) + noise_scale * rng.gaussian();
  }
  return detail::finish_numeric_dataset(std::move(X), std::move(y));
}

// Two-class data from a linear rule. margin > 0 pushes points away from the
// decision boundary (margin large enough gives perfect separability).
// Targets are {0, 1} by default or -1/+1 for squared-loss experiments.
inline Dataset gen_classification(std::size_t n, std::size_t d, double margin,
                                  std::uint64_t seed,
                                  bool zero_one_targets = true) {
  detail::require_feasible(n, d);
  Rng rng(seed);

  Eigen::VectorXd direction =
      rng.gaussian_vector(static_cast<Eigen::Index>(d));
  direction.normalize();

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd x = rng.gaussian_vector(static_cast<Eigen::Index>(d));
    const double side = x.dot(direction) >= 0.0 ? 1.0 : -1.0;
    x += margin * side * direction;
    X.row(static_cast<Eigen::Index>(i)) = x;
    y[static_cast<Eigen::Index>(i)] =
        zero_one_targets ? (side > 0.0 ? 1.0 : 0.0) : side;
  }
  return detail::finish_numeric_dataset(std::move(X), std::move(y));
}

// Attack benchmark: numeric features plus one planted nominal column.
struct AttackBench {
  Dataset data;
  std::string attribute;                // group name of the planted column
  std::vector<std::string> candidates;  // category names
  std::vector<int> true_category;       // ground truth per example
};

// Plants a nominal column whose category shifts the regression target and
// enters the design matrix as one-hot indicators carrying the value
// effect_size. With effect_size = 0 every candidate encodes to the same
// all-zero span, so candidates are indistinguishable by construction; with
// effect_size > 0 the category is identifiable from a noiseless release.
// Rows carry a leverage spread so attribute-level leakage differs across
// examples.
inline AttackBench gen_attack_task(std::size_t n, std::size_t d,
                                   std::size_t candidate_count,
                                   double effect_size, std::uint64_t seed) {
  detail::require_feasible(n, d);
  if (candidate_count < 2) {
    throw std::invalid_argument("gen_attack_task: needs >= 2 candidates");
  }
  if (effect_size < 0.0) {
    throw std::invalid_argument("gen_attack_task: effect_size must be >= 0");
  }
  Rng rng(seed);

  AttackBench bench;
  bench.attribute = "attr";
  for (std::size_t k = 0; k < candidate_count; ++k) {
    bench.candidates.push_back("C" + std::to_string(k));
  }

  // Mildly skewed category prior so the baseline adversary is beatable but
  // not trivial.
  std::vector<double> prior(candidate_count);
  for (std::size_t k = 0; k < candidate_count; ++k) {
    prior[k] = static_cast<double>(2 * candidate_count - k);
  }

  Eigen::VectorXd beta = rng.gaussian_vector(static_cast<Eigen::Index>(d));
  beta *= 2.0 / beta.norm();
  Eigen::VectorXd category_coef =
      rng.gaussian_vector(static_cast<Eigen::Index>(candidate_count) - 1);
  category_coef *= 1.5 / category_coef.norm();

  const std::size_t span = candidate_count - 1;
  const std::size_t width = d + span;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(width));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  bench.true_category.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double leverage = std::exp(0.6 * rng.gaussian());
    const Eigen::VectorXd x =
        leverage * rng.gaussian_vector(static_cast<Eigen::Index>(d));
    const std::size_t category = rng.categorical(prior);
    bench.true_category[i] = static_cast<int>(category);

    X.block(static_cast<Eigen::Index>(i), 0, 1, static_cast<Eigen::Index>(d)) =
        x.transpose();
    double shift = 0.0;
    if (category < span) {
      X(static_cast<Eigen::Index>(i),
        static_cast<Eigen::Index>(d + category)) = effect_size;
      shift = effect_size * category_coef[static_cast<Eigen::Index>(category)];
    }
    y[static_cast<Eigen::Index>(i)] = x.dot(beta) + shift + 0.05 * rng.gaussian();
  }

  Dataset ds;
  ds.X = std::move(X);
  ds.y = std::move(y);
  for (std::size_t j = 0; j < d; ++j) {
    const std::string name = "f" + std::to_string(j);
    ds.feature_names.push_back(name);
    AttributeGroup g;
    g.offset = j;
    g.width = 1;
    ds.groups[name] = g;
  }
  AttributeGroup attr;
  attr.offset = d;
  attr.width = span;
  attr.indicator_value = effect_size;
  attr.categories = bench.candidates;
  ds.groups[bench.attribute] = attr;
  for (std::size_t k = 0; k < span; ++k) {
    ds.feature_names.push_back(bench.attribute + "=" + bench.candidates[k]);
  }

  bench.data = normalize_unit_ball(ds);
  return bench;
}

}  // namespace fil

#endif  // FILAUDIT_SYNTHBENCH_HPP
