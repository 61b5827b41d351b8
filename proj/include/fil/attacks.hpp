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

#ifndef FILAUDIT_ATTACKS_HPP
#define FILAUDIT_ATTACKS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fil/dataset.hpp"
#include "fil/fil_engine.hpp"
#include "fil/glm.hpp"
#include "fil/mechanism.hpp"
#include "fil/parallel.hpp"
#include "fil/random.hpp"

// Attribute-inversion adversaries used to validate the leakage measure:
// a white-box adversary that retrains per candidate value and matches the
// released parameters, a black-box adversary that scores candidates by prior
// times a prediction-performance statistic, and a prior-only baseline.

namespace fil {

enum class AttackKind { kWhiteBox, kBlackBox, kBaseline };

inline std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kWhiteBox: return "whitebox";
    case AttackKind::kBlackBox: return "blackbox";
    default: return "baseline";
  }
}

inline AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "whitebox") return AttackKind::kWhiteBox;
  if (s == "blackbox") return AttackKind::kBlackBox;
  if (s == "baseline") return AttackKind::kBaseline;
  throw std::invalid_argument("unknown attack kind '" + s + "'");
}

// One inversion problem: recover the nominal attribute of one example.
struct AttackTask {
  std::size_t example_index = 0;
  std::string attribute;
  std::vector<std::string> candidates;
  Eigen::VectorXd prior;  // candidate prior; used by baseline and black-box
};

// ---------------------------------------------------------------------------
// Candidate encoding helpers
// ---------------------------------------------------------------------------

// Rewrites the encoded span of `attribute` in row `example` to represent
// candidate index `candidate`. Candidates beyond the span width encode as the
// all-zero (dropped last) pattern; set cells carry the group's indicator
// value so rewrites stay consistent with the dataset's scaling.
inline void write_candidate(Dataset& ds, const AttributeGroup& group,
                            std::size_t example, std::size_t candidate) {
  for (std::size_t k = 0; k < group.width; ++k) {
    ds.X(static_cast<Eigen::Index>(example),
         static_cast<Eigen::Index>(group.offset + k)) =
        candidate == k ? group.indicator_value : 0.0;
  }
}

// Reads the category index back from an encoded row. Cells compare against
// half the indicator value; all clear means the dropped last category.
// Undecodable when the indicator value is 0.
inline std::size_t decode_category(const Dataset& ds,
                                   const AttributeGroup& group,
                                   std::size_t example) {
  if (group.indicator_value == 0.0) {
    throw std::runtime_error(
        "attribute span carries no signal; category is not decodable");
  }
  for (std::size_t k = 0; k < group.width; ++k) {
    if (ds.X(static_cast<Eigen::Index>(example),
             static_cast<Eigen::Index>(group.offset + k)) >
        0.5 * group.indicator_value) {
      return k;
    }
  }
  return group.width;  // last category
}

// Empirical candidate frequencies.
inline Eigen::VectorXd empirical_prior(const std::vector<int>& categories,
                                       std::size_t candidate_count) {
  Eigen::VectorXd prior =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(candidate_count));
  for (int c : categories) {
    if (c < 0 || static_cast<std::size_t>(c) >= candidate_count) {
      throw std::invalid_argument("category index out of range");
    }
    prior[c] += 1.0;
  }
  if (!categories.empty()) prior /= static_cast<double>(categories.size());
  return prior;
}

// ---------------------------------------------------------------------------
// Adversaries
// ---------------------------------------------------------------------------

// Prior-only baseline: argmax of the prior, ties broken by the lowest
// candidate index.
inline int baseline_invert(const Eigen::VectorXd& prior) {
  if (prior.size() == 0) {
    throw std::invalid_argument("baseline_invert: empty prior");
  }
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < prior.size(); ++k) {
    if (prior[k] > prior[best]) best = k;
  }
  return static_cast<int>(best);
}

// White-box adversary: knows everything but the target attribute value,
// including the training configuration. For each candidate it retrains
// exactly as the victim did and returns the candidate whose minimizer lands
// closest to the released parameters. Ties break to the lowest candidate
// index; a failed retrain scores +inf and is recorded.
//
// `scratch` must equal `ds` on entry; it is mutated and restored.
inline int whitebox_invert(Dataset& scratch, const TrainConfig& victim,
                           const AttackTask& task,
                           const Eigen::VectorXd& w_released,
                           std::vector<std::string>* failures = nullptr) {
  const AttributeGroup& group = scratch.group(task.attribute);
  const std::size_t i = task.example_index;
  const Eigen::VectorXd original_span =
      scratch.X.row(static_cast<Eigen::Index>(i))
          .segment(static_cast<Eigen::Index>(group.offset),
                   static_cast<Eigen::Index>(group.width));

  int best = 0;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < task.candidates.size(); ++v) {
    write_candidate(scratch, group, i, v);
    double distance;
    try {
      distance = (w_released - fit(scratch, victim).w).norm();
    } catch (const std::exception& e) {
      distance = std::numeric_limits<double>::infinity();
      if (failures != nullptr) {
        failures->push_back("candidate " + task.candidates[v] + " on example " +
                            std::to_string(i) + ": " + e.what());
      }
    }
    if (distance < best_distance) {
      best_distance = distance;
      best = static_cast<int>(v);
    }
  }
  scratch.X.row(static_cast<Eigen::Index>(i))
      .segment(static_cast<Eigen::Index>(group.offset),
               static_cast<Eigen::Index>(group.width)) = original_span;
  return best;
}

inline int whitebox_invert(const Dataset& ds, const TrainConfig& victim,
                           const AttackTask& task,
                           const Eigen::VectorXd& w_released,
                           std::vector<std::string>* failures = nullptr) {
  Dataset scratch = ds;
  return whitebox_invert(scratch, victim, task, w_released, failures);
}

// Log-density performance statistic pi for regression predictions: a
// Gaussian centered at the true target with the given variance.
inline std::function<double(double, double)> gaussian_performance(
    double variance) {
  if (!(variance > 0.0)) {
    throw std::invalid_argument("gaussian_performance: variance must be > 0");
  }
  const double log_norm = -0.5 * std::log(2.0 * M_PI * variance);
  return [variance, log_norm](double prediction, double target) {
    const double r = prediction - target;
    return log_norm - 0.5 * r * r / variance;
  };
}

// Black-box adversary: scores each candidate by prior(v) * pi(prediction, y)
// using only black-box predictions. `log_performance` is the log of pi, so
// tiny densities cannot underflow the comparison. Errors when no candidate
// has positive posterior mass.
inline int blackbox_invert(
    const Dataset& ds, const AttackTask& task,
    const Eigen::VectorXd& w_released,
    const std::function<double(double, double)>& log_performance) {
  const AttributeGroup& group = ds.group(task.attribute);
  const std::size_t i = task.example_index;
  if (task.prior.size() != static_cast<Eigen::Index>(task.candidates.size())) {
    throw std::invalid_argument("blackbox_invert: prior size mismatch");
  }

  Eigen::VectorXd x = ds.X.row(static_cast<Eigen::Index>(i));
  const double y = ds.y[static_cast<Eigen::Index>(i)];

  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < task.candidates.size(); ++v) {
    if (!(task.prior[static_cast<Eigen::Index>(v)] > 0.0)) continue;
    for (std::size_t k = 0; k < group.width; ++k) {
      x[static_cast<Eigen::Index>(group.offset + k)] =
          v == k ? group.indicator_value : 0.0;
    }
    const double score = std::log(task.prior[static_cast<Eigen::Index>(v)]) +
                         log_performance(w_released.dot(x), y);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(v);
    }
  }
  if (best < 0) {
    throw std::runtime_error(
        "blackbox_invert: no candidate has positive prior mass");
  }
  return best;
}

// ---------------------------------------------------------------------------
// Attack evaluation harness
// ---------------------------------------------------------------------------

struct AttackConfig {
  AttackKind kind = AttackKind::kWhiteBox;
  std::string attribute;
  int trials = 100;
  double sigma = 0.0;  // 0 means a noiseless release w' = w*
  std::uint64_t seed = 0;
};

struct DecileRow {
  int decile = 0;  // 1 (lowest eta) .. 10 (highest eta)
  double eta_low = 0.0;
  double eta_high = 0.0;
  double accuracy = 0.0;
  int count = 0;
};

struct AttackResult {
  AttackKind kind = AttackKind::kBaseline;
  double sigma = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;       // sample std across trials
  double baseline_accuracy = 0.0;  // modal-candidate frequency
  std::vector<int> predicted;      // modal prediction per example
  Eigen::VectorXd correct_rate;    // per-example rate across trials
  std::vector<DecileRow> deciles;
  Eigen::VectorXd attribute_eta;   // per-example eta used for the deciles
  std::vector<std::string> failures;
};

namespace detail {

// Stable eta ranking: ties resolve by example index so the partition is a
// function of eta ranks only, never of noise draws.
inline std::vector<std::size_t> eta_order(const Eigen::VectorXd& eta) {
  std::vector<std::size_t> order(static_cast<std::size_t>(eta.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return eta[static_cast<Eigen::Index>(a)] <
                            eta[static_cast<Eigen::Index>(b)];
                   });
  return order;
}

}  // namespace detail

// Repeats an attribute-inversion attack over independent noise draws and
// reports aggregate and per-eta-decile accuracy. Examples are binned once by
// their attribute-level eta from the unperturbed model (or by `decile_eta`
// when supplied, e.g. the pre-reweighting etas when evaluating a reweighted
// victim).
inline AttackResult evaluate_attack(const Dataset& ds,
                                    const TrainConfig& victim,
                                    const AttackConfig& config,
                                    const std::vector<int>& true_category,
                                    const Eigen::VectorXd* decile_eta = nullptr) {
  if (config.trials < 1) {
    throw std::invalid_argument("evaluate_attack: trials must be >= 1");
  }
  if (config.sigma < 0.0) {
    throw std::invalid_argument("evaluate_attack: sigma must be >= 0");
  }
  const std::size_t n = ds.size();
  if (true_category.size() != n) {
    throw std::invalid_argument("evaluate_attack: ground truth size mismatch");
  }
  const AttributeGroup& group = ds.group(config.attribute);
  if (group.categories.empty()) {
    throw std::invalid_argument("evaluate_attack: attribute '" +
                                config.attribute + "' is not nominal");
  }
  const std::size_t candidate_count = group.categories.size();

  const ModelParams params = fit(ds, victim);

  AttackResult result;
  result.kind = config.kind;
  result.sigma = config.sigma;
  result.trials = config.trials;
  result.seed = config.seed;

  // Attribute-level eta per example, from the unperturbed model. Only ranks
  // matter for the deciles, so sigma defaults to 1 when the release is
  // noiseless.
  {
    MinimizerJacobian jac(ds, params);
    const double eta_sigma = config.sigma > 0.0 ? config.sigma : 1.0;
    result.attribute_eta.resize(static_cast<Eigen::Index>(n));
    parallel_for(n, [&](std::size_t i) {
      result.attribute_eta[static_cast<Eigen::Index>(i)] =
          jac.example_span_eta(i, group.offset, group.width, eta_sigma);
    });
  }

  const Eigen::VectorXd prior = empirical_prior(true_category, candidate_count);
  result.baseline_accuracy = prior[baseline_invert(prior)];

  // Black-box performance statistic: Gaussian around the target with the
  // training-set mean squared residual as variance.
  std::function<double(double, double)> log_performance;
  if (config.kind == AttackKind::kBlackBox) {
    const double s2 = std::max(mean_squared_error(params, ds), 1e-12);
    log_performance = gaussian_performance(s2);
  }

  const int trials = config.trials;
  std::vector<std::vector<int>> predictions(
      static_cast<std::size_t>(trials), std::vector<int>(n, 0));
  std::vector<std::vector<std::string>> trial_failures(
      static_cast<std::size_t>(trials));

  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    Eigen::VectorXd w_released = params.w;
    if (config.sigma > 0.0) {
      w_released =
          perturb(params, config.sigma,
                  Rng::split(config.seed, static_cast<std::uint64_t>(t)))
              .w_released;
    }

    Dataset scratch = ds;
    AttackTask task;
    task.attribute = config.attribute;
    task.candidates = group.categories;
    task.prior = prior;
    for (std::size_t i = 0; i < n; ++i) {
      task.example_index = i;
      int pred = 0;
      switch (config.kind) {
        case AttackKind::kWhiteBox:
          pred = whitebox_invert(scratch, victim, task, w_released,
                                 &trial_failures[t]);
          break;
        case AttackKind::kBlackBox:
          pred = blackbox_invert(ds, task, w_released, log_performance);
          break;
        case AttackKind::kBaseline:
          pred = baseline_invert(prior);
          break;
      }
      predictions[t][i] = pred;
    }
  });

  for (auto& f : trial_failures) {
    result.failures.insert(result.failures.end(), f.begin(), f.end());
  }

  // Aggregate.
  result.correct_rate = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd trial_accuracy(trials);
  for (int t = 0; t < trials; ++t) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (predictions[static_cast<std::size_t>(t)][i] == true_category[i]) {
        ++correct;
        result.correct_rate[static_cast<Eigen::Index>(i)] += 1.0;
      }
    }
    trial_accuracy[t] = static_cast<double>(correct) / static_cast<double>(n);
  }
  result.correct_rate /= static_cast<double>(trials);
  result.accuracy_mean = trial_accuracy.mean();
  result.accuracy_std =
      trials > 1 ? std::sqrt((trial_accuracy.array() - result.accuracy_mean)
                                 .square()
                                 .sum() /
                             static_cast<double>(trials - 1))
                 : 0.0;

  // Modal prediction per example.
  result.predicted.resize(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> votes(candidate_count, 0);
    for (int t = 0; t < trials; ++t) {
      ++votes[static_cast<std::size_t>(
          predictions[static_cast<std::size_t>(t)][i])];
    }
    result.predicted[i] = static_cast<int>(
        std::max_element(votes.begin(), votes.end()) - votes.begin());
  }

  // Decile table over the eta ranking. Every example lands in exactly one
  // decile; decile 10 holds the highest-eta examples.
  const Eigen::VectorXd& ranking_eta =
      decile_eta != nullptr ? *decile_eta : result.attribute_eta;
  if (static_cast<std::size_t>(ranking_eta.size()) != n) {
    throw std::invalid_argument("evaluate_attack: decile eta size mismatch");
  }
  const std::vector<std::size_t> order = detail::eta_order(ranking_eta);
  for (int dct = 0; dct < 10; ++dct) {
    const std::size_t begin = (static_cast<std::size_t>(dct) * n) / 10;
    const std::size_t end = (static_cast<std::size_t>(dct) + 1) * n / 10;
    if (begin == end) continue;
    DecileRow row;
    row.decile = dct + 1;
    row.count = static_cast<int>(end - begin);
    row.eta_low = ranking_eta[static_cast<Eigen::Index>(order[begin])];
    row.eta_high = ranking_eta[static_cast<Eigen::Index>(order[end - 1])];
    double acc = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      acc += result.correct_rate[static_cast<Eigen::Index>(order[k])];
    }
    row.accuracy = acc / static_cast<double>(end - begin);
    result.deciles.push_back(row);
  }
  return result;
}

}  // namespace fil

#endif  // FILAUDIT_ATTACKS_HPP
