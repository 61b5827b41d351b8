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

// End-to-end acceptance suite. Each criterion prints exactly one PASS/FAIL
// line; the process exits nonzero if any criterion fails. Tolerances are
// fixed here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "fil/fil.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  bool pass = true;
  std::string detail;

  void require(bool condition, const std::string& message) {
    if (!condition) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += message;
    }
  }

  void note(const std::string& message) {
    if (!detail.empty()) detail += "; ";
    detail += message;
  }
};

std::string format(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.3g", value);
  return buffer;
}

// --------------------------------------------------------------------------
// 1. Analytic minimizer Jacobians match finite-difference retraining.
// --------------------------------------------------------------------------
Check criterion1() {
  Check check;
  const auto start = Clock::now();

  {
    const fil::Dataset ds = fil::gen_regression(100, 5, 0.1, 0.5, 11);
    fil::TrainConfig cfg;
    cfg.loss = fil::LossKind::kSquared;
    cfg.lambda = 0.01;
    const fil::ModelParams params = fil::fit(ds, cfg);
    fil::MinimizerJacobian jac(ds, params);
    const fil::Trainer trainer = fil::make_trainer(cfg);
    fil::Rng picker(123);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const std::size_t i = picker.uniform_index(ds.size());
      const Eigen::MatrixXd analytic = jac.example(i);
      const Eigen::MatrixXd fd = fil::fd_jacobian(trainer, ds, i);
      worst = std::max(worst, (analytic - fd).norm() / analytic.norm());
    }
    check.require(worst <= 1e-5, "linear rel err " + format(worst) + " > 1e-5");
    check.note("linear max rel err " + format(worst));
  }
  {
    const fil::Dataset ds = fil::gen_classification(100, 5, 0.3, 12);
    fil::TrainConfig cfg;
    cfg.loss = fil::LossKind::kLogistic;
    cfg.lambda = 0.01;
    cfg.grad_tol = 1e-12;
    const fil::ModelParams params = fil::fit(ds, cfg);
    fil::MinimizerJacobian jac(ds, params);
    const fil::Trainer trainer = fil::make_trainer(cfg);
    fil::Rng picker(321);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const std::size_t i = picker.uniform_index(ds.size());
      const Eigen::MatrixXd analytic = jac.example(i);
      const Eigen::MatrixXd fd = fil::fd_jacobian(trainer, ds, i);
      worst = std::max(worst, (analytic - fd).norm() / analytic.norm());
    }
    check.require(worst <= 1e-4,
                  "logistic rel err " + format(worst) + " > 1e-4");
    check.note("logistic max rel err " + format(worst));
  }

  const double seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  check.require(seconds < 60.0, "runtime " + format(seconds) + "s >= 60s");
  return check;
}

// --------------------------------------------------------------------------
// 2. Hand-computed micro-case, everything to 1e-10.
// --------------------------------------------------------------------------
Check criterion2() {
  Check check;
  fil::Dataset ds;
  ds.X.resize(1, 1);
  ds.X(0, 0) = 1.0;
  ds.y.resize(1);
  ds.y[0] = 1.0;

  const fil::ModelParams params = fil::fit_linear(ds, 1.0);
  check.require(std::abs(params.w[0] - 0.5) <= 1e-10,
                "w* = " + format(params.w[0]) + " != 0.5");

  const fil::HessianOperator H =
      fil::hessian_full(ds, fil::LossKind::kSquared, params.w, 1.0);
  check.require(std::abs(H.matrix()(0, 0) - 2.0) <= 1e-10,
                "H = " + format(H.matrix()(0, 0)) + " != 2");

  const Eigen::MatrixXd J = fil::example_jacobian(ds, params, 0);
  check.require(std::abs(J(0, 0)) <= 1e-10 && std::abs(J(0, 1) - 0.5) <= 1e-10,
                "J != [0, 0.5]");

  const double eta = fil::fil_eta(J, 1.0).eta;
  check.require(std::abs(eta - 0.5) <= 1e-10,
                "eta = " + format(eta) + " != 0.5");
  check.note("w*=" + format(params.w[0]) + " H=" + format(H.matrix()(0, 0)) +
             " eta=" + format(eta));
  return check;
}

// --------------------------------------------------------------------------
// 3. Monte-Carlo Fisher matrix and the zero-mean score condition.
// --------------------------------------------------------------------------
Check criterion3() {
  Check check;
  const auto start = Clock::now();

  const fil::Dataset ds = fil::gen_regression(100, 5, 0.1, 0.5, 11);
  fil::TrainConfig cfg;
  cfg.loss = fil::LossKind::kSquared;
  cfg.lambda = 0.01;
  const fil::ModelParams params = fil::fit(ds, cfg);
  fil::MinimizerJacobian jac(ds, params);
  const Eigen::MatrixXd J = jac.example(0);
  const double sigma = 1.0;

  const Eigen::MatrixXd analytic = (J.transpose() * J) / (sigma * sigma);
  const fil::McFimResult mc = fil::mc_fim(J, sigma, 100000, 76);
  const double rel = (mc.fim - analytic).norm() / analytic.norm();
  check.require(rel <= 0.03, "FIM rel err " + format(rel) + " > 3%");
  check.note("FIM rel err " + format(rel));

  double worst_z = 0.0;
  for (Eigen::Index c = 0; c < mc.mean_score.size(); ++c) {
    const double se =
        mc.score_stddev[c] / std::sqrt(static_cast<double>(mc.samples));
    if (se > 0.0) worst_z = std::max(worst_z, std::abs(mc.mean_score[c]) / se);
  }
  check.require(worst_z <= 3.0,
                "mean score " + format(worst_z) + " SE from 0 (> 3)");
  check.note("worst |mean score| = " + format(worst_z) + " SE");

  const double seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  check.require(seconds < 60.0, "runtime " + format(seconds) + "s >= 60s");
  return check;
}

// --------------------------------------------------------------------------
// 4. Variance-bound achievability for unbiased estimation of y_i.
// --------------------------------------------------------------------------
Check criterion4() {
  Check check;
  const fil::Dataset ds = fil::gen_regression(50, 3, 0.1, 0.5, 80);
  fil::TrainConfig cfg;
  cfg.loss = fil::LossKind::kSquared;
  cfg.lambda = 0.05;

  fil::Rng picker(77);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const std::size_t i = picker.uniform_index(ds.size());
    const fil::BlueVarianceResult out = fil::blue_variance_experiment(
        ds, cfg, i, 0.1, 10000, 810 + static_cast<std::uint64_t>(k));
    if (out.skipped) continue;
    const double rel =
        std::abs(out.empirical_variance - out.variance_bound) /
        out.variance_bound;
    worst = std::max(worst, rel);
    check.require(rel <= 0.05, "example " + std::to_string(i) +
                                   " variance off by " + format(rel));
  }
  check.note("worst variance deviation " + format(worst));

  const fil::BlueVarianceResult lo =
      fil::blue_variance_experiment(ds, cfg, 7, 0.1, 10000, 900);
  const fil::BlueVarianceResult hi =
      fil::blue_variance_experiment(ds, cfg, 7, 0.2, 10000, 901);
  const double ratio = hi.empirical_variance / lo.empirical_variance;
  check.require(std::abs(ratio - 4.0) <= 0.4,
                "sigma doubling gave variance ratio " + format(ratio));
  check.note("sigma-doubling variance ratio " + format(ratio));
  return check;
}

// --------------------------------------------------------------------------
// 5. Property suite.
// --------------------------------------------------------------------------
Check criterion5() {
  Check check;
  fil::Rng rng(505);

  // sigma-scaling: eta(c*sigma) = eta(sigma)/c.
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd J(3, 8);
    for (Eigen::Index i = 0; i < J.size(); ++i) {
      J(i / 8, i % 8) = rng.gaussian();
    }
    const double c = 0.5 + 4.0 * rng.uniform();
    const double base = fil::fil_eta(J, 1.0).eta;
    const double scaled = fil::fil_eta(J, c).eta;
    check.require(std::abs(scaled - base / c) <= 1e-8 * base,
                  "sigma scaling violated");
  }

  // Model-backed Fisher matrix for the remaining matrix properties.
  const fil::Dataset ds = fil::gen_regression(10, 3, 0.1, 0.8, 62);
  const fil::ModelParams params = fil::fit_linear(ds, 0.05);
  fil::MinimizerJacobian jac(ds, params);
  const fil::FisherMatrix full = fil::full_fim(jac, 1.0);
  const double full_eta = fil::fil_eta(full).eta;

  // Symmetry and positive semidefiniteness.
  {
    const double asym = (full.matrix - full.matrix.transpose()).norm();
    check.require(asym <= 1e-10 * full.matrix.norm(), "FIM not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full.matrix,
                                                      Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    const double max_eig = es.eigenvalues().maxCoeff();
    check.require(min_eig >= -1e-8 * max_eig,
                  "FIM min eigenvalue " + format(min_eig));
  }

  // Subset spectral dominance on random index subsets.
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<std::size_t> picks;
    for (std::size_t p = 0; p < full.size(); ++p) {
      if (rng.uniform() < 0.3) picks.push_back(p);
    }
    if (picks.empty()) picks.push_back(rng.uniform_index(full.size()));
    const double sub_eta = fil::fil_eta(fil::subset_fim(full, picks)).eta;
    check.require(sub_eta <= full_eta * (1.0 + 1e-8),
                  "subset eta exceeds full eta");
  }

  // Two-path consistency: selecting an example's block out of the full FIM
  // equals forming it from the example Jacobian directly.
  for (std::size_t i : {std::size_t{0}, std::size_t{4}, std::size_t{9}}) {
    const fil::FisherMatrix direct = fil::example_fim(jac, i, 1.0);
    const fil::FisherMatrix selected =
        fil::subset_fim(full, fil::example_flat_indices(i, ds.dim()));
    const double err = (direct.matrix - selected.matrix).norm() /
                       (1.0 + direct.matrix.norm());
    check.require(err <= 1e-10, "two-path mismatch " + format(err));
  }

  // Composition: k identical releases scale eta by sqrt(k).
  {
    const fil::FisherMatrix block = fil::example_fim(jac, 3, 1.0);
    const double eta_one = fil::fil_eta(block).eta;
    for (std::size_t k : {std::size_t{2}, std::size_t{5}}) {
      const fil::FisherMatrix combined =
          fil::compose(std::vector<fil::FisherMatrix>(k, block));
      const double expected = std::sqrt(static_cast<double>(k)) * eta_one;
      check.require(
          std::abs(fil::fil_eta(combined).eta - expected) <= 1e-8 * expected,
          "composition sqrt(k) scaling violated");
    }
  }

  // Block-inversion inequality over 100 random positive-definite matrices.
  {
    const double worst = fil::pd_block_inversion_check(8, {0, 1, 2}, 88, 100);
    check.require(worst >= -1e-8,
                  "block inversion worst gap " + format(worst));
    check.note("block-inversion worst gap " + format(worst));
  }

  // IRFIL fixed point and weight normalization.
  {
    Eigen::VectorXd omega(4);
    omega << 0.5, 1.5, 1.0, 1.0;
    const Eigen::VectorXd eta = Eigen::VectorXd::Constant(4, 0.42);
    const Eigen::VectorXd updated = fil::weight_update(omega, eta);
    check.require((updated - omega).norm() <= 1e-12,
                  "equal-eta update moved the weights");
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd w(6), e(6);
      for (int i = 0; i < 6; ++i) {
        w[i] = 0.1 + rng.uniform();
        e[i] = 0.01 + rng.uniform();
      }
      check.require(std::abs(fil::weight_update(w, e).sum() - 6.0) <= 1e-8,
                    "weights do not sum to n");
    }
  }
  return check;
}

// --------------------------------------------------------------------------
// 6. IRFIL equalizes per-example leakage without hurting accuracy.
// --------------------------------------------------------------------------
Check criterion6() {
  Check check;
  const fil::Dataset ds = fil::gen_regression(200, 5, 0.1, 1.0, 20260810);

  fil::IrfilOptions options;
  options.iterations = 10;
  const fil::IrfilTrace trace =
      fil::run_irfil(ds, fil::LossKind::kSquared, 0.01, 1.0, 7, options);
  const auto& its = trace.iterations;
  check.require(its.size() == 10, "unexpected iteration count");
  check.require(its[0].eta_cv > its[1].eta_cv && its[1].eta_cv > its[2].eta_cv,
                "cv(eta) not strictly decreasing over the first 3 iterations");
  check.require(its.back().eta_cv < 0.01,
                "cv(eta) after 10 iterations = " + format(its.back().eta_cv));
  check.note("cv(eta): " + format(its[0].eta_cv) + " -> " +
             format(its.back().eta_cv));

  // Accuracy preservation on a held-out split.
  const auto [train, test] = fil::split(ds, 0.2, 99);
  const fil::ModelParams unweighted = fil::fit_linear(train, 0.01);
  const fil::IrfilTrace weighted =
      fil::run_irfil(train, fil::LossKind::kSquared, 0.01, 1.0, 7, options);
  const double acc_unweighted = fil::accuracy(unweighted, test);
  const double acc_weighted = fil::accuracy(weighted.final_params, test);
  check.require(std::abs(acc_weighted - acc_unweighted) <= 0.02,
                "accuracy moved from " + format(acc_unweighted) + " to " +
                    format(acc_weighted));
  check.note("test accuracy " + format(acc_unweighted) + " -> " +
             format(acc_weighted));

  // Optional full-scale check, active only when a dataset snapshot is
  // supplied (FILAUDIT_MNIST_SNAPSHOT points at a save_snapshot CSV of the
  // preprocessed binary task).
  if (const char* path = std::getenv("FILAUDIT_MNIST_SNAPSHOT")) {
    const fil::Dataset mnist = fil::load_snapshot(path);
    const fil::ModelParams params = fil::fit_linear(mnist, 0.0);
    fil::MinimizerJacobian jac(mnist, params);
    const Eigen::VectorXd eta = jac.all_example_etas(1.0);
    const double mean = eta.mean();
    check.require(std::abs(mean - 0.040) <= 0.15 * 0.040,
                  "mean eta " + format(mean) + " off the reported 0.040");
    fil::IrfilOptions full_options;
    full_options.iterations = 10;
    const fil::IrfilTrace full_trace =
        fil::run_irfil(mnist, fil::LossKind::kSquared, 0.0, 1.0, 7,
                       full_options);
    const double std_after =
        full_trace.iterations.back().eta_std;
    check.require(std_after < 1e-3,
                  "post-IRFIL std(eta) " + format(std_after));
    check.note("optional snapshot check ran (mean eta " + format(mean) + ")");
  } else {
    check.note("optional full-scale check skipped (no snapshot supplied)");
  }
  return check;
}

// --------------------------------------------------------------------------
// 7. Attack validation: noiseless recovery, noise monotonicity, and decile
// flattening under IRFIL.
// --------------------------------------------------------------------------
Check criterion7() {
  Check check;
  const auto start = Clock::now();

  const fil::AttackBench bench = fil::gen_attack_task(300, 5, 3, 0.5, 42);
  fil::TrainConfig victim;
  victim.loss = fil::LossKind::kSquared;
  victim.lambda = 0.01;

  // (a) Noiseless white-box recovers every planted value.
  {
    fil::AttackConfig cfg;
    cfg.kind = fil::AttackKind::kWhiteBox;
    cfg.attribute = bench.attribute;
    cfg.trials = 1;
    cfg.sigma = 0.0;
    const fil::AttackResult result =
        fil::evaluate_attack(bench.data, victim, cfg, bench.true_category);
    check.require(result.accuracy_mean == 1.0,
                  "sigma=0 accuracy " + format(result.accuracy_mean));
    check.note("sigma=0 accuracy " + format(result.accuracy_mean));
  }

  // (b) Accuracy is non-increasing in sigma (up to one standard error).
  {
    const std::vector<double> grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    std::vector<double> acc, se;
    for (double sigma : grid) {
      fil::AttackConfig cfg;
      cfg.kind = fil::AttackKind::kWhiteBox;
      cfg.attribute = bench.attribute;
      cfg.trials = 100;
      cfg.sigma = sigma;
      cfg.seed = 5;
      const fil::AttackResult result =
          fil::evaluate_attack(bench.data, victim, cfg, bench.true_category);
      acc.push_back(result.accuracy_mean);
      se.push_back(result.accuracy_std / 10.0);  // std over 100 trials
    }
    std::string curve;
    for (std::size_t k = 0; k < acc.size(); ++k) {
      curve += (k ? "," : "") + format(acc[k]);
      if (k == 0) continue;
      const double allowance = std::hypot(se[k], se[k - 1]);
      check.require(acc[k] <= acc[k - 1] + allowance,
                    "accuracy rose from " + format(acc[k - 1]) + " to " +
                        format(acc[k]) + " at sigma " + format(grid[k]));
    }
    check.note("accuracy curve [" + curve + "]");
  }

  // (c) Decile spread before and after attribute-level IRFIL at a noise
  // scale in the middle of the transition.
  {
    const double sigma_star = 3e-3;

    const fil::ModelParams initial = fil::fit(bench.data, victim);
    fil::MinimizerJacobian jac(bench.data, initial);
    const fil::AttributeGroup& group = bench.data.group(bench.attribute);
    Eigen::VectorXd initial_eta(300);
    for (int i = 0; i < 300; ++i) {
      initial_eta[i] = jac.example_span_eta(static_cast<std::size_t>(i),
                                            group.offset, group.width,
                                            sigma_star);
    }

    fil::AttackConfig cfg;
    cfg.kind = fil::AttackKind::kWhiteBox;
    cfg.attribute = bench.attribute;
    cfg.trials = 100;
    cfg.sigma = sigma_star;
    cfg.seed = 5;
    const fil::AttackResult pre = fil::evaluate_attack(
        bench.data, victim, cfg, bench.true_category, &initial_eta);
    const double pre_spread =
        pre.deciles.back().accuracy - pre.deciles.front().accuracy;
    check.require(pre_spread >= 0.10,
                  "pre-IRFIL decile spread " + format(pre_spread) + " < 0.10");

    fil::IrfilOptions options;
    options.iterations = 10;
    options.eta_attribute = bench.attribute;
    const fil::IrfilTrace trace = fil::run_irfil(
        bench.data, fil::LossKind::kSquared, 0.01, sigma_star, 7, options);
    fil::TrainConfig reweighted = victim;
    reweighted.weights = trace.final_params.weights;
    const fil::AttackResult post = fil::evaluate_attack(
        bench.data, reweighted, cfg, bench.true_category, &initial_eta);
    double post_max = 0.0, post_min = 1.0;
    for (const fil::DecileRow& row : post.deciles) {
      post_max = std::max(post_max, row.accuracy);
      post_min = std::min(post_min, row.accuracy);
    }
    check.require(post_max - post_min < 0.05,
                  "post-IRFIL decile spread " + format(post_max - post_min));
    check.note("decile spread " + format(pre_spread) + " -> " +
               format(post_max - post_min));
  }

  const double seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  check.require(seconds < 600.0, "runtime " + format(seconds) + "s >= 600s");
  check.note("runtime " + format(seconds) + "s");
  return check;
}

// --------------------------------------------------------------------------
// 8. Scatter sanity: low eta implies low loss; the converse fails.
// --------------------------------------------------------------------------
Check criterion8() {
  Check check;
  const fil::Dataset ds = fil::gen_regression(200, 5, 0.1, 1.0, 2);
  const fil::ModelParams params = fil::fit_linear(ds, 0.01);
  fil::MinimizerJacobian jac(ds, params);
  const Eigen::VectorXd eta = jac.all_example_etas(1.0);
  Eigen::VectorXd loss(200);
  for (int i = 0; i < 200; ++i) {
    loss[i] = fil::loss_value(fil::LossKind::kSquared, params.w,
                              ds.X.row(i), ds.y[i]);
  }

  const auto decile_members = [](const Eigen::VectorXd& v, bool top) {
    std::vector<int> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return v[a] < v[b]; });
    std::vector<bool> member(order.size(), false);
    const std::size_t count = order.size() / 10;
    for (std::size_t k = 0; k < count; ++k) {
      member[static_cast<std::size_t>(
          top ? order[order.size() - 1 - k] : order[k])] = true;
    }
    return member;
  };

  const auto bottom_eta = decile_members(eta, false);
  const auto top_eta = decile_members(eta, true);
  const auto bottom_loss = decile_members(loss, false);
  const auto top_loss = decile_members(loss, true);

  int violations = 0, witnesses = 0;
  for (int i = 0; i < 200; ++i) {
    if (bottom_eta[static_cast<std::size_t>(i)] &&
        top_loss[static_cast<std::size_t>(i)]) {
      ++violations;
    }
    if (bottom_loss[static_cast<std::size_t>(i)] &&
        top_eta[static_cast<std::size_t>(i)]) {
      ++witnesses;
    }
  }
  check.require(violations == 0,
                std::to_string(violations) +
                    " bottom-eta examples sit in the top loss decile");
  check.require(witnesses >= 1,
                "no low-loss example carries top-decile eta");
  check.note(std::to_string(witnesses) +
             " low-loss high-eta witnesses, 0 low-eta high-loss violations");
  return check;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "Jacobian oracle equivalence", criterion1},
      {2, "hand-computed micro-case", criterion2},
      {3, "Monte-Carlo Fisher matrix", criterion3},
      {4, "variance-bound achievability", criterion4},
      {5, "property suite", criterion5},
      {6, "IRFIL convergence and accuracy", criterion6},
      {7, "attack validation", criterion7},
      {8, "scatter sanity", criterion8},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    Check check;
    try {
      check = criterion.run();
    } catch (const std::exception& e) {
      check.pass = false;
      check.detail = std::string("exception: ") + e.what();
    }
    if (!check.pass) ++failures;
    std::printf("[%s] criterion %d: %s%s%s\n", check.pass ? "PASS" : "FAIL",
                criterion.id, criterion.name,
                check.detail.empty() ? "" : " -- ", check.detail.c_str());
    std::fflush(stdout);
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
