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

#ifndef FILAUDIT_FIL_ENGINE_HPP
#define FILAUDIT_FIL_ENGINE_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "fil/dataset.hpp"
#include "fil/glm.hpp"
#include "fil/parallel.hpp"
#include "fil/random.hpp"

namespace fil {

// Largest data-vector size for which a Fisher matrix is materialized in full.
// Beyond the cap only spectral reductions are available, computed from the
// parameter-space Gram matrix.
inline constexpr std::size_t kDefaultFimCap = 4096;

// ---------------------------------------------------------------------------
// Cross derivatives of the per-example loss gradient
// ---------------------------------------------------------------------------

// d x (d+1) Jacobian of grad_w loss with respect to (x, y). Columns 0..d-1
// differentiate in x, column d differentiates in y.
//   squared:  [ x w^T + (w^T x - y) I | -x ]
//   logistic: [ s(1-s) x w^T + (s - y) I | -x ],  s = sigmoid(w^T x)
inline Eigen::MatrixXd cross_jacobian(LossKind kind, const Eigen::VectorXd& w,
                                      const Eigen::VectorXd& x, double y) {
  const Eigen::Index d = w.size();
  if (x.size() != d) {
    throw std::invalid_argument("cross_jacobian: dimension mismatch");
  }
  Eigen::MatrixXd out(d, d + 1);
  const double a = w.dot(x);
  if (kind == LossKind::kSquared) {
    out.leftCols(d) = x * w.transpose();
    out.leftCols(d).diagonal().array() += a - y;
  } else {
    const double s = sigmoid(a);
    out.leftCols(d) = s * (1.0 - s) * (x * w.transpose());
    out.leftCols(d).diagonal().array() += s - y;
  }
  out.col(d) = -x;
  return out;
}

// ---------------------------------------------------------------------------
// Full-dataset Hessian, factorized once and reused everywhere
// ---------------------------------------------------------------------------

class HessianOperator {
 public:
  explicit HessianOperator(Eigen::MatrixXd H) : H_(std::move(H)), llt_(H_) {
    if (llt_.info() != Eigen::Success) {
      throw std::runtime_error(
          "objective Hessian is not positive definite; check lambda and the "
          "solver configuration");
    }
  }

  const Eigen::MatrixXd& matrix() const { return H_; }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    return llt_.solve(rhs);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    return llt_.solve(rhs);
  }

 private:
  Eigen::MatrixXd H_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// H = sum_i w_i * hess_w loss_i + n * lambda * I, as a solve-capable
// factorization.
inline HessianOperator hessian_full(const Dataset& ds, LossKind kind,
                                    const Eigen::VectorXd& w, double lambda,
                                    const Eigen::VectorXd& weights = {}) {
  const std::size_t n = ds.size();
  const Eigen::Index d = ds.X.cols();
  const Eigen::VectorXd omega = detail::resolve_weights(weights, n);

  Eigen::VectorXd curvature = omega;
  if (kind == LossKind::kLogistic) {
    const Eigen::VectorXd a = ds.X * w;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double s = sigmoid(a[i]);
      curvature[i] *= s * (1.0 - s);
    }
  }
  Eigen::MatrixXd H =
      ds.X.transpose() * curvature.asDiagonal() * ds.X +
      static_cast<double>(n) * lambda * Eigen::MatrixXd::Identity(d, d);
  return HessianOperator(std::move(H));
}

// ---------------------------------------------------------------------------
// Spectral norm via power iteration
// ---------------------------------------------------------------------------

struct PowerIterationOptions {
  double rel_tol = 1e-8;
  int max_iterations = 10000;
  std::uint64_t seed = 0x5eed5eedULL;  // fixed start vector for determinism
};

class PowerIterationError : public std::runtime_error {
 public:
  PowerIterationError(double ritz_previous, double ritz_last)
      : std::runtime_error(
            "power iteration hit its iteration cap (last Ritz values " +
            std::to_string(ritz_previous) + ", " + std::to_string(ritz_last) +
            ")"),
        ritz_previous(ritz_previous),
        ritz_last(ritz_last) {}
  double ritz_previous;
  double ritz_last;
};

// Largest eigenvalue of a symmetric PSD matrix by power iteration from a
// seeded random start vector.
inline double largest_eigenvalue_psd(
    const Eigen::MatrixXd& G, const PowerIterationOptions& options = {}) {
  const Eigen::Index p = G.rows();
  if (p == 0) return 0.0;
  if (G.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  if (p == 1) return G(0, 0);

  Rng rng(options.seed);
  Eigen::VectorXd v = rng.gaussian_vector(p).normalized();
  double ritz = 0.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd Gv = G * v;
    const double next = v.dot(Gv);
    const double norm = Gv.norm();
    if (norm == 0.0) {
      // Start vector fell in the null space; restart from the next stream.
      v = Rng(Rng::split(options.seed, static_cast<std::uint64_t>(iter) + 1))
              .gaussian_vector(p)
              .normalized();
      continue;
    }
    v = Gv / norm;
    if (iter > 0 && std::abs(next - ritz) <=
                        options.rel_tol * std::max(std::abs(next), 1e-300)) {
      return next;
    }
    ritz = next;
  }
  throw PowerIterationError(ritz, v.dot(G * v));
}

// Largest singular value of A, computed on the smaller of the two Gram
// matrices so a d x m Jacobian never materializes an m x m product.
inline double spectral_norm(const Eigen::MatrixXd& A,
                            const PowerIterationOptions& options = {}) {
  if (A.size() == 0 || A.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Eigen::MatrixXd G = A.rows() <= A.cols()
                                ? Eigen::MatrixXd(A * A.transpose())
                                : Eigen::MatrixXd(A.transpose() * A);
  const double lambda_max = largest_eigenvalue_psd(G, options);
  return std::sqrt(std::max(lambda_max, 0.0));
}

// ---------------------------------------------------------------------------
// Fisher matrices and FIL values
// ---------------------------------------------------------------------------

struct FisherMatrix {
  Eigen::MatrixXd matrix;               // m x m, symmetric PSD
  std::vector<std::size_t> index_map;   // row/col -> flat index into z
  std::size_t feature_dim = 0;          // d, for decoding flat indices
  std::optional<double> sigma;          // noise scale; absent for mixed sums

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }

  FlatCoord coord(std::size_t row) const {
    return unflatten(index_map.at(row), feature_dim);
  }

  Eigen::Index rank(double tol = -1.0) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix,
                                                      Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double top = ev.size() > 0 ? std::abs(ev[ev.size() - 1]) : 0.0;
    const double threshold =
        tol >= 0.0 ? tol : static_cast<double>(matrix.rows()) *
                               std::numeric_limits<double>::epsilon() * top;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev[i] > threshold) ++r;
    }
    return r;
  }
};

struct Granularity {
  enum class Kind { kFull, kExample, kAttribute, kCustom };
  Kind kind = Kind::kFull;
  std::size_t index = 0;

  static Granularity full() { return {}; }
  static Granularity example(std::size_t i) {
    return {Kind::kExample, i};
  }
  static Granularity attribute(std::size_t j) {
    return {Kind::kAttribute, j};
  }
  static Granularity custom() { return {Kind::kCustom, 0}; }

  std::string label() const {
    switch (kind) {
      case Kind::kFull: return "full";
      case Kind::kExample: return "example";
      case Kind::kAttribute: return "attribute";
      default: return "custom";
    }
  }
};

// eta = sqrt of the spectral norm of a Fisher matrix; eta(sigma) = eta(1)/sigma.
struct FilValue {
  double eta = 0.0;
  Granularity granularity;
  std::optional<double> sigma;
};

// Fisher matrix of a Gaussian release: sigma^-2 J^T J, with the index map
// inherited from J's columns. Refuses to materialize beyond the cap.
inline FisherMatrix fim(const Eigen::MatrixXd& J, double sigma,
                        std::vector<std::size_t> index_map = {},
                        std::size_t feature_dim = 0,
                        std::size_t cap = kDefaultFimCap) {
  if (!(sigma > 0.0)) throw std::invalid_argument("fim: sigma must be > 0");
  const std::size_t m = static_cast<std::size_t>(J.cols());
  if (m > cap) {
    throw std::runtime_error(
        "fim: matrix of size " + std::to_string(m) +
        " exceeds the materialization cap " + std::to_string(cap) +
        "; use fil_eta on the Jacobian instead");
  }
  if (index_map.empty()) {
    index_map.resize(m);
    std::iota(index_map.begin(), index_map.end(), 0);
  } else if (index_map.size() != m) {
    throw std::invalid_argument("fim: index map does not match column count");
  }
  FisherMatrix F;
  F.matrix = (J.transpose() * J) / (sigma * sigma);
  F.index_map = std::move(index_map);
  F.feature_dim = feature_dim;
  F.sigma = sigma;
  return F;
}

// Principal submatrix at the given row/column positions, with the index map
// remapped. Positions must be distinct and in range.
inline FisherMatrix subset_fim(const FisherMatrix& full,
                               const std::vector<std::size_t>& positions) {
  const std::size_t m = full.size();
  std::set<std::size_t> seen;
  for (std::size_t p : positions) {
    if (p >= m) {
      throw std::invalid_argument("subset_fim: index " + std::to_string(p) +
                                  " out of range");
    }
    if (!seen.insert(p).second) {
      throw std::invalid_argument("subset_fim: duplicate index " +
                                  std::to_string(p));
    }
  }
  FisherMatrix out;
  out.matrix.resize(static_cast<Eigen::Index>(positions.size()),
                    static_cast<Eigen::Index>(positions.size()));
  for (std::size_t r = 0; r < positions.size(); ++r) {
    for (std::size_t c = 0; c < positions.size(); ++c) {
      out.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          full.matrix(static_cast<Eigen::Index>(positions[r]),
                      static_cast<Eigen::Index>(positions[c]));
    }
    out.index_map.push_back(full.index_map[positions[r]]);
  }
  out.feature_dim = full.feature_dim;
  out.sigma = full.sigma;
  return out;
}

// Entrywise sum of Fisher matrices from independent releases over the same
// data layout. The sigma tag survives only when all inputs agree.
inline FisherMatrix compose(const std::vector<FisherMatrix>& fims) {
  if (fims.empty()) throw std::invalid_argument("compose: no inputs");
  FisherMatrix out = fims.front();
  for (std::size_t k = 1; k < fims.size(); ++k) {
    const FisherMatrix& f = fims[k];
    if (f.matrix.rows() != out.matrix.rows() || f.index_map != out.index_map) {
      throw std::invalid_argument(
          "compose: Fisher matrices have mismatched index maps");
    }
    out.matrix += f.matrix;
    if (out.sigma.has_value() &&
        (!f.sigma.has_value() || *f.sigma != *out.sigma)) {
      out.sigma.reset();
    }
  }
  return out;
}

// FIL of a Gaussian release with Jacobian J: eta = ||J||_2 / sigma.
// An all-zero Jacobian short-circuits to eta = 0.
inline FilValue fil_eta(const Eigen::MatrixXd& J, double sigma,
                        Granularity granularity = {},
                        const PowerIterationOptions& options = {}) {
  if (!(sigma > 0.0)) throw std::invalid_argument("fil_eta: sigma must be > 0");
  return FilValue{spectral_norm(J, options) / sigma, granularity, sigma};
}

// FIL from an assembled Fisher matrix: eta = sqrt(||F||_2). The matrix
// already carries its noise scale.
inline FilValue fil_eta(const FisherMatrix& F, Granularity granularity = {},
                        const PowerIterationOptions& options = {}) {
  const double lambda_max = largest_eigenvalue_psd(F.matrix, options);
  return FilValue{std::sqrt(std::max(lambda_max, 0.0)), granularity, F.sigma};
}

// ---------------------------------------------------------------------------
// Jacobian of the regularized minimizer with respect to the data
// ---------------------------------------------------------------------------

// Implicit-function Jacobians of the fitted parameters. Factorizes the
// weighted objective Hessian once; every per-example block reuses it, so the
// O(d^2 n) factorization cost amortizes over n evaluations.
//
// Holds references to the dataset; keep it alive while in use.
class MinimizerJacobian {
 public:
  MinimizerJacobian(const Dataset& ds, const ModelParams& params)
      : ds_(ds),
        kind_(params.loss),
        w_(params.w),
        weights_(detail::resolve_weights(params.weights, ds.size())),
        hessian_(hessian_full(ds, params.loss, params.w, params.lambda,
                              weights_)) {
    if (!params.convergence.converged) {
      throw std::invalid_argument(
          "minimizer Jacobian requires a converged model (the implicit "
          "function is only valid at a stationary point)");
    }
  }

  Eigen::Index dim() const { return w_.size(); }
  std::size_t size() const { return ds_.size(); }
  const HessianOperator& hessian() const { return hessian_; }

  // d x (d+1) block for one example: -w_i * H^{-1} * cross_jacobian_i.
  Eigen::MatrixXd example(std::size_t i) const {
    check_index(i);
    const Eigen::VectorXd x = ds_.X.row(static_cast<Eigen::Index>(i));
    const Eigen::MatrixXd cross =
        cross_jacobian(kind_, w_, x, ds_.y[static_cast<Eigen::Index>(i)]);
    return -weights_[static_cast<Eigen::Index>(i)] * hessian_.solve(cross);
  }

  // d x n(d+1) assembly of all blocks in flat-layout order.
  Eigen::MatrixXd full() const {
    const Eigen::Index d = dim();
    const std::size_t n = size();
    Eigen::MatrixXd J(d, static_cast<Eigen::Index>(n) * (d + 1));
    for (std::size_t i = 0; i < n; ++i) {
      J.middleCols(static_cast<Eigen::Index>(i) * (d + 1), d + 1) = example(i);
    }
    return J;
  }

  // Selected columns of the full Jacobian, by flat index, without assembling
  // the rest.
  Eigen::MatrixXd columns(const std::vector<std::size_t>& flat_indices) const {
    const Eigen::Index d = dim();
    Eigen::MatrixXd out(d, static_cast<Eigen::Index>(flat_indices.size()));
    Eigen::MatrixXd cached_block;
    std::size_t cached_example = size();  // invalid sentinel
    for (std::size_t k = 0; k < flat_indices.size(); ++k) {
      const FlatCoord c = unflatten(flat_indices[k], static_cast<std::size_t>(d));
      check_index(c.example);
      if (c.example != cached_example) {
        cached_block = example(c.example);
        cached_example = c.example;
      }
      out.col(static_cast<Eigen::Index>(k)) =
          cached_block.col(static_cast<Eigen::Index>(c.coordinate));
    }
    return out;
  }

  // Gram matrix J J^T = sum_i J_i J_i^T (d x d). The full-dataset spectral
  // norm comes from here, so the n(d+1)-sized product is never formed.
  Eigen::MatrixXd gram() const {
    const Eigen::Index d = dim();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < size(); ++i) {
      const Eigen::MatrixXd Ji = example(i);
      G.noalias() += Ji * Ji.transpose();
    }
    return G;
  }

  double example_eta(std::size_t i, double sigma,
                     const PowerIterationOptions& options = {}) const {
    return fil_eta(example(i), sigma, Granularity::example(i), options).eta;
  }

  // Per-example etas, computed in parallel against the shared factorization.
  Eigen::VectorXd all_example_etas(
      double sigma, const PowerIterationOptions& options = {}) const {
    Eigen::VectorXd etas(static_cast<Eigen::Index>(size()));
    parallel_for(size(), [&](std::size_t i) {
      etas[static_cast<Eigen::Index>(i)] = example_eta(i, sigma, options);
    });
    return etas;
  }

  // Full-dataset FIL via the parameter-space Gram matrix.
  double full_eta(double sigma,
                  const PowerIterationOptions& options = {}) const {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    const double lambda_max = largest_eigenvalue_psd(gram(), options);
    return std::sqrt(std::max(lambda_max, 0.0)) / sigma;
  }

  // FIL of one data coordinate (0..d-1 are features, d is the target) across
  // all examples.
  double attribute_eta(std::size_t coordinate, double sigma,
                       const PowerIterationOptions& options = {}) const {
    if (coordinate > static_cast<std::size_t>(dim())) {
      throw std::invalid_argument("attribute coordinate out of range");
    }
    const Eigen::MatrixXd J = columns(
        attribute_flat_indices(coordinate, size(), static_cast<std::size_t>(dim())));
    return fil_eta(J, sigma, Granularity::attribute(coordinate), options).eta;
  }

  // FIL of a contiguous coordinate span of one example (attribute-level
  // leakage of an encoded nominal column).
  double example_span_eta(std::size_t i, std::size_t offset, std::size_t width,
                          double sigma,
                          const PowerIterationOptions& options = {}) const {
    check_index(i);
    if (offset + width > static_cast<std::size_t>(dim())) {
      throw std::invalid_argument("span out of range");
    }
    const Eigen::MatrixXd block = example(i);
    const Eigen::MatrixXd J =
        block.middleCols(static_cast<Eigen::Index>(offset),
                         static_cast<Eigen::Index>(width));
    return fil_eta(J, sigma, Granularity::custom(), options).eta;
  }

 private:
  void check_index(std::size_t i) const {
    if (i >= size()) {
      throw std::invalid_argument("example index out of range");
    }
  }

  const Dataset& ds_;
  LossKind kind_;
  Eigen::VectorXd w_;
  Eigen::VectorXd weights_;
  HessianOperator hessian_;
};

// One-shot convenience wrappers. For repeated queries against one model,
// construct a MinimizerJacobian and reuse it.
inline Eigen::MatrixXd example_jacobian(const Dataset& ds,
                                        const ModelParams& params,
                                        std::size_t i) {
  return MinimizerJacobian(ds, params).example(i);
}

inline Eigen::MatrixXd full_jacobian(const Dataset& ds,
                                     const ModelParams& params) {
  return MinimizerJacobian(ds, params).full();
}

// Fisher matrix of a single example's block, with the flat index map filled in.
inline FisherMatrix example_fim(const MinimizerJacobian& jac, std::size_t i,
                                double sigma, std::size_t cap = kDefaultFimCap) {
  const std::size_t d = static_cast<std::size_t>(jac.dim());
  return fim(jac.example(i), sigma, example_flat_indices(i, d), d, cap);
}

inline FisherMatrix full_fim(const MinimizerJacobian& jac, double sigma,
                             std::size_t cap = kDefaultFimCap) {
  const std::size_t d = static_cast<std::size_t>(jac.dim());
  std::vector<std::size_t> map(jac.size() * (d + 1));
  std::iota(map.begin(), map.end(), 0);
  return fim(jac.full(), sigma, std::move(map), d, cap);
}

}  // namespace fil

#endif  // FILAUDIT_FIL_ENGINE_HPP
