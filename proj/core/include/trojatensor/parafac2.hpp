#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "trojatensor/types.hpp"

namespace trojatensor {

struct Parafac2Options {
  int max_iter = 2000;
  double tol = 1e-8;  // absolute change of fit between sweeps
  std::uint64_t seed = 0;
};

/// Direct-fitting PARAFAC2: B^[k] ~ A diag(sigma^[k]) S^[k]^T with
/// S^[k] = P^[k] H, P^[k] column-orthonormal, so S^[k]^T S^[k] = H^T H is the
/// constant cross product that restores uniqueness.
struct Parafac2Result {
  Eigen::MatrixXd shared_factor;            // A: MC x N, unit-norm sign-fixed columns
  Eigen::MatrixXd loadings;                 // Sigma: K x N, row k = diag(Sigma^[k])
  Eigen::MatrixXd common_profile;           // H: N x N, unit-norm columns
  std::vector<Eigen::MatrixXd> orthobases;  // P^[k]: R x N, column-orthonormal
  std::vector<Eigen::MatrixXd> sources;     // S^[k] = P^[k] H: R x N
  Eigen::MatrixXd cross_product;            // Phi = H^T H: N x N
  double fit = 0.0;                         // 1 - sum ||B - model||^2 / sum ||B||^2
  int iterations = 0;
  bool converged = false;
  std::vector<double> fit_trace;

  Index rank() const noexcept { return shared_factor.cols(); }
  Index slice_count() const noexcept { return loadings.rows(); }
};

/// Alternating least squares: every sweep solves the per-slice orthogonal
/// Procrustes problems, then runs one CP-ALS pass over the projected slices
/// B^[k] P^[k]. Components come back ordered by decreasing loading-column
/// norm. The seed is used only when the SVD-based initialization is rank
/// deficient and random columns must fill in.
Parafac2Result parafac2_als(const std::vector<Eigen::MatrixXd>& slices, Index rank,
                            const Parafac2Options& opts = {});

/// The n-th column of every S^[k] (K vectors of length R), slice order
/// preserved. n is 1-based; n = 1 is the strongest-loading component.
std::vector<Eigen::VectorXd> parafac2_sources(const Parafac2Result& result, Index n);

}  // namespace trojatensor
