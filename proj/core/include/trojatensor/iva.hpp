#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "trojatensor/pca.hpp"

namespace trojatensor {

struct IvaOptions {
  int max_iter = 1024;
  double tol = 1e-6;  // relative Frobenius change of any W^[k] between sweeps
  std::uint64_t seed = 0;
};

/// Joint decomposition X^[k] = A^[k] S^[k] across K datasets under the
/// second-order (multivariate Gaussian) source-component-vector model.
struct IvaResult {
  std::vector<Eigen::MatrixXd> demixing;    // W^[k], N x N
  std::vector<Eigen::MatrixXd> sources;     // S^[k] = W^[k] X^[k], N x R,
                                            // rows scaled to unit sample variance
  std::vector<Eigen::MatrixXd> mixing_est;  // (W^[k])^{-1}
  std::vector<Index> scv_order;             // source indices, most correlated first
  std::vector<double> mean_abs_corr;        // per source index, mean |r| over dataset pairs
  std::vector<double> cost_trace;           // objective value per sweep
  int iterations = 0;
  bool converged = false;

  Index order() const noexcept { return demixing.empty() ? 0 : demixing.front().rows(); }
  Index dataset_count() const noexcept { return static_cast<Index>(demixing.size()); }
};

/// Minimizes sum_n 0.5 log det(cov of SCV n) - sum_k log|det W^[k]| by
/// decoupled row updates: each row's restricted problem has the closed-form
/// Newton point w = G^{-1} h (G the conditional source covariance, h the
/// decoupling direction), guarded by backtracking toward the previous row
/// when finite-precision effects would raise the cost.
IvaResult iva_decompose(const std::vector<Eigen::MatrixXd>& datasets, const IvaOptions& opts = {});

/// The n-th source across all K datasets, after correlation ordering
/// (n = 1 is the maximally correlated SCV). n is 1-based.
struct ScvBundle {
  Index index = 0;         // 1-based rank by mean |r|
  Index source_index = 0;  // original source row
  std::vector<Eigen::VectorXd> rows;  // K vectors of length R
  double mean_abs_corr = 0.0;
};

ScvBundle extract_scv(const IvaResult& result, Index n);

/// Back-reconstruction into feature space: A^[k] = pinv(D^[k]) * What^[k]^{-1},
/// the exact inverse when D^[k] is square. Columns follow the original source
/// order (apply scv_order to pick correlation-ranked components).
std::vector<Eigen::MatrixXd> reconstruct_mixing(const IvaResult& result,
                                                const std::vector<PcaReduction>& reductions);

}  // namespace trojatensor
