#pragma once

#include <Eigen/Dense>

#include "trojatensor/feature.hpp"

namespace trojatensor {

/// PCA whitening of one feature matrix, treating the M*C rows as variables
/// and the R columns as samples.
struct PcaReduction {
  Eigen::MatrixXd reduced;           // X: N x R, rows zero-mean, cov(X) = I
  Eigen::MatrixXd reduction_matrix;  // D: N x MC, X = D * (B - row_means 1^T)
  Eigen::VectorXd row_means;         // MC
  double explained_variance = 0.0;   // fraction of variance kept by N comps
  bool variance_warning = false;     // explained_variance < requested floor
  Index numerical_rank = 0;
};

/// Reduces B (MC x R) to `order` whitened components. Throws OrderExceedsRank
/// when order exceeds the numerical rank (singular values below 1e-10 of the
/// largest count as zero). explained_variance below min_variance only sets
/// the warning flag.
PcaReduction pca_reduce(const FeatureMatrix& features, Index order, double min_variance = 0.9);

/// Numerical rank of the row-centered feature matrix, same tolerance as
/// pca_reduce; used to clamp the model order zoo-wide before reduction.
Index pca_rank(const FeatureMatrix& features);

}  // namespace trojatensor
