#include "trojatensor/pca.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "trojatensor/error.hpp"

namespace trojatensor {

namespace {

constexpr double kRankTolerance = 1e-10;

struct CenteredSvd {
  Eigen::VectorXd row_means;
  Eigen::BDCSVD<Eigen::MatrixXd> svd;
  Index rank = 0;
};

CenteredSvd centered_svd(const FeatureMatrix& features) {
  if (features.data.rows() < 1 || features.data.cols() < 2) {
    raise(ErrorCode::PreconditionViolation,
          "feature matrix '" + features.model_id + "' needs at least 1 row and 2 columns");
  }
  CenteredSvd out;
  out.row_means = features.data.rowwise().mean();
  const Eigen::MatrixXd centered = features.data.colwise() - out.row_means;
  out.svd.compute(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = out.svd.singularValues();
  const double cutoff = sigma.size() > 0 ? sigma(0) * kRankTolerance : 0.0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff && sigma(i) > 0.0) ++out.rank;
  }
  return out;
}

}  // namespace

Index pca_rank(const FeatureMatrix& features) { return centered_svd(features).rank; }

PcaReduction pca_reduce(const FeatureMatrix& features, Index order, double min_variance) {
  if (order < 1) {
    raise(ErrorCode::PreconditionViolation, "model order must be >= 1");
  }
  CenteredSvd decomp = centered_svd(features);
  if (order > decomp.rank) {
    raise(ErrorCode::OrderExceedsRank,
          "model order " + std::to_string(order) + " exceeds numerical rank " +
              std::to_string(decomp.rank) + " of feature matrix '" + features.model_id + "'");
  }

  const Eigen::VectorXd& sigma = decomp.svd.singularValues();
  const double samples = static_cast<double>(features.data.cols() - 1);
  const double scale = std::sqrt(samples);

  PcaReduction reduction;
  reduction.row_means = std::move(decomp.row_means);
  reduction.numerical_rank = decomp.rank;

  // B_c = U S V^T; X = sqrt(R-1) V_N^T has identity sample covariance, and
  // D = sqrt(R-1) S_N^{-1} U_N^T reproduces it from the centered data.
  const auto u_n = decomp.svd.matrixU().leftCols(order);
  const auto v_n = decomp.svd.matrixV().leftCols(order);
  reduction.reduced = scale * v_n.transpose();
  reduction.reduction_matrix =
      scale * sigma.head(order).cwiseInverse().asDiagonal() * u_n.transpose();

  const double total = sigma.squaredNorm();
  reduction.explained_variance = total > 0.0 ? sigma.head(order).squaredNorm() / total : 0.0;
  reduction.variance_warning = reduction.explained_variance < min_variance;
  return reduction;
}

}  // namespace trojatensor
