#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "trojatensor/types.hpp"

namespace trojatensor {

enum class RpScheme { Gaussian, SparseSign };

struct RpConfig {
  Index target_dim = 500;  // R
  std::uint64_t seed = 0;
  RpScheme scheme = RpScheme::Gaussian;
  /// Shared mode draws projection row j from a stream keyed by (seed, j), so
  /// models of any width agree on their overlapping rows. Per-model mode adds
  /// model_index to the key, giving every model an independent matrix.
  bool shared_rows = true;
  Index model_index = 0;

  void validate() const;
};

/// B^[k]: one model's features after projection, (M*C) x R.
struct FeatureMatrix {
  std::string model_id;
  Eigen::MatrixXd data;
  Index source_dim = 0;  // d_k before projection
};

/// Flattens M x C x d activations to an (M*C) x d matrix, row index m*C + c.
Eigen::MatrixXd flatten_order(const ActivationSet& set);

/// Materializes the d x R projection operator for the given width.
/// Entries: Gaussian N(0, 1/R), or sparse signs +-sqrt(3)/sqrt(R) with
/// probability 1/6 each and 0 otherwise (same column variance 1/R).
Eigen::MatrixXd projection_operator(Index width, const RpConfig& cfg);

/// Projects activations to a uniform (M*C) x R feature matrix. Pure linear
/// map, deterministic in (seed, d_k, R, scheme).
FeatureMatrix project(const ActivationSet& set, const RpConfig& cfg);

/// Removes each column's mean.
void center_columns(Eigen::MatrixXd& m);

/// Centers and scales each column to unit variance; columns with (near) zero
/// variance are centered only.
void standardize_columns(Eigen::MatrixXd& m);

}  // namespace trojatensor
