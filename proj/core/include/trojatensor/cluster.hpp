#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "trojatensor/iva.hpp"
#include "trojatensor/parafac2.hpp"

namespace trojatensor {

/// Per-model contribution to the first two decomposition components.
struct ContributionMatrix {
  Eigen::MatrixXd points;  // K x 2
  std::string source_method;
};

/// PARAFAC2 path: row k reads the first two loading columns directly.
ContributionMatrix contributions(const Parafac2Result& result);

/// IVA path: row k holds the 2-norms of the first two correlation-ranked
/// columns of the back-reconstructed mixing matrix A^[k].
ContributionMatrix contributions(const IvaResult& result,
                                 const std::vector<Eigen::MatrixXd>& reconstructed_mixing);

struct KmeansOptions {
  int restarts = 10;
  std::uint64_t seed = 0;
  int max_iter = 100;
};

struct ClusterReport {
  std::vector<int> assignments;         // 0 or 1 per model
  Eigen::Matrix<double, 2, 2> centroids;  // row c = centroid of cluster c
  double mean_silhouette = 0.0;
  int trojan_cluster = 0;
  bool degenerate = false;              // set if a cluster came back empty
};

/// Lloyd 2-means with k-means++ seeding, best of `restarts` by
/// within-cluster sum of squares. The trojan cluster is the one with higher
/// mean suspicion score; without scores, the tighter cluster.
ClusterReport kmeans2(const Eigen::MatrixXd& points, const KmeansOptions& opts = {},
                      const std::vector<double>& suspicion = {});

/// Mean silhouette over all points (Euclidean); points in singleton clusters
/// score 0 by convention.
double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& assignments);

}  // namespace trojatensor
