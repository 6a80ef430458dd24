#include "trojatensor/cluster.hpp"

#include <cmath>
#include <limits>

#include "trojatensor/error.hpp"
#include "trojatensor/rng.hpp"

namespace trojatensor {

ContributionMatrix contributions(const Parafac2Result& result) {
  if (result.rank() < 2) {
    raise(ErrorCode::RankTooSmall, "contributions need at least 2 components");
  }
  ContributionMatrix out;
  out.source_method = "parafac2";
  out.points = result.loadings.leftCols(2);
  return out;
}

ContributionMatrix contributions(const IvaResult& result,
                                 const std::vector<Eigen::MatrixXd>& reconstructed_mixing) {
  if (result.order() < 2) {
    raise(ErrorCode::RankTooSmall, "contributions need at least 2 components");
  }
  if (reconstructed_mixing.size() != result.demixing.size()) {
    raise(ErrorCode::ShapeMismatch, "mixing matrices do not match the decomposition");
  }
  const Index first = result.scv_order[0];
  const Index second = result.scv_order[1];
  ContributionMatrix out;
  out.source_method = "iva";
  out.points.resize(static_cast<Index>(reconstructed_mixing.size()), 2);
  for (std::size_t k = 0; k < reconstructed_mixing.size(); ++k) {
    const Eigen::MatrixXd& mixing = reconstructed_mixing[k];
    out.points(static_cast<Index>(k), 0) = mixing.col(first).norm();
    out.points(static_cast<Index>(k), 1) = mixing.col(second).norm();
  }
  return out;
}

namespace {

double squared_distance(const Eigen::MatrixXd& points, Index i, const Eigen::RowVector2d& center) {
  return (points.row(i) - center).squaredNorm();
}

struct Clustering {
  std::vector<int> assignments;
  Eigen::Matrix<double, 2, 2> centroids;
  double wcss = std::numeric_limits<double>::infinity();
};

Clustering lloyd(const Eigen::MatrixXd& points, CounterRng& rng, int max_iter) {
  const Index count = points.rows();
  Clustering best;

  // k-means++ seeding for k = 2.
  Eigen::Matrix<double, 2, 2> centers;
  const Index first = static_cast<Index>(rng.next_int(0, count - 1));
  centers.row(0) = points.row(first);
  {
    Eigen::VectorXd weights(count);
    double total = 0.0;
    for (Index i = 0; i < count; ++i) {
      weights(i) = squared_distance(points, i, centers.row(0));
      total += weights(i);
    }
    Index second = first;
    if (total > 0.0) {
      double pick = rng.next_uniform() * total;
      for (Index i = 0; i < count; ++i) {
        pick -= weights(i);
        if (pick <= 0.0) {
          second = i;
          break;
        }
      }
    } else {
      second = (first + 1) % count;
    }
    centers.row(1) = points.row(second);
  }

  std::vector<int> assignments(static_cast<std::size_t>(count), 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (Index i = 0; i < count; ++i) {
      const double d0 = squared_distance(points, i, centers.row(0));
      const double d1 = squared_distance(points, i, centers.row(1));
      const int target = d1 < d0 ? 1 : 0;
      if (assignments[static_cast<std::size_t>(i)] != target) {
        assignments[static_cast<std::size_t>(i)] = target;
        changed = true;
      }
    }

    Eigen::Matrix<double, 2, 2> sums = Eigen::Matrix<double, 2, 2>::Zero();
    Index counts[2] = {0, 0};
    for (Index i = 0; i < count; ++i) {
      const int c = assignments[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[c];
    }
    for (int c = 0; c < 2; ++c) {
      if (counts[c] == 0) {
        // Revive an empty cluster with the point farthest from the other center.
        const int other = 1 - c;
        Index farthest = 0;
        double extent = -1.0;
        for (Index i = 0; i < count; ++i) {
          const double d = squared_distance(points, i, centers.row(other));
          if (d > extent) {
            extent = d;
            farthest = i;
          }
        }
        assignments[static_cast<std::size_t>(farthest)] = c;
        centers.row(c) = points.row(farthest);
        changed = true;
      } else {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      }
    }
    if (!changed && iter > 0) break;
  }

  double wcss = 0.0;
  for (Index i = 0; i < count; ++i) {
    wcss += squared_distance(points, i, centers.row(assignments[static_cast<std::size_t>(i)]));
  }
  best.assignments = std::move(assignments);
  best.centroids = centers;
  best.wcss = wcss;
  return best;
}

}  // namespace

ClusterReport kmeans2(const Eigen::MatrixXd& points, const KmeansOptions& opts,
                      const std::vector<double>& suspicion) {
  const Index count = points.rows();
  if (count < 2 || points.cols() != 2) {
    raise(ErrorCode::PreconditionViolation, "2-means needs a K x 2 point set with K >= 2");
  }
  if (!points.allFinite()) {
    raise(ErrorCode::NonFiniteValue, "contribution points contain NaN/Inf");
  }
  bool distinct = false;
  for (Index i = 1; i < count && !distinct; ++i) {
    distinct = (points.row(i) - points.row(0)).norm() > 0.0;
  }
  if (!distinct) {
    raise(ErrorCode::DegenerateInput, "all contribution points are identical");
  }

  Clustering best;
  for (int restart = 0; restart < std::max(opts.restarts, 1); ++restart) {
    CounterRng rng(derive_key(derive_key(opts.seed, "kmeans2"),
                              static_cast<std::uint64_t>(restart)));
    Clustering candidate = lloyd(points, rng, opts.max_iter);
    if (candidate.wcss < best.wcss) best = std::move(candidate);
  }

  ClusterReport report;
  report.assignments = best.assignments;
  report.centroids = best.centroids;

  Index counts[2] = {0, 0};
  for (int a : report.assignments) ++counts[a];
  report.degenerate = counts[0] == 0 || counts[1] == 0;
  report.mean_silhouette = report.degenerate ? 0.0 : silhouette(points, report.assignments);

  if (!suspicion.empty() && suspicion.size() == static_cast<std::size_t>(count)) {
    double mean_score[2] = {0.0, 0.0};
    for (Index i = 0; i < count; ++i) {
      mean_score[report.assignments[static_cast<std::size_t>(i)]] +=
          suspicion[static_cast<std::size_t>(i)];
    }
    for (int c = 0; c < 2; ++c) {
      if (counts[c] > 0) mean_score[c] /= static_cast<double>(counts[c]);
    }
    report.trojan_cluster = mean_score[1] > mean_score[0] ? 1 : 0;
  } else {
    // Tighter cluster: smaller mean distance to its own centroid.
    double spread[2] = {0.0, 0.0};
    for (Index i = 0; i < count; ++i) {
      const int c = report.assignments[static_cast<std::size_t>(i)];
      spread[c] += (points.row(i) - report.centroids.row(c)).norm();
    }
    for (int c = 0; c < 2; ++c) {
      spread[c] = counts[c] > 0 ? spread[c] / static_cast<double>(counts[c])
                                : std::numeric_limits<double>::infinity();
    }
    report.trojan_cluster = spread[1] < spread[0] ? 1 : 0;
  }
  return report;
}

double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& assignments) {
  const Index count = points.rows();
  if (static_cast<std::size_t>(count) != assignments.size()) {
    raise(ErrorCode::ShapeMismatch, "assignments do not match the point count");
  }
  Index counts[2] = {0, 0};
  for (int a : assignments) {
    if (a != 0 && a != 1) {
      raise(ErrorCode::PreconditionViolation, "assignments must be 0 or 1");
    }
    ++counts[a];
  }
  if (counts[0] == 0 || counts[1] == 0) {
    raise(ErrorCode::SingleCluster, "silhouette needs both clusters non-empty");
  }

  double total = 0.0;
  for (Index i = 0; i < count; ++i) {
    const int own = assignments[static_cast<std::size_t>(i)];
    if (counts[own] == 1) continue;  // singleton scores 0
    double intra = 0.0;
    double inter = 0.0;
    for (Index j = 0; j < count; ++j) {
      if (j == i) continue;
      const double d = (points.row(i) - points.row(j)).norm();
      if (assignments[static_cast<std::size_t>(j)] == own) {
        intra += d;
      } else {
        inter += d;
      }
    }
    const double a = intra / static_cast<double>(counts[own] - 1);
    const double b = inter / static_cast<double>(counts[1 - own]);
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(count);
}

}  // namespace trojatensor
