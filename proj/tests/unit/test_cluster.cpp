#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "trojatensor/cluster.hpp"
#include "trojatensor/error.hpp"

using namespace trojatensor;

namespace {

Eigen::MatrixXd points_from(std::initializer_list<std::pair<double, double>> list) {
  Eigen::MatrixXd points(static_cast<Index>(list.size()), 2);
  Index i = 0;
  for (const auto& [x, y] : list) {
    points(i, 0) = x;
    points(i, 1) = y;
    ++i;
  }
  return points;
}

}  // namespace

TEST_CASE("parafac2 contributions read the loading columns directly") {
  Parafac2Result result;
  result.shared_factor = Eigen::MatrixXd::Identity(4, 2);
  result.loadings = points_from({{1, 0}, {0, 1}});
  const ContributionMatrix out = contributions(result);
  CHECK(out.source_method == "parafac2");
  CHECK(out.points(0, 0) == 1.0);
  CHECK(out.points(0, 1) == 0.0);
  CHECK(out.points(1, 0) == 0.0);
  CHECK(out.points(1, 1) == 1.0);
}

TEST_CASE("iva contributions are column norms of the reconstructed mixing") {
  IvaResult result;
  result.demixing = {Eigen::MatrixXd::Identity(2, 2)};
  result.mixing_est = {Eigen::MatrixXd::Identity(2, 2)};
  result.scv_order = {0, 1};
  result.mean_abs_corr = {0.9, 0.5};

  Eigen::MatrixXd mixing(2, 2);
  mixing << 3, 0, 0, 4;
  const ContributionMatrix out = contributions(result, {mixing});
  CHECK(out.source_method == "iva");
  CHECK(out.points(0, 0) == doctest::Approx(3.0));
  CHECK(out.points(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("iva contributions follow the correlation order") {
  IvaResult result;
  result.demixing = {Eigen::MatrixXd::Identity(2, 2)};
  result.mixing_est = {Eigen::MatrixXd::Identity(2, 2)};
  result.scv_order = {1, 0};  // second source is the most correlated
  result.mean_abs_corr = {0.2, 0.9};

  Eigen::MatrixXd mixing(2, 2);
  mixing << 3, 0, 0, 4;
  const ContributionMatrix out = contributions(result, {mixing});
  CHECK(out.points(0, 0) == doctest::Approx(4.0));
  CHECK(out.points(0, 1) == doctest::Approx(3.0));
}

TEST_CASE("contributions need at least two components") {
  Parafac2Result result;
  result.shared_factor = Eigen::MatrixXd::Ones(4, 1);
  result.loadings = Eigen::MatrixXd::Ones(3, 1);
  try {
    contributions(result);
    FAIL("expected RankTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankTooSmall);
  }
}

TEST_CASE("2-means separates two obvious groups") {
  const Eigen::MatrixXd points = points_from({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
  const ClusterReport report = kmeans2(points, {});
  CHECK(report.assignments[0] == report.assignments[1]);
  CHECK(report.assignments[2] == report.assignments[3]);
  CHECK(report.assignments[0] != report.assignments[2]);
  CHECK_FALSE(report.degenerate);
}

TEST_CASE("identical points raise DegenerateInput") {
  const Eigen::MatrixXd points = points_from({{1, 1}, {1, 1}, {1, 1}});
  try {
    kmeans2(points, {});
    FAIL("expected DegenerateInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateInput);
  }
}

TEST_CASE("returned clustering beats random assignments on WCSS") {
  Eigen::MatrixXd points(40, 2);
  CounterRng rng(701);
  for (Index i = 0; i < 40; ++i) {
    const bool right = i % 2 == 0;
    points(i, 0) = (right ? 5.0 : 0.0) + rng.next_normal();
    points(i, 1) = rng.next_normal();
  }
  const ClusterReport report = kmeans2(points, {});

  const auto wcss_of = [&](const std::vector<int>& assignments) {
    Eigen::RowVector2d centers[2] = {{0, 0}, {0, 0}};
    int counts[2] = {0, 0};
    for (Index i = 0; i < points.rows(); ++i) {
      centers[assignments[static_cast<std::size_t>(i)]] += points.row(i);
      ++counts[assignments[static_cast<std::size_t>(i)]];
    }
    for (int c = 0; c < 2; ++c) {
      if (counts[c] > 0) centers[c] /= counts[c];
    }
    double acc = 0.0;
    for (Index i = 0; i < points.rows(); ++i) {
      acc += (points.row(i) - centers[assignments[static_cast<std::size_t>(i)]]).squaredNorm();
    }
    return acc;
  };

  const double achieved = wcss_of(report.assignments);
  CounterRng draws(702);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> random_assignment(40);
    for (int& a : random_assignment) a = draws.next_uniform() < 0.5 ? 0 : 1;
    bool both = false;
    for (std::size_t i = 1; i < random_assignment.size(); ++i) {
      if (random_assignment[i] != random_assignment[0]) both = true;
    }
    if (!both) continue;
    CHECK(achieved <= wcss_of(random_assignment) + 1e-9);
  }
}

TEST_CASE("silhouette hand value") {
  // {(0,0),(0,1)} vs {(10,0),(10,1)}: a = 1, b = (10 + sqrt(101)) / 2.
  const Eigen::MatrixXd points = points_from({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
  const double value = silhouette(points, {0, 0, 1, 1});
  CHECK(value == doctest::Approx(0.900).epsilon(0.001 / 0.900));
}

TEST_CASE("single cluster raises SingleCluster") {
  const Eigen::MatrixXd points = points_from({{0, 0}, {1, 1}});
  try {
    silhouette(points, {0, 0});
    FAIL("expected SingleCluster");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleCluster);
  }
}

TEST_CASE("silhouette stays within [-1, 1] on random inputs") {
  CounterRng rng(703);
  for (int trial = 0; trial < 50; ++trial) {
    const Index count = 4 + rng.next_int(0, 20);
    Eigen::MatrixXd points(count, 2);
    std::vector<int> assignments(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) {
      points(i, 0) = rng.next_normal();
      points(i, 1) = rng.next_normal();
      assignments[static_cast<std::size_t>(i)] = rng.next_uniform() < 0.5 ? 0 : 1;
    }
    assignments[0] = 0;
    assignments[1] = 1;  // both clusters non-empty
    const double value = silhouette(points, assignments);
    CHECK(value >= -1.0);
    CHECK(value <= 1.0);
  }
}

TEST_CASE("silhouette is invariant under rigid motion and label swap") {
  CounterRng rng(704);
  Eigen::MatrixXd points(12, 2);
  std::vector<int> assignments(12);
  for (Index i = 0; i < 12; ++i) {
    points(i, 0) = rng.next_normal() + (i < 6 ? 0.0 : 4.0);
    points(i, 1) = rng.next_normal();
    assignments[static_cast<std::size_t>(i)] = i < 6 ? 0 : 1;
  }
  const double base = silhouette(points, assignments);

  const double angle = 1.1;
  Eigen::Matrix2d rotation;
  rotation << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Eigen::MatrixXd moved = points * rotation.transpose();
  moved.rowwise() += Eigen::RowVector2d(7.0, -3.0);
  CHECK(silhouette(moved, assignments) == doctest::Approx(base).epsilon(1e-9));

  std::vector<int> swapped(assignments);
  for (int& a : swapped) a = 1 - a;
  CHECK(silhouette(points, swapped) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("trojan cluster follows the suspicion scores") {
  const Eigen::MatrixXd points = points_from({{0, 0}, {0.2, 0}, {5, 5}, {5.2, 5}});
  std::vector<double> suspicion{0.9, 0.8, 0.1, 0.05};
  const ClusterReport report = kmeans2(points, {}, suspicion);
  const int cluster_of_0 = report.assignments[0];
  CHECK(report.trojan_cluster == cluster_of_0);
}

TEST_CASE("without scores the tighter cluster is the trojan cluster") {
  const Eigen::MatrixXd points =
      points_from({{0, 0}, {0.1, 0}, {0, 0.1}, {8, 8}, {12, 9}, {10, 14}});
  const ClusterReport report = kmeans2(points, {});
  CHECK(report.trojan_cluster == report.assignments[0]);
}
