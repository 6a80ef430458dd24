#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "trojatensor/error.hpp"
#include "trojatensor/feature.hpp"

using namespace trojatensor;

namespace {

ActivationSet from_matrix(const Eigen::MatrixXd& flat, Index m, Index c) {
  ActivationSet set;
  set.model_id = "m";
  set.exemplars = m;
  set.classes = c;
  set.width = flat.cols();
  set.values.resize(static_cast<std::size_t>(flat.size()));
  for (Index i = 0; i < flat.rows(); ++i) {
    for (Index j = 0; j < flat.cols(); ++j) {
      set.values[static_cast<std::size_t>(i * flat.cols() + j)] = static_cast<float>(flat(i, j));
    }
  }
  return set;
}

}  // namespace

TEST_CASE("flatten keeps a single row as-is") {
  ActivationSet set;
  set.exemplars = 1;
  set.classes = 1;
  set.width = 6;
  set.values = {1, 2, 3, 4, 5, 6};
  const Eigen::MatrixXd flat = flatten_order(set);
  REQUIRE(flat.rows() == 1);
  REQUIRE(flat.cols() == 6);
  for (Index j = 0; j < 6; ++j) CHECK(flat(0, j) == doctest::Approx(j + 1.0));
}

TEST_CASE("flatten order is exemplar-major") {
  // 2x2x1 values [[a],[b]],[[c],[d]] flatten to rows (a, b, c, d).
  ActivationSet set;
  set.exemplars = 2;
  set.classes = 2;
  set.width = 1;
  set.values = {10, 20, 30, 40};
  const Eigen::MatrixXd flat = flatten_order(set);
  REQUIRE(flat.rows() == 4);
  CHECK(flat(0, 0) == 10);  // (m=0, c=0)
  CHECK(flat(1, 0) == 20);  // (m=0, c=1)
  CHECK(flat(2, 0) == 30);  // (m=1, c=0)
  CHECK(flat(3, 0) == 40);  // (m=1, c=1)
}

TEST_CASE("flatten then un-flatten reproduces the tensor") {
  const Index m = 3, c = 4, d = 5;
  const Eigen::MatrixXd data = oracle::random_matrix(m * c, d, 21);
  const ActivationSet set = from_matrix(data, m, c);
  const Eigen::MatrixXd flat = flatten_order(set);
  // Independent inverse mapping: row m*C + c back to (m, c).
  for (Index em = 0; em < m; ++em) {
    for (Index cl = 0; cl < c; ++cl) {
      for (Index j = 0; j < d; ++j) {
        CHECK(flat(em * c + cl, j) == doctest::Approx(set.at(em, cl, j)));
      }
    }
  }
}

TEST_CASE("projecting an all-zero set yields an all-zero matrix") {
  const ActivationSet set = from_matrix(Eigen::MatrixXd::Zero(4, 8), 2, 2);
  RpConfig cfg;
  cfg.target_dim = 32;
  cfg.seed = 5;
  const FeatureMatrix features = project(set, cfg);
  CHECK(features.data.rows() == 4);
  CHECK(features.data.cols() == 32);
  CHECK(features.data.norm() == 0.0);
  CHECK(features.source_dim == 8);
}

TEST_CASE("projection is deterministic in the seed") {
  const ActivationSet set = from_matrix(oracle::random_matrix(6, 20, 33), 2, 3);
  RpConfig cfg;
  cfg.target_dim = 16;
  cfg.seed = 42;
  const FeatureMatrix a = project(set, cfg);
  const FeatureMatrix b = project(set, cfg);
  CHECK((a.data - b.data).norm() == 0.0);

  cfg.seed = 43;
  const FeatureMatrix other = project(set, cfg);
  CHECK((a.data - other.data).norm() > 0.0);
}

TEST_CASE("projection is a linear map") {
  // Activation storage is binary32; picking values on a 1/64 grid and
  // power-of-two coefficients keeps alpha x + beta y exactly representable,
  // so the identity holds to double rounding.
  const Index rows = 6, d = 24, r = 20;
  CounterRng rng(71);
  Eigen::MatrixXd x(rows, d), y(rows, d);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < d; ++j) {
      x(i, j) = static_cast<double>(rng.next_int(-128, 128)) / 64.0;
      y(i, j) = static_cast<double>(rng.next_int(-128, 128)) / 64.0;
    }
  }
  const double alpha = 2.0, beta = -0.5;
  RpConfig cfg;
  cfg.target_dim = r;
  cfg.seed = 9;

  const FeatureMatrix fx = project(from_matrix(x, 2, 3), cfg);
  const FeatureMatrix fy = project(from_matrix(y, 2, 3), cfg);
  const FeatureMatrix fxy = project(from_matrix(alpha * x + beta * y, 2, 3), cfg);
  CHECK((fxy.data - (alpha * fx.data + beta * fy.data)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("output width is R regardless of the source width") {
  RpConfig cfg;
  cfg.target_dim = 40;
  cfg.seed = 3;
  for (Index d : {5, 17, 64, 200}) {
    const FeatureMatrix f = project(from_matrix(oracle::random_matrix(4, d, 80 + d), 2, 2), cfg);
    CHECK(f.data.cols() == 40);
  }
}

TEST_CASE("shared rows agree across widths, per-model rows do not") {
  RpConfig cfg;
  cfg.target_dim = 24;
  cfg.seed = 11;
  const Eigen::MatrixXd narrow = projection_operator(16, cfg);
  const Eigen::MatrixXd wide = projection_operator(64, cfg);
  CHECK((wide.topRows(16) - narrow).norm() == 0.0);

  RpConfig per_model = cfg;
  per_model.shared_rows = false;
  per_model.model_index = 0;
  RpConfig other = per_model;
  other.model_index = 1;
  CHECK((projection_operator(16, per_model) - projection_operator(16, other)).norm() > 0.0);
}

TEST_CASE("gaussian projection approximately preserves squared distances") {
  // 100 vector pairs in R^512 projected to R = 256: squared distances within
  // +-30% for at least 95% of pairs.
  const Index d = 512, r = 256, pairs = 100;
  RpConfig cfg;
  cfg.target_dim = r;
  cfg.seed = 2024;

  const Eigen::MatrixXd a = oracle::random_matrix(pairs, d, 501);
  const Eigen::MatrixXd b = oracle::random_matrix(pairs, d, 502);
  const FeatureMatrix fa = project(from_matrix(a, 10, 10), cfg);
  const FeatureMatrix fb = project(from_matrix(b, 10, 10), cfg);

  int preserved = 0;
  for (Index i = 0; i < pairs; ++i) {
    const double exact = (a.row(i) - b.row(i)).squaredNorm();
    const double sketched = (fa.data.row(i) - fb.data.row(i)).squaredNorm();
    if (sketched > 0.7 * exact && sketched < 1.3 * exact) ++preserved;
  }
  CHECK(preserved >= 95);
}

TEST_CASE("sparse scheme draws the three-point distribution") {
  RpConfig cfg;
  cfg.target_dim = 400;
  cfg.seed = 77;
  cfg.scheme = RpScheme::SparseSign;
  const Eigen::MatrixXd op = projection_operator(50, cfg);
  const double magnitude = std::sqrt(3.0) / std::sqrt(400.0);
  Index zeros = 0, pos = 0, neg = 0;
  for (Index i = 0; i < op.rows(); ++i) {
    for (Index j = 0; j < op.cols(); ++j) {
      if (op(i, j) == 0.0) {
        ++zeros;
      } else if (op(i, j) == doctest::Approx(magnitude)) {
        ++pos;
      } else if (op(i, j) == doctest::Approx(-magnitude)) {
        ++neg;
      } else {
        FAIL("unexpected sparse entry");
      }
    }
  }
  const double total = static_cast<double>(op.size());
  CHECK(static_cast<double>(zeros) / total == doctest::Approx(2.0 / 3.0).epsilon(0.05));
  CHECK(static_cast<double>(pos) / total == doctest::Approx(1.0 / 6.0).epsilon(0.15));
  CHECK(static_cast<double>(neg) / total == doctest::Approx(1.0 / 6.0).epsilon(0.15));
}

TEST_CASE("standardize gives zero mean and unit variance per column") {
  Eigen::MatrixXd m = oracle::random_matrix(200, 30, 91);
  m.array() += 3.5;
  m *= 2.2;
  standardize_columns(m);
  const double denom = static_cast<double>(m.rows() - 1);
  for (Index c = 0; c < m.cols(); ++c) {
    CHECK(std::abs(m.col(c).mean()) < 1e-9);
    CHECK(m.col(c).squaredNorm() / denom == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("standardize leaves zero-variance columns centered only") {
  Eigen::MatrixXd m = oracle::random_matrix(50, 3, 92);
  m.col(1).setConstant(4.0);
  standardize_columns(m);
  CHECK(m.col(1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("invalid projection dimension is rejected") {
  RpConfig cfg;
  cfg.target_dim = 0;
  CHECK_THROWS_AS(projection_operator(8, cfg), Error);
}
