#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "trojatensor/error.hpp"
#include "trojatensor/parafac2.hpp"
#include "trojatensor/stats.hpp"

using namespace trojatensor;

TEST_CASE("rank-1 data is fit exactly within five iterations") {
  const Index rows = 20, cols = 30;
  const Eigen::MatrixXd a = oracle::random_matrix(rows, 1, 401);
  const Eigen::MatrixXd s = oracle::random_matrix(cols, 1, 402);
  const Eigen::MatrixXd slice = a * 2.5 * s.transpose();
  const std::vector<Eigen::MatrixXd> slices{slice, slice, slice};

  const Parafac2Result result = parafac2_als(slices, 1, {});
  CHECK(result.fit == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(result.iterations <= 5);
  CHECK(result.converged);
}

TEST_CASE("rank-1 sources correlate perfectly across slices") {
  const Index rows = 16, cols = 40;
  const Eigen::MatrixXd a = oracle::random_matrix(rows, 1, 403);
  const Eigen::MatrixXd s = oracle::random_matrix(cols, 1, 404);
  std::vector<Eigen::MatrixXd> slices;
  for (double scale : {1.0, 0.5, 2.0}) slices.push_back(a * scale * s.transpose());

  const Parafac2Result result = parafac2_als(slices, 1, {});
  const std::vector<Eigen::VectorXd> sources = parafac2_sources(result, 1);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (std::size_t j = i + 1; j < sources.size(); ++j) {
      CHECK(std::abs(oracle::pearson(sources[i], sources[j])) ==
            doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("exact rank-3 synthetic data reaches fit 0.999") {
  const oracle::ExactParafac2Data data = oracle::exact_parafac2(4, 40, 60, 3, 405);
  const Parafac2Result result = parafac2_als(data.slices, 3, {});
  CHECK(result.fit >= 0.999);
}

TEST_CASE("rank above min(MC, R) raises RankTooLarge") {
  const std::vector<Eigen::MatrixXd> slices{oracle::random_matrix(6, 30, 406),
                                            oracle::random_matrix(6, 30, 407)};
  try {
    parafac2_als(slices, 7, {});
    FAIL("expected RankTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankTooLarge);
  }
}

TEST_CASE("zero slice raises DegenerateSlice") {
  const std::vector<Eigen::MatrixXd> slices{oracle::random_matrix(6, 30, 408),
                                            Eigen::MatrixXd::Zero(6, 30)};
  try {
    parafac2_als(slices, 2, {});
    FAIL("expected DegenerateSlice");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateSlice);
  }
}

TEST_CASE("a single slice violates the precondition") {
  const std::vector<Eigen::MatrixXd> slices{oracle::random_matrix(6, 30, 409)};
  CHECK_THROWS_AS(parafac2_als(slices, 2, {}), Error);
}

TEST_CASE("fit trace is non-decreasing") {
  // Noisy data keeps ALS busy for several sweeps.
  oracle::ExactParafac2Data data = oracle::exact_parafac2(5, 30, 50, 3, 410);
  for (auto& slice : data.slices) {
    slice += 0.5 * oracle::random_matrix(slice.rows(), slice.cols(), 411);
  }
  Parafac2Options opts;
  opts.max_iter = 200;
  const Parafac2Result result = parafac2_als(data.slices, 3, opts);
  REQUIRE(result.fit_trace.size() >= 2);
  for (std::size_t i = 1; i < result.fit_trace.size(); ++i) {
    CHECK(result.fit_trace[i] >= result.fit_trace[i - 1] - 1e-12);
  }
}

TEST_CASE("orthonormal bases and constant cross product") {
  oracle::ExactParafac2Data data = oracle::exact_parafac2(4, 24, 36, 3, 412);
  for (auto& slice : data.slices) {
    slice += 0.3 * oracle::random_matrix(slice.rows(), slice.cols(), 413);
  }
  const Parafac2Result result = parafac2_als(data.slices, 3, {});

  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(3, 3);
  const double phi_norm = result.cross_product.norm();
  for (std::size_t k = 0; k < data.slices.size(); ++k) {
    CHECK((result.orthobases[k].transpose() * result.orthobases[k] - identity).norm() <= 1e-10);
    const Eigen::MatrixXd cross =
        result.sources[k].transpose() * result.sources[k];
    CHECK((cross - result.cross_product).norm() / phi_norm <= 1e-6);
  }
}

TEST_CASE("components are ordered by loading norm and signs are fixed") {
  oracle::ExactParafac2Data data = oracle::exact_parafac2(4, 24, 36, 3, 414);
  const Parafac2Result result = parafac2_als(data.slices, 3, {});
  for (Index n = 1; n < 3; ++n) {
    CHECK(result.loadings.col(n - 1).norm() >= result.loadings.col(n).norm() - 1e-12);
  }
  for (Index n = 0; n < 3; ++n) {
    CHECK(result.shared_factor.col(n).norm() == doctest::Approx(1.0).epsilon(1e-9));
    Index peak = 0;
    result.shared_factor.col(n).cwiseAbs().maxCoeff(&peak);
    CHECK(result.shared_factor(peak, n) > 0.0);
  }
}

TEST_CASE("scaling one slice scales its loading row and keeps the mask") {
  // Exact model data: the rescaled problem has the same factors with row k
  // of the loadings scaled by the same constant. ALS approaches the exact
  // optimum with a slow per-column magnitude tail, so the comparison is
  // anchored on row 0 of each column to cancel that common drift.
  const oracle::ExactParafac2Data data = oracle::exact_parafac2(4, 24, 48, 2, 415);
  Parafac2Options tight;
  tight.tol = 1e-10;
  tight.max_iter = 4000;
  const Parafac2Result base = parafac2_als(data.slices, 2, tight);

  std::vector<Eigen::MatrixXd> scaled = data.slices;
  const double factor = 3.0;
  scaled[1] *= factor;
  const Parafac2Result alt = parafac2_als(scaled, 2, tight);

  for (Index n = 0; n < 2; ++n) {
    const double anchor = std::abs(alt.loadings(0, n)) / std::abs(base.loadings(0, n));
    CHECK(std::abs(alt.loadings(1, n)) ==
          doctest::Approx(factor * anchor * std::abs(base.loadings(1, n))).epsilon(5e-3));
    for (Index k : {Index{2}, Index{3}}) {
      CHECK(std::abs(alt.loadings(k, n)) ==
            doctest::Approx(anchor * std::abs(base.loadings(k, n))).epsilon(5e-3));
    }
  }

  const Mask mask_a = correlate(parafac2_sources(base, 1), 0.05).significant;
  const Mask mask_b = correlate(parafac2_sources(alt, 1), 0.05).significant;
  CHECK((mask_a == mask_b).all());

  // The invariance also holds through noise at the mask level.
  oracle::ExactParafac2Data noisy = oracle::exact_parafac2(4, 24, 48, 2, 416);
  for (auto& slice : noisy.slices) {
    slice += 0.05 * oracle::random_matrix(slice.rows(), slice.cols(), 417);
  }
  std::vector<Eigen::MatrixXd> noisy_scaled = noisy.slices;
  noisy_scaled[2] *= 2.0;
  const Mask mask_c =
      correlate(parafac2_sources(parafac2_als(noisy.slices, 2, {}), 1), 0.05).significant;
  const Mask mask_d =
      correlate(parafac2_sources(parafac2_als(noisy_scaled, 2, {}), 1), 0.05).significant;
  CHECK((mask_c == mask_d).all());
}

TEST_CASE("component index is validated") {
  const oracle::ExactParafac2Data data = oracle::exact_parafac2(3, 20, 30, 2, 417);
  const Parafac2Result result = parafac2_als(data.slices, 2, {});
  for (Index bad : {Index{0}, Index{3}}) {
    try {
      parafac2_sources(result, bad);
      FAIL("expected IndexOutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IndexOutOfRange);
    }
  }
}
