#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "trojatensor/error.hpp"
#include "trojatensor/iva.hpp"
#include "trojatensor/stats.hpp"

using namespace trojatensor;

TEST_CASE("identical datasets give a perfectly correlated top SCV") {
  const Index order = 4, samples = 400;
  const Eigen::MatrixXd shared = oracle::random_matrix(order, samples, 301);
  const std::vector<Eigen::MatrixXd> datasets{shared, shared};

  const IvaResult result = iva_decompose(datasets, {});
  CHECK(result.mean_abs_corr[result.scv_order[0]] >= 0.99);
}

TEST_CASE("a single dataset violates the precondition") {
  const std::vector<Eigen::MatrixXd> datasets{oracle::random_matrix(3, 50, 302)};
  try {
    iva_decompose(datasets, {});
    FAIL("expected PreconditionViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PreconditionViolation);
  }
}

TEST_CASE("mismatched dataset shapes are rejected") {
  const std::vector<Eigen::MatrixXd> datasets{oracle::random_matrix(3, 50, 303),
                                              oracle::random_matrix(4, 50, 304)};
  CHECK_THROWS_AS(iva_decompose(datasets, {}), Error);
}

TEST_CASE("planted SCVs are recovered with low joint ISI") {
  const Index count = 3, order = 3, samples = 1000;
  const oracle::PlantedScvData data =
      oracle::planted_scv(count, order, samples, {0.9, 0.75, 0.6}, 305);

  IvaOptions opts;
  opts.seed = 1;
  const IvaResult result = iva_decompose(data.datasets, opts);
  CHECK(oracle::joint_isi(result.demixing, data.mixing) <= 0.05);
  CHECK(result.mean_abs_corr[result.scv_order[0]] >= 0.8);
}

TEST_CASE("cost trace is non-increasing") {
  const oracle::PlantedScvData data = oracle::planted_scv(3, 4, 600, {0.9, 0.8, 0.7, 0.5}, 306);
  const IvaResult result = iva_decompose(data.datasets, {});
  REQUIRE(result.cost_trace.size() >= 2);
  for (std::size_t i = 1; i < result.cost_trace.size(); ++i) {
    CHECK(result.cost_trace[i] <= result.cost_trace[i - 1] + 1e-10);
  }
}

TEST_CASE("sources come back with unit sample variance") {
  const oracle::PlantedScvData data = oracle::planted_scv(3, 3, 500, {0.85, 0.7, 0.55}, 307);
  const IvaResult result = iva_decompose(data.datasets, {});
  for (const Eigen::MatrixXd& source : result.sources) {
    for (Index n = 0; n < source.rows(); ++n) {
      const double mean = source.row(n).mean();
      const double variance =
          (source.row(n).array() - mean).matrix().squaredNorm() / (source.cols() - 1.0);
      CHECK(variance == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("extract_scv returns the most correlated source first") {
  // Planted correlations (0.1, 0.9, 0.4): the ranked SCV 1 must be the
  // source matching the 0.9 latent, identified against the construction.
  const Index count = 2, order = 3, samples = 4000;
  const oracle::PlantedScvData data =
      oracle::planted_scv(count, order, samples, {0.1, 0.9, 0.4}, 308);

  const IvaResult result = iva_decompose(data.datasets, {});
  const ScvBundle top = extract_scv(result, 1);
  REQUIRE(top.rows.size() == 2);

  // The recovered top source must align with true source row 1 (rho = 0.9).
  double best = 0.0;
  Index best_row = -1;
  for (Index n = 0; n < order; ++n) {
    const double r = std::abs(
        oracle::pearson(top.rows[0], data.sources[0].row(n).transpose()));
    if (r > best) {
      best = r;
      best_row = n;
    }
  }
  CHECK(best_row == 1);
  CHECK(best > 0.9);

  // Ordering postcondition: ranked mean |r| is non-increasing.
  for (Index n = 1; n < order; ++n) {
    CHECK(result.mean_abs_corr[result.scv_order[n - 1]] >=
          result.mean_abs_corr[result.scv_order[n]]);
  }
}

TEST_CASE("extract_scv rejects out-of-range indices") {
  const oracle::PlantedScvData data = oracle::planted_scv(2, 3, 300, {0.8, 0.6, 0.4}, 309);
  const IvaResult result = iva_decompose(data.datasets, {});
  for (Index bad : {Index{0}, Index{4}}) {
    try {
      extract_scv(result, bad);
      FAIL("expected IndexOutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IndexOutOfRange);
    }
  }
}

TEST_CASE("identifiability: demixing times true mixing is a scaled permutation") {
  const Index count = 2, order = 2, samples = 5000;
  const oracle::PlantedScvData data = oracle::planted_scv(count, order, samples, {0.9, 0.3}, 310);
  const IvaResult result = iva_decompose(data.datasets, {});
  for (Index k = 0; k < count; ++k) {
    const Eigen::MatrixXd gain = (result.demixing[k] * data.mixing[k]).cwiseAbs();
    for (Index i = 0; i < order; ++i) {
      const double dominant = gain.row(i).maxCoeff();
      for (Index j = 0; j < order; ++j) {
        if (gain(i, j) < dominant) CHECK(gain(i, j) <= 0.1 * dominant);
      }
    }
  }
}

TEST_CASE("reconstruct_mixing with identity reduction returns the estimated mixing") {
  const oracle::PlantedScvData data = oracle::planted_scv(2, 3, 400, {0.9, 0.7, 0.5}, 311);
  const IvaResult result = iva_decompose(data.datasets, {});

  std::vector<PcaReduction> reductions(2);
  for (auto& reduction : reductions) {
    reduction.reduction_matrix = Eigen::MatrixXd::Identity(3, 3);
    reduction.row_means = Eigen::VectorXd::Zero(3);
  }
  const std::vector<Eigen::MatrixXd> mixing = reconstruct_mixing(result, reductions);
  for (Index k = 0; k < 2; ++k) {
    CHECK((mixing[k] - result.mixing_est[k]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reconstruction residual is tiny") {
  const oracle::PlantedScvData data = oracle::planted_scv(3, 3, 500, {0.9, 0.7, 0.5}, 312);
  const IvaResult result = iva_decompose(data.datasets, {});
  for (Index k = 0; k < 3; ++k) {
    const Eigen::MatrixXd rebuilt = result.mixing_est[k] * result.sources[k];
    CHECK((data.datasets[k] - rebuilt).norm() / data.datasets[k].norm() <= 1e-6);
  }
}

TEST_CASE("reconstruct_mixing rejects mismatched reductions") {
  const oracle::PlantedScvData data = oracle::planted_scv(2, 3, 300, {0.8, 0.6, 0.4}, 313);
  const IvaResult result = iva_decompose(data.datasets, {});

  SUBCASE("wrong count") {
    std::vector<PcaReduction> reductions(1);
    reductions[0].reduction_matrix = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(reconstruct_mixing(result, reductions), Error);
  }
  SUBCASE("wrong order") {
    std::vector<PcaReduction> reductions(2);
    for (auto& reduction : reductions) {
      reduction.reduction_matrix = Eigen::MatrixXd::Identity(4, 4);
    }
    try {
      reconstruct_mixing(result, reductions);
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
  }
}

TEST_CASE("scaling a dataset leaves ordering and significance unchanged") {
  const Index count = 3, order = 3, samples = 800;
  const oracle::PlantedScvData data =
      oracle::planted_scv(count, order, samples, {0.9, 0.6, 0.3}, 314);

  const IvaResult base = iva_decompose(data.datasets, {});
  std::vector<Eigen::MatrixXd> scaled = data.datasets;
  scaled[1] *= 3.7;
  const IvaResult alt = iva_decompose(scaled, {});

  CHECK(base.scv_order == alt.scv_order);

  const auto mask_of = [](const IvaResult& result) {
    const ScvBundle top = extract_scv(result, 1);
    return correlate(top.rows, 0.05).significant;
  };
  const Mask mask_a = mask_of(base);
  const Mask mask_b = mask_of(alt);
  CHECK((mask_a == mask_b).all());
}
