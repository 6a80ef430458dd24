#include "trojatensor/parafac2.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "trojatensor/error.hpp"
#include "trojatensor/parallel.hpp"
#include "trojatensor/rng.hpp"

namespace trojatensor {

namespace {

// Solve X * gram = rhs for X with a symmetric positive semidefinite gram,
// escalating a ridge until the factorization succeeds.
Eigen::MatrixXd solve_against_gram(const Eigen::MatrixXd& rhs, Eigen::MatrixXd gram) {
  double ridge = std::max(gram.trace() / static_cast<double>(gram.rows()), 1.0) * 1e-12;
  for (int attempt = 0;; ++attempt) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      return ldlt.solve(rhs.transpose()).transpose();
    }
    if (attempt >= 6) {
      raise(ErrorCode::SingularDemixing, "PARAFAC2 normal equations are singular");
    }
    gram.diagonal().array() += ridge;
    ridge *= 1e3;
  }
}

// Orthogonal Procrustes: the P (R x N, column-orthonormal) maximizing
// tr(P^T C^T) for C (N x R), via the SVD of C^T.
Eigen::MatrixXd procrustes(const Eigen::MatrixXd& c) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

Parafac2Result parafac2_als(const std::vector<Eigen::MatrixXd>& slices, Index rank,
                            const Parafac2Options& opts) {
  const Index count = static_cast<Index>(slices.size());
  if (count < 2) {
    raise(ErrorCode::PreconditionViolation,
          "PARAFAC2 needs at least 2 slices, got " + std::to_string(count));
  }
  const Index rows = slices.front().rows();  // MC
  const Index cols = slices.front().cols();  // R
  for (const Eigen::MatrixXd& b : slices) {
    if (b.rows() != rows || b.cols() != cols) {
      raise(ErrorCode::ShapeMismatch, "all slices must share the same MC x R shape");
    }
  }
  if (rank < 1 || rank > std::min(rows, cols)) {
    raise(ErrorCode::RankTooLarge,
          "rank " + std::to_string(rank) + " outside 1..min(MC=" + std::to_string(rows) +
              ", R=" + std::to_string(cols) + ")");
  }

  double total_ssq = 0.0;
  std::vector<double> slice_ssq(count);
  for (Index k = 0; k < count; ++k) {
    slice_ssq[k] = slices[k].squaredNorm();
    if (slice_ssq[k] <= 0.0) {
      raise(ErrorCode::DegenerateSlice, "slice " + std::to_string(k) + " has zero Frobenius norm");
    }
    total_ssq += slice_ssq[k];
  }

  // Shared factor from the leading eigenvectors of the summed slice Gram
  // (the left singular basis of the column-concatenated slices).
  Eigen::MatrixXd shared;
  {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(rows, rows);
    for (const Eigen::MatrixXd& b : slices) gram.selfadjointView<Eigen::Lower>().rankUpdate(b);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    shared.resize(rows, rank);
    const Index top = eig.eigenvalues().size() - 1;
    const double cutoff = std::max(eig.eigenvalues()(top), 0.0) * 1e-12;
    CounterRng rng(derive_key(opts.seed, "pf2.init"));
    for (Index n = 0; n < rank; ++n) {
      const Index at = top - n;
      if (at >= 0 && eig.eigenvalues()(at) > cutoff) {
        shared.col(n) = eig.eigenvectors().col(at);
      } else {
        for (Index i = 0; i < rows; ++i) shared(i, n) = rng.next_normal();
      }
    }
    // Re-orthonormalize in case random columns filled a rank-deficient basis.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(shared);
    shared = qr.householderQ() * Eigen::MatrixXd::Identity(rows, rank);
  }

  Eigen::MatrixXd profile = Eigen::MatrixXd::Identity(rank, rank);  // H
  Eigen::MatrixXd loadings = Eigen::MatrixXd::Ones(count, rank);    // Sigma rows

  std::vector<Eigen::MatrixXd> bases(count);      // P^[k]
  std::vector<Eigen::MatrixXd> projected(count);  // Y^[k] = B^[k] P^[k]

  const auto procrustes_pass = [&] {
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t k) {
      const Eigen::MatrixXd target = profile * loadings.row(k).asDiagonal() *
                                     (shared.transpose() * slices[k]);  // N x R
      bases[k] = procrustes(target);
      projected[k] = slices[k] * bases[k];
    });
  };

  procrustes_pass();

  Parafac2Result result;
  result.fit_trace.reserve(64);
  double previous_fit = -1.0;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    procrustes_pass();

    // One CP-ALS sweep over the projected slices Y^[k] ~ A diag(sigma_k) H^T.
    const Eigen::MatrixXd load_gram = loadings.transpose() * loadings;  // sum sigma sigma^T
    {
      Eigen::MatrixXd numerator = Eigen::MatrixXd::Zero(rows, rank);
      for (Index k = 0; k < count; ++k) {
        numerator.noalias() += projected[k] * profile * loadings.row(k).asDiagonal();
      }
      shared = solve_against_gram(
          numerator, (profile.transpose() * profile).cwiseProduct(load_gram));
    }
    {
      Eigen::MatrixXd numerator = Eigen::MatrixXd::Zero(rank, rank);
      for (Index k = 0; k < count; ++k) {
        numerator.noalias() += projected[k].transpose() * shared * loadings.row(k).asDiagonal();
      }
      profile = solve_against_gram(
          numerator, (shared.transpose() * shared).cwiseProduct(load_gram));
    }
    const Eigen::MatrixXd shared_gram = shared.transpose() * shared;
    const Eigen::MatrixXd profile_gram = profile.transpose() * profile;
    const Eigen::MatrixXd sigma_gram = shared_gram.cwiseProduct(profile_gram);
    Eigen::LDLT<Eigen::MatrixXd> sigma_solver(sigma_gram);
    const bool sigma_ok = sigma_solver.info() == Eigen::Success && sigma_solver.isPositive();
    for (Index k = 0; k < count; ++k) {
      const Eigen::MatrixXd inner = shared.transpose() * projected[k];  // N x N
      Eigen::VectorXd rhs(rank);
      for (Index n = 0; n < rank; ++n) rhs(n) = inner.row(n).dot(profile.col(n));
      if (sigma_ok) {
        loadings.row(k) = sigma_solver.solve(rhs).transpose();
      } else {
        loadings.row(k) =
            solve_against_gram(rhs.transpose(), sigma_gram);
      }
    }

    // Fit from the split ||B - M P^T||^2 = ||B||^2 - 2<M, BP> + ||M||^2.
    double sse = 0.0;
    for (Index k = 0; k < count; ++k) {
      const Eigen::MatrixXd inner = shared.transpose() * projected[k];  // N x N
      double cross = 0.0;
      for (Index n = 0; n < rank; ++n) cross += loadings(k, n) * inner.row(n).dot(profile.col(n));
      const double model_ssq =
          loadings.row(k) * sigma_gram * loadings.row(k).transpose();
      sse += slice_ssq[k] - 2.0 * cross + model_ssq;
    }
    const double fit = 1.0 - sse / total_ssq;
    result.fit_trace.push_back(fit);
    result.iterations = iter + 1;

    if (iter > 0 && std::abs(fit - previous_fit) < opts.tol) {
      result.converged = true;
      previous_fit = fit;
      break;
    }
    previous_fit = fit;
  }

  // Normalize factor columns, absorb magnitudes into the loadings, fix signs
  // on the shared factor, and order components by loading-column norm.
  for (Index n = 0; n < rank; ++n) {
    const double a_norm = shared.col(n).norm();
    const double h_norm = profile.col(n).norm();
    if (a_norm > 0.0) shared.col(n) /= a_norm;
    if (h_norm > 0.0) profile.col(n) /= h_norm;
    loadings.col(n) *= a_norm * h_norm;

    Index peak = 0;
    shared.col(n).cwiseAbs().maxCoeff(&peak);
    if (shared(peak, n) < 0.0) {
      shared.col(n) *= -1.0;
      profile.col(n) *= -1.0;
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(rank));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return loadings.col(a).norm() > loadings.col(b).norm();
  });
  {
    Eigen::MatrixXd shared_sorted(rows, rank);
    Eigen::MatrixXd profile_sorted(rank, rank);
    Eigen::MatrixXd loadings_sorted(count, rank);
    for (Index n = 0; n < rank; ++n) {
      shared_sorted.col(n) = shared.col(order[static_cast<std::size_t>(n)]);
      profile_sorted.col(n) = profile.col(order[static_cast<std::size_t>(n)]);
      loadings_sorted.col(n) = loadings.col(order[static_cast<std::size_t>(n)]);
    }
    shared = std::move(shared_sorted);
    profile = std::move(profile_sorted);
    loadings = std::move(loadings_sorted);
  }

  procrustes_pass();  // refresh bases for the finalized factors

  result.shared_factor = std::move(shared);
  result.common_profile = profile;
  result.loadings = std::move(loadings);
  result.cross_product = profile.transpose() * profile;
  result.orthobases = bases;
  result.sources.resize(count);
  for (Index k = 0; k < count; ++k) result.sources[k] = bases[k] * profile;
  result.fit = result.fit_trace.empty() ? 0.0 : result.fit_trace.back();
  return result;
}

std::vector<Eigen::VectorXd> parafac2_sources(const Parafac2Result& result, Index n) {
  if (n < 1 || n > result.rank()) {
    raise(ErrorCode::IndexOutOfRange,
          "component " + std::to_string(n) + " outside 1.." + std::to_string(result.rank()));
  }
  std::vector<Eigen::VectorXd> columns;
  columns.reserve(result.sources.size());
  for (const Eigen::MatrixXd& source : result.sources) {
    columns.push_back(source.col(n - 1));
  }
  return columns;
}

}  // namespace trojatensor
