#include "trojatensor/iva.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "trojatensor/error.hpp"
#include "trojatensor/rng.hpp"

namespace trojatensor {

namespace {

constexpr double kCovRidge = 1e-9;
constexpr double kEigenFloor = 1e-12;
constexpr double kMaxCondition = 1e12;

double log_abs_det(const Eigen::MatrixXd& m) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  double acc = 0.0;
  for (Index i = 0; i < m.rows(); ++i) acc += std::log(std::abs(lu.matrixLU()(i, i)));
  return acc;
}

// log det of a symmetric PSD matrix with an eigenvalue floor, so that
// degenerate SCV covariances (perfectly dependent sources) stay finite.
double log_det_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  double acc = 0.0;
  for (Index i = 0; i < m.rows(); ++i) acc += std::log(std::max(eig.eigenvalues()(i), kEigenFloor));
  return acc;
}

// Unit vector orthogonal to every row of W except row n.
Eigen::VectorXd decoupling_direction(const Eigen::MatrixXd& w, Index n) {
  const Index order = w.rows();
  if (order == 1) return Eigen::VectorXd::Ones(1);
  Eigen::MatrixXd others(order, order - 1);
  Index col = 0;
  for (Index i = 0; i < order; ++i) {
    if (i != n) others.col(col++) = w.row(i).transpose();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(others);
  const Eigen::MatrixXd q = qr.householderQ();
  return q.col(order - 1);
}

Eigen::LLT<Eigen::MatrixXd> ridge_llt(Eigen::MatrixXd m) {
  double ridge = kCovRidge;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd shifted = m;
    shifted.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) return llt;
    ridge *= 1e3;
  }
  raise(ErrorCode::SingularDemixing, "SCV covariance is not positive definite");
}

struct State {
  Index datasets = 0;   // K
  Index order = 0;      // N
  Index samples = 0;    // R
  std::vector<Eigen::MatrixXd> demixing;                 // W^[k]
  std::vector<std::vector<Eigen::MatrixXd>> cross_cov;   // R_kl = Xc_k Xc_l^T / (R-1)
  std::vector<Eigen::MatrixXd> scv_cov;                  // per source, K x K
};

double total_cost(const State& s) {
  double cost = 0.0;
  for (const Eigen::MatrixXd& sigma : s.scv_cov) cost += 0.5 * log_det_psd(sigma);
  for (const Eigen::MatrixXd& w : s.demixing) cost -= log_abs_det(w);
  return cost;
}

void refresh_scv_cov(State& s) {
  for (Index n = 0; n < s.order; ++n) {
    Eigen::MatrixXd& sigma = s.scv_cov[n];
    for (Index k = 0; k < s.datasets; ++k) {
      for (Index l = k; l < s.datasets; ++l) {
        const double value =
            s.demixing[k].row(n) * s.cross_cov[k][l] * s.demixing[l].row(n).transpose();
        sigma(k, l) = value;
        sigma(l, k) = value;
      }
    }
  }
}

// Scales row n of W^[k] to unit sample source variance.
void normalize_row(State& s, Index k, Index n) {
  const double variance = s.demixing[k].row(n) * s.cross_cov[k][k] * s.demixing[k].row(n).transpose();
  if (variance > 0.0 && std::isfinite(variance)) {
    s.demixing[k].row(n) /= std::sqrt(variance);
  }
}

// One decoupled update of row (n, k). Restricted cost along this row is
// 0.5 log(w^T G w) - log|w^T h| + const, minimized exactly by w = G^{-1} h.
void update_row(State& s, Index n, Index k) {
  const Index count = s.datasets;
  const Eigen::MatrixXd& r_kk = s.cross_cov[k][k];

  Eigen::MatrixXd partners(s.order, count - 1);  // columns R_kl w_n^[l], l != k
  Eigen::MatrixXd sigma_rest(count - 1, count - 1);
  {
    Index col = 0;
    for (Index l = 0; l < count; ++l) {
      if (l == k) continue;
      partners.col(col) = s.cross_cov[k][l] * s.demixing[l].row(n).transpose();
      Index row = 0;
      for (Index m = 0; m < count; ++m) {
        if (m == k) continue;
        sigma_rest(row, col) = s.scv_cov[n](m, l);
        ++row;
      }
      ++col;
    }
  }

  const Eigen::LLT<Eigen::MatrixXd> llt = ridge_llt(sigma_rest);
  Eigen::MatrixXd conditional = r_kk - partners * llt.solve(partners.transpose());
  conditional = 0.5 * (conditional + conditional.transpose()).eval();

  const Eigen::VectorXd direction = decoupling_direction(s.demixing[k], n);
  double ridge = std::max(conditional.trace(), 1.0) * 1e-13;
  Eigen::VectorXd candidate;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd shifted = conditional;
    shifted.diagonal().array() += (attempt == 0 ? 0.0 : ridge);
    Eigen::LLT<Eigen::MatrixXd> solver(shifted);
    if (solver.info() == Eigen::Success) {
      candidate = solver.solve(direction);
      break;
    }
    if (attempt >= 6) return;  // keep the old row
    ridge *= 1e3;
  }

  const auto restricted_cost = [&](const Eigen::VectorXd& w) {
    const double quad = w.dot(conditional * w);
    const double align = std::abs(w.dot(direction));
    if (quad <= 0.0 || align <= 0.0 || !std::isfinite(quad)) {
      return std::numeric_limits<double>::infinity();
    }
    return 0.5 * std::log(quad) - std::log(align);
  };

  const auto to_unit_variance = [&](Eigen::VectorXd w) -> Eigen::VectorXd {
    const double variance = w.dot(r_kk * w);
    if (variance > 0.0 && std::isfinite(variance)) w /= std::sqrt(variance);
    return w;
  };

  const Eigen::VectorXd old_row = s.demixing[k].row(n).transpose();
  Eigen::VectorXd next = to_unit_variance(candidate);
  const double old_cost = restricted_cost(old_row);

  if (restricted_cost(next) > old_cost) {
    // Newton point did not improve in finite precision: backtrack toward the
    // previous row and keep it if nothing on the segment helps.
    double step = 0.5;
    bool improved = false;
    for (int attempt = 0; attempt < 8; ++attempt, step *= 0.5) {
      Eigen::VectorXd blended = to_unit_variance(old_row + step * (next - old_row));
      if (restricted_cost(blended) <= old_cost) {
        next = std::move(blended);
        improved = true;
        break;
      }
    }
    if (!improved) return;
  }

  s.demixing[k].row(n) = next.transpose();

  // Only row/column k of SCV n's covariance changed.
  Index col = 0;
  for (Index l = 0; l < count; ++l) {
    if (l == k) continue;
    const double value = next.dot(partners.col(col));
    s.scv_cov[n](k, l) = value;
    s.scv_cov[n](l, k) = value;
    ++col;
  }
  s.scv_cov[n](k, k) = next.dot(r_kk * next);
}

}  // namespace

IvaResult iva_decompose(const std::vector<Eigen::MatrixXd>& datasets, const IvaOptions& opts) {
  const Index count = static_cast<Index>(datasets.size());
  if (count < 2) {
    raise(ErrorCode::PreconditionViolation,
          "IVA needs at least 2 datasets, got " + std::to_string(count));
  }
  const Index order = datasets.front().rows();
  const Index samples = datasets.front().cols();
  for (const Eigen::MatrixXd& x : datasets) {
    if (x.rows() != order || x.cols() != samples) {
      raise(ErrorCode::ShapeMismatch, "all datasets must share the same N x R shape");
    }
  }
  if (order < 1 || samples <= order) {
    raise(ErrorCode::PreconditionViolation, "IVA needs R > N >= 1");
  }

  State s;
  s.datasets = count;
  s.order = order;
  s.samples = samples;

  // Covariances over the sample axis, computed on row-centered data.
  std::vector<Eigen::MatrixXd> centered(count);
  for (Index k = 0; k < count; ++k) {
    centered[k] = datasets[k].colwise() - datasets[k].rowwise().mean().eval();
  }
  const double denom = static_cast<double>(samples - 1);
  s.cross_cov.assign(count, std::vector<Eigen::MatrixXd>(count));
  for (Index k = 0; k < count; ++k) {
    for (Index l = k; l < count; ++l) {
      s.cross_cov[k][l] = centered[k] * centered[l].transpose() / denom;
      if (l != k) s.cross_cov[l][k] = s.cross_cov[k][l].transpose();
    }
  }

  s.demixing.resize(count);
  for (Index k = 0; k < count; ++k) {
    CounterRng rng(derive_key(derive_key(opts.seed, "iva.init"), static_cast<std::uint64_t>(k)));
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(order, order);
    for (Index i = 0; i < order; ++i) {
      for (Index j = 0; j < order; ++j) w(i, j) += 1e-3 * rng.next_normal();
    }
    s.demixing[k] = std::move(w);
    for (Index n = 0; n < order; ++n) normalize_row(s, k, n);
  }

  s.scv_cov.assign(order, Eigen::MatrixXd::Zero(count, count));
  refresh_scv_cov(s);

  IvaResult result;
  result.cost_trace.reserve(64);
  result.converged = false;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const std::vector<Eigen::MatrixXd> previous = s.demixing;
    for (Index n = 0; n < order; ++n) {
      for (Index k = 0; k < count; ++k) update_row(s, n, k);
    }
    result.cost_trace.push_back(total_cost(s));
    result.iterations = iter + 1;

    double delta = 0.0;
    for (Index k = 0; k < count; ++k) {
      const double base = previous[k].norm();
      if (base > 0.0) delta = std::max(delta, (s.demixing[k] - previous[k]).norm() / base);
    }
    if (delta < opts.tol) {
      result.converged = true;
      break;
    }
  }

  // Exact unit sample variance on the returned sources.
  result.demixing = std::move(s.demixing);
  result.sources.resize(count);
  result.mixing_est.resize(count);
  for (Index k = 0; k < count; ++k) {
    Eigen::MatrixXd source = result.demixing[k] * datasets[k];
    for (Index n = 0; n < order; ++n) {
      Eigen::VectorXd row = source.row(n).transpose();
      const double mean = row.mean();
      const double variance = (row.array() - mean).matrix().squaredNorm() / denom;
      if (variance > 0.0 && std::isfinite(variance)) {
        const double scale = 1.0 / std::sqrt(variance);
        source.row(n) *= scale;
        result.demixing[k].row(n) *= scale;
      }
    }
    result.sources[k] = std::move(source);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(result.demixing[k]);
    const double smallest = svd.singularValues()(order - 1);
    if (smallest <= 0.0 || svd.singularValues()(0) / smallest > kMaxCondition) {
      raise(ErrorCode::SingularDemixing,
            "demixing matrix of dataset " + std::to_string(k) + " is numerically singular");
    }
    result.mixing_est[k] = result.demixing[k].inverse();
  }

  // Correlation strength per SCV, for the ordering contract.
  std::vector<Eigen::MatrixXd> final_demixing_cov(order, Eigen::MatrixXd::Zero(count, count));
  {
    State final_state;
    final_state.datasets = count;
    final_state.order = order;
    final_state.demixing = result.demixing;
    final_state.cross_cov = std::move(s.cross_cov);
    final_state.scv_cov.assign(order, Eigen::MatrixXd::Zero(count, count));
    refresh_scv_cov(final_state);
    result.mean_abs_corr.assign(order, 0.0);
    for (Index n = 0; n < order; ++n) {
      const Eigen::MatrixXd& sigma = final_state.scv_cov[n];
      double acc = 0.0;
      Index pairs = 0;
      for (Index k = 0; k < count; ++k) {
        for (Index l = k + 1; l < count; ++l) {
          const double scale = std::sqrt(std::max(sigma(k, k) * sigma(l, l), kEigenFloor));
          acc += std::abs(sigma(k, l)) / scale;
          ++pairs;
        }
      }
      result.mean_abs_corr[n] = pairs > 0 ? acc / static_cast<double>(pairs) : 0.0;
    }
  }

  result.scv_order.resize(order);
  std::iota(result.scv_order.begin(), result.scv_order.end(), Index{0});
  std::stable_sort(result.scv_order.begin(), result.scv_order.end(), [&](Index a, Index b) {
    return result.mean_abs_corr[a] > result.mean_abs_corr[b];
  });

  return result;
}

ScvBundle extract_scv(const IvaResult& result, Index n) {
  const Index order = result.order();
  if (n < 1 || n > order) {
    raise(ErrorCode::IndexOutOfRange,
          "SCV index " + std::to_string(n) + " outside 1.." + std::to_string(order));
  }
  ScvBundle bundle;
  bundle.index = n;
  bundle.source_index = result.scv_order[static_cast<std::size_t>(n - 1)];
  bundle.mean_abs_corr = result.mean_abs_corr[static_cast<std::size_t>(bundle.source_index)];
  bundle.rows.reserve(result.sources.size());
  for (const Eigen::MatrixXd& source : result.sources) {
    bundle.rows.push_back(source.row(bundle.source_index).transpose());
  }
  return bundle;
}

std::vector<Eigen::MatrixXd> reconstruct_mixing(const IvaResult& result,
                                                const std::vector<PcaReduction>& reductions) {
  if (reductions.size() != result.mixing_est.size()) {
    raise(ErrorCode::ShapeMismatch,
          "got " + std::to_string(reductions.size()) + " reductions for " +
              std::to_string(result.mixing_est.size()) + " datasets");
  }
  std::vector<Eigen::MatrixXd> mixing;
  mixing.reserve(reductions.size());
  for (std::size_t k = 0; k < reductions.size(); ++k) {
    const Eigen::MatrixXd& reduction = reductions[k].reduction_matrix;  // N x MC
    if (reduction.rows() != result.order()) {
      raise(ErrorCode::ShapeMismatch,
            "reduction " + std::to_string(k) + " has order " + std::to_string(reduction.rows()) +
                ", decomposition has " + std::to_string(result.order()));
    }
    if (reduction.rows() == reduction.cols()) {
      mixing.push_back(reduction.inverse() * result.mixing_est[k]);
    } else {
      const Eigen::MatrixXd pinv =
          reduction.completeOrthogonalDecomposition().pseudoInverse();  // MC x N
      mixing.push_back(pinv * result.mixing_est[k]);
    }
  }
  return mixing;
}

}  // namespace trojatensor
