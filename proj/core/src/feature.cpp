#include "trojatensor/feature.hpp"

#include <cmath>

#include "trojatensor/error.hpp"
#include "trojatensor/rng.hpp"

namespace trojatensor {

void RpConfig::validate() const {
  if (target_dim < 1) {
    raise(ErrorCode::PreconditionViolation, "projection dimension R must be >= 1");
  }
}

Eigen::MatrixXd flatten_order(const ActivationSet& set) {
  if (static_cast<std::size_t>(set.value_count()) != set.values.size()) {
    raise(ErrorCode::ShapeMismatch,
          "activation set '" + set.model_id + "' storage does not match its shape");
  }
  const Index rows = set.exemplars * set.classes;
  Eigen::MatrixXd flat(rows, set.width);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < set.width; ++j) {
      flat(i, j) = static_cast<double>(set.values[static_cast<std::size_t>(i * set.width + j)]);
    }
  }
  return flat;
}

namespace {

std::uint64_t projection_row_key(const RpConfig& cfg, Index row) {
  std::uint64_t key = derive_key(cfg.seed, "rp.rows");
  key = derive_key(key, static_cast<std::uint64_t>(cfg.scheme));
  key = derive_key(key, static_cast<std::uint64_t>(cfg.target_dim));
  if (!cfg.shared_rows) {
    key = derive_key(key, "per-model");
    key = derive_key(key, static_cast<std::uint64_t>(cfg.model_index));
  }
  return derive_key(key, static_cast<std::uint64_t>(row));
}

}  // namespace

Eigen::MatrixXd projection_operator(Index width, const RpConfig& cfg) {
  cfg.validate();
  const Index R = cfg.target_dim;
  const double inv_sqrt_r = 1.0 / std::sqrt(static_cast<double>(R));
  Eigen::MatrixXd op(width, R);
  for (Index j = 0; j < width; ++j) {
    CounterRng rng(projection_row_key(cfg, j));
    if (cfg.scheme == RpScheme::Gaussian) {
      for (Index r = 0; r < R; ++r) op(j, r) = rng.next_normal() * inv_sqrt_r;
    } else {
      const double magnitude = std::sqrt(3.0) * inv_sqrt_r;
      for (Index r = 0; r < R; ++r) {
        const double u = rng.next_uniform();
        op(j, r) = u < 1.0 / 6.0 ? magnitude : (u >= 5.0 / 6.0 ? -magnitude : 0.0);
      }
    }
  }
  return op;
}

FeatureMatrix project(const ActivationSet& set, const RpConfig& cfg) {
  const Eigen::MatrixXd flat = flatten_order(set);
  FeatureMatrix features;
  features.model_id = set.model_id;
  features.source_dim = set.width;
  features.data = flat * projection_operator(set.width, cfg);
  return features;
}

void center_columns(Eigen::MatrixXd& m) {
  if (m.rows() == 0) return;
  m.rowwise() -= m.colwise().mean();
}

void standardize_columns(Eigen::MatrixXd& m) {
  if (m.rows() < 2) return;
  center_columns(m);
  const double denom = static_cast<double>(m.rows() - 1);
  for (Index c = 0; c < m.cols(); ++c) {
    const double variance = m.col(c).squaredNorm() / denom;
    if (variance > 1e-24) m.col(c) /= std::sqrt(variance);
  }
}

}  // namespace trojatensor
