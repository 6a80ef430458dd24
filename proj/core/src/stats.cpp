#include "trojatensor/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "trojatensor/error.hpp"

namespace trojatensor {

Eigen::MatrixXd correlation_matrix(const std::vector<Eigen::VectorXd>& vectors,
                                   const std::vector<std::string>& ids) {
  const Index count = static_cast<Index>(vectors.size());
  if (count < 2) {
    raise(ErrorCode::PreconditionViolation, "correlation needs at least 2 vectors");
  }
  const Index length = vectors.front().size();
  if (length < 3) {
    raise(ErrorCode::PreconditionViolation, "correlation needs vectors of length >= 3");
  }

  const auto name_of = [&](Index k) {
    return k < static_cast<Index>(ids.size()) ? ids[static_cast<std::size_t>(k)]
                                              : "#" + std::to_string(k);
  };

  std::vector<Eigen::VectorXd> centered(static_cast<std::size_t>(count));
  std::vector<double> norms(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    const Eigen::VectorXd& v = vectors[static_cast<std::size_t>(k)];
    if (v.size() != length) {
      raise(ErrorCode::ShapeMismatch, "vector '" + name_of(k) + "' has mismatched length");
    }
    Eigen::VectorXd c = v.array() - v.mean();
    const double norm = c.norm();
    if (norm <= 0.0 || !std::isfinite(norm)) {
      raise(ErrorCode::ZeroVariance, "model '" + name_of(k) + "' has a zero-variance source");
    }
    centered[static_cast<std::size_t>(k)] = std::move(c);
    norms[static_cast<std::size_t>(k)] = norm;
  }

  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(count, count);
  for (Index i = 0; i < count; ++i) {
    for (Index j = i + 1; j < count; ++j) {
      const double value = centered[static_cast<std::size_t>(i)].dot(
                               centered[static_cast<std::size_t>(j)]) /
                           (norms[static_cast<std::size_t>(i)] * norms[static_cast<std::size_t>(j)]);
      r(i, j) = value;
      r(j, i) = value;
    }
  }
  return r;
}

Eigen::MatrixXd correlation_significance(const Eigen::MatrixXd& r, Index sample_size) {
  if (r.rows() != r.cols()) {
    raise(ErrorCode::ShapeMismatch, "correlation matrix must be square");
  }
  if (sample_size <= 2) {
    raise(ErrorCode::PreconditionViolation, "significance needs sample size > 2");
  }
  const double df = static_cast<double>(sample_size - 2);
  const boost::math::students_t_distribution<double> dist(df);

  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(r.rows(), r.cols());
  for (Index i = 0; i < r.rows(); ++i) {
    for (Index j = i + 1; j < r.cols(); ++j) {
      const double rho = std::clamp(r(i, j), -1.0, 1.0);
      double value;
      if (std::abs(rho) >= 1.0) {
        value = 0.0;
      } else {
        const double t = rho * std::sqrt(df / (1.0 - rho * rho));
        value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
      }
      p(i, j) = value;
      p(j, i) = value;
    }
  }
  return p;
}

BonferroniResult bonferroni_adjust(const Eigen::MatrixXd& p_raw, double alpha,
                                   BonferroniScope scope) {
  const Index count = p_raw.rows();
  if (p_raw.cols() != count) {
    raise(ErrorCode::ShapeMismatch, "p-value matrix must be square");
  }
  BonferroniResult out;
  out.m = scope == BonferroniScope::AllPairs ? count * (count - 1) / 2 : count - 1;
  out.m = std::max<Index>(out.m, 1);
  out.p_adj = (p_raw.array() * static_cast<double>(out.m)).min(1.0).matrix();
  out.p_adj.diagonal().setZero();
  out.significant = Mask::Constant(count, count, false);
  for (Index i = 0; i < count; ++i) {
    for (Index j = 0; j < count; ++j) {
      out.significant(i, j) = i != j && out.p_adj(i, j) < alpha;
    }
  }
  return out;
}

CorrelationReport correlate(const std::vector<Eigen::VectorXd>& vectors, double alpha,
                            BonferroniScope scope, const std::vector<std::string>& ids) {
  CorrelationReport report;
  report.sample_size = vectors.empty() ? 0 : vectors.front().size();
  report.alpha = alpha;
  report.r = correlation_matrix(vectors, ids);
  report.p_raw = correlation_significance(report.r, report.sample_size);
  BonferroniResult adjusted = bonferroni_adjust(report.p_raw, alpha, scope);
  report.p_adj = std::move(adjusted.p_adj);
  report.significant = std::move(adjusted.significant);
  report.bonferroni_m = adjusted.m;
  return report;
}

Verdicts decide(const CorrelationReport& report, const ZooManifest& manifest) {
  const Index count = manifest.model_count();
  if (report.r.rows() != count) {
    raise(ErrorCode::ShapeMismatch,
          "correlation report covers " + std::to_string(report.r.rows()) + " models, manifest has " +
              std::to_string(count));
  }

  Verdicts verdicts;
  for (Index j = 0; j < count; ++j) {
    const ModelEntry& entry = manifest.models[static_cast<std::size_t>(j)];
    if (entry.split == ModelSplit::Train && entry.label == ModelLabel::Backdoor) {
      verdicts.reference_indices.push_back(j);
    }
  }
  if (verdicts.reference_indices.empty()) {
    // Evaluation-style zoo: fall back to known test-split backdoor labels.
    for (Index j = 0; j < count; ++j) {
      const ModelEntry& entry = manifest.models[static_cast<std::size_t>(j)];
      if (entry.split == ModelSplit::Test && entry.label == ModelLabel::Backdoor) {
        verdicts.reference_indices.push_back(j);
      }
    }
    verdicts.used_test_truth_references = !verdicts.reference_indices.empty();
  }
  if (verdicts.reference_indices.empty()) {
    raise(ErrorCode::NoBackdoorReference, "manifest has no model labeled backdoor");
  }

  verdicts.backdoor.assign(static_cast<std::size_t>(count), false);
  verdicts.score.assign(static_cast<std::size_t>(count), 0.0);
  verdicts.ref_corr.assign(static_cast<std::size_t>(count), 0.0);
  verdicts.min_adj_p.assign(static_cast<std::size_t>(count), 1.0);

  for (Index i = 0; i < count; ++i) {
    bool flagged = false;
    double best = -1.0;
    double best_signed = 0.0;
    double min_p = 1.0;
    for (Index j : verdicts.reference_indices) {
      if (j == i) continue;
      flagged = flagged || report.significant(i, j);
      min_p = std::min(min_p, report.p_adj(i, j));
      const double magnitude = std::abs(report.r(i, j));
      if (magnitude > best) {
        best = magnitude;
        best_signed = report.r(i, j);
      }
    }
    verdicts.backdoor[static_cast<std::size_t>(i)] = flagged;
    verdicts.score[static_cast<std::size_t>(i)] = std::max(best, 0.0);
    verdicts.ref_corr[static_cast<std::size_t>(i)] = best_signed;
    verdicts.min_adj_p[static_cast<std::size_t>(i)] = min_p;
  }
  return verdicts;
}

Confusion count_confusion(const Verdicts& verdicts, const ZooManifest& manifest) {
  Confusion confusion;
  for (Index i = 0; i < manifest.model_count(); ++i) {
    const ModelEntry& entry = manifest.models[static_cast<std::size_t>(i)];
    if (entry.split != ModelSplit::Test || entry.label == ModelLabel::Unknown) continue;
    const bool truth = entry.label == ModelLabel::Backdoor;
    const bool called = verdicts.backdoor[static_cast<std::size_t>(i)];
    if (truth && called) ++confusion.tp;
    if (truth && !called) ++confusion.fn;
    if (!truth && called) ++confusion.fp;
    if (!truth && !called) ++confusion.tn;
  }
  return confusion;
}

Metrics compute_metrics(const Confusion& confusion) {
  if (confusion.total() <= 0) {
    raise(ErrorCode::EmptyEvaluation, "confusion counts are all zero");
  }
  Metrics metrics;
  if (confusion.tp + confusion.fp > 0) {
    metrics.precision = static_cast<double>(confusion.tp) /
                        static_cast<double>(confusion.tp + confusion.fp);
  }
  if (confusion.tp + confusion.fn > 0) {
    metrics.recall = static_cast<double>(confusion.tp) /
                     static_cast<double>(confusion.tp + confusion.fn);
  }
  metrics.accuracy = static_cast<double>(confusion.tp + confusion.tn) /
                     static_cast<double>(confusion.total());
  return metrics;
}

double binomial_ci(double accuracy, long n, double z) {
  if (n < 1) {
    raise(ErrorCode::PreconditionViolation, "confidence interval needs n >= 1");
  }
  if (accuracy < 0.0 || accuracy > 1.0) {
    raise(ErrorCode::PreconditionViolation, "accuracy must lie in [0, 1]");
  }
  return z * std::sqrt(accuracy * (1.0 - accuracy) / static_cast<double>(n));
}

double roc_auc(const std::vector<double>& scores, const std::vector<bool>& truth_backdoor) {
  if (scores.size() != truth_backdoor.size()) {
    raise(ErrorCode::ShapeMismatch, "scores and labels differ in length");
  }
  const std::size_t count = scores.size();
  std::size_t positives = 0;
  for (bool b : truth_backdoor) positives += b ? 1 : 0;
  const std::size_t negatives = count - positives;
  if (positives == 0 || negatives == 0) {
    raise(ErrorCode::SingleClassOnly, "AUC needs at least one backdoor and one clean label");
  }

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over ties, then the Mann-Whitney identity.
  std::vector<double> rank(count);
  std::size_t i = 0;
  while (i < count) {
    std::size_t j = i;
    while (j + 1 < count && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t at = i; at <= j; ++at) rank[order[at]] = mean_rank;
    i = j + 1;
  }
  double positive_rank_sum = 0.0;
  for (std::size_t at = 0; at < count; ++at) {
    if (truth_backdoor[at]) positive_rank_sum += rank[at];
  }
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

}  // namespace trojatensor
