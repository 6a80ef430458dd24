#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "trojatensor/types.hpp"

namespace trojatensor {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class BonferroniScope {
  AllPairs,  // m = K(K-1)/2, every distinct off-diagonal test
  PerRow,    // m = K-1
};

/// K x K Pearson matrix with raw and multiplicity-adjusted significance.
struct CorrelationReport {
  Eigen::MatrixXd r;      // symmetric, unit diagonal
  Eigen::MatrixXd p_raw;  // two-tailed, zero diagonal by convention
  Eigen::MatrixXd p_adj;
  Mask significant;       // p_adj < alpha, false diagonal
  Index sample_size = 0;  // R
  double alpha = 0.05;
  Index bonferroni_m = 0;
};

/// Pearson correlation of K equal-length vectors. Vectors must have nonzero
/// variance; ids (when given) name the offender in ZeroVariance errors.
Eigen::MatrixXd correlation_matrix(const std::vector<Eigen::VectorXd>& vectors,
                                   const std::vector<std::string>& ids = {});

/// Two-tailed p-values for each off-diagonal r via t = r sqrt((R-2)/(1-r^2))
/// against Student-t with R-2 degrees of freedom; diagonal set to 0.
Eigen::MatrixXd correlation_significance(const Eigen::MatrixXd& r, Index sample_size);

struct BonferroniResult {
  Eigen::MatrixXd p_adj;
  Mask significant;
  Index m = 0;
};

BonferroniResult bonferroni_adjust(const Eigen::MatrixXd& p_raw, double alpha,
                                   BonferroniScope scope = BonferroniScope::AllPairs);

/// Convenience wrapper running the three steps above.
CorrelationReport correlate(const std::vector<Eigen::VectorXd>& vectors, double alpha,
                            BonferroniScope scope = BonferroniScope::AllPairs,
                            const std::vector<std::string>& ids = {});

/// Verdicts for every model in manifest order. A model is flagged backdoor
/// when it correlates significantly with at least one reference model. The
/// reference set is the train-split backdoor models; when the zoo carries no
/// train references (evaluation-style zoos where all models are test-split
/// with known labels), test-split backdoor labels serve as references.
struct Verdicts {
  std::vector<bool> backdoor;
  std::vector<double> score;         // max |r| against references, the ROC score
  std::vector<double> ref_corr;      // signed r at the strongest reference
  std::vector<double> min_adj_p;     // smallest adjusted p against references
  std::vector<Index> reference_indices;
  bool used_test_truth_references = false;
};

Verdicts decide(const CorrelationReport& report, const ZooManifest& manifest);

struct Confusion {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
  long total() const noexcept { return tp + fp + tn + fn; }
};

/// Confusion over ground-truth-labeled test-split models.
Confusion count_confusion(const Verdicts& verdicts, const ZooManifest& manifest);

struct Metrics {
  std::optional<double> precision;  // absent when TP+FP = 0
  std::optional<double> recall;     // absent when TP+FN = 0
  double accuracy = 0.0;
};

Metrics compute_metrics(const Confusion& confusion);

/// Binomial-proportion half width z * sqrt(acc (1-acc) / n).
double binomial_ci(double accuracy, long n, double z);

/// Rank-statistic AUC (probability a backdoor model outscores a clean one,
/// ties counting one half).
double roc_auc(const std::vector<double>& scores, const std::vector<bool>& truth_backdoor);

}  // namespace trojatensor
