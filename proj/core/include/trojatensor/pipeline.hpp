#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trojatensor/cluster.hpp"
#include "trojatensor/feature.hpp"
#include "trojatensor/iva.hpp"
#include "trojatensor/manifest.hpp"
#include "trojatensor/parafac2.hpp"
#include "trojatensor/stats.hpp"

namespace trojatensor {

enum class Method { Iva, Parafac2 };

constexpr std::string_view to_string(Method method) noexcept {
  return method == Method::Iva ? "iva" : "parafac2";
}

struct DetectOptions {
  Method method = Method::Parafac2;
  std::uint64_t seed = 0;

  Index rp_dim = 500;
  RpScheme rp_scheme = RpScheme::Gaussian;
  bool rp_shared = true;
  bool standardize = true;

  Index order = 10;  // model order N (IVA) / rank (PARAFAC2)
  double min_variance = 0.9;
  Index component = 1;  // which ranked component feeds the correlation decoding

  double alpha = 0.05;
  BonferroniScope bonferroni = BonferroniScope::AllPairs;

  double iva_tol = 1e-6;
  int iva_max_iter = 1024;
  double pf2_tol = 1e-8;
  int pf2_max_iter = 2000;
};

struct StageTimings {
  double ingest_s = 0.0;
  double features_s = 0.0;
  double decomposition_s = 0.0;
  double stats_s = 0.0;
  double total() const noexcept { return ingest_s + features_s + decomposition_s + stats_s; }
};

struct DetectionOutcome {
  ZooManifest manifest;
  Method method = Method::Parafac2;

  // Decomposition diagnostics.
  Index effective_order = 0;
  bool decomposition_converged = false;
  int iterations = 0;
  std::vector<double> trace;  // IVA cost per sweep, or PARAFAC2 fit per sweep
  double parafac2_fit = 0.0;
  double component_mean_abs_corr = 0.0;   // of the decoded component's sources
  std::vector<double> explained_variance;  // per model (IVA path only)
  bool variance_warning = false;

  CorrelationReport correlation;
  Verdicts verdicts;
  Confusion confusion;  // over labeled test models; total() == 0 when none
  std::optional<Metrics> metrics;
  std::optional<double> ci_halfwidth;  // z = 1.96
  std::optional<double> auc;           // absent when labels are one-sided

  ContributionMatrix contributions;
  ClusterReport clusters;

  StageTimings timings;
};

/// Runs features -> decomposition -> statistics -> clustering on activations
/// already in memory (manifest order must match `sets`).
DetectionOutcome run_detect(const ZooManifest& manifest, const std::vector<ActivationSet>& sets,
                            const DetectOptions& opts);

/// Loads the manifest and its activations, then runs the pipeline.
DetectionOutcome run_detect(const std::filesystem::path& manifest_path, const DetectOptions& opts);

}  // namespace trojatensor
