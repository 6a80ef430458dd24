#include "trojatensor/pipeline.hpp"

#include <chrono>

#include "trojatensor/parallel.hpp"
#include "trojatensor/pca.hpp"

namespace trojatensor {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

DetectionOutcome run_detect(const ZooManifest& manifest, const std::vector<ActivationSet>& sets,
                            const DetectOptions& opts) {
  manifest.validate();
  const Index count = manifest.model_count();
  if (static_cast<Index>(sets.size()) != count) {
    raise(ErrorCode::ShapeMismatch, "activation sets do not match the manifest");
  }

  DetectionOutcome outcome;
  outcome.manifest = manifest;
  outcome.method = opts.method;

  // Features: flatten, project to R columns, normalize per column.
  auto features_start = Clock::now();
  std::vector<FeatureMatrix> features(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t k) {
    RpConfig cfg;
    cfg.target_dim = opts.rp_dim;
    cfg.seed = opts.seed;
    cfg.scheme = opts.rp_scheme;
    cfg.shared_rows = opts.rp_shared;
    cfg.model_index = static_cast<Index>(k);
    features[k] = project(sets[k], cfg);
    if (opts.standardize) {
      standardize_columns(features[k].data);
    } else {
      center_columns(features[k].data);
    }
  });
  outcome.timings.features_s = seconds_since(features_start);

  const Index grid = manifest.exemplars_per_class * manifest.num_classes;
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(count));
  for (const ModelEntry& entry : manifest.models) ids.push_back(entry.id);

  // Decomposition.
  auto decomposition_start = Clock::now();
  std::vector<Eigen::VectorXd> decoded;
  if (opts.method == Method::Iva) {
    // The joint decomposition needs one model order: clamp to the smallest
    // numerical rank in the zoo.
    std::vector<Index> ranks(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t k) {
      ranks[k] = pca_rank(features[k]);
    });
    Index order = std::min(opts.order, std::min(grid, opts.rp_dim));
    for (Index rank : ranks) order = std::min(order, rank);
    if (order < 1) {
      raise(ErrorCode::OrderExceedsRank, "zoo contains a rank-0 feature matrix");
    }
    outcome.effective_order = order;

    std::vector<PcaReduction> reductions(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t k) {
      reductions[k] = pca_reduce(features[k], order, opts.min_variance);
    });
    std::vector<Eigen::MatrixXd> observations;
    observations.reserve(static_cast<std::size_t>(count));
    outcome.explained_variance.reserve(static_cast<std::size_t>(count));
    for (const PcaReduction& reduction : reductions) {
      observations.push_back(reduction.reduced);
      outcome.explained_variance.push_back(reduction.explained_variance);
      outcome.variance_warning = outcome.variance_warning || reduction.variance_warning;
    }

    IvaOptions iva_opts;
    iva_opts.max_iter = opts.iva_max_iter;
    iva_opts.tol = opts.iva_tol;
    iva_opts.seed = opts.seed;
    const IvaResult result = iva_decompose(observations, iva_opts);
    outcome.decomposition_converged = result.converged;
    outcome.iterations = result.iterations;
    outcome.trace = result.cost_trace;

    const ScvBundle bundle = extract_scv(result, std::min(opts.component, order));
    outcome.component_mean_abs_corr = bundle.mean_abs_corr;
    decoded = bundle.rows;

    if (order >= 2) {
      outcome.contributions = contributions(result, reconstruct_mixing(result, reductions));
    }
  } else {
    const Index rank = std::min({opts.order, grid, opts.rp_dim});
    outcome.effective_order = rank;
    std::vector<Eigen::MatrixXd> slices;
    slices.reserve(static_cast<std::size_t>(count));
    for (FeatureMatrix& f : features) slices.push_back(std::move(f.data));

    Parafac2Options pf2_opts;
    pf2_opts.max_iter = opts.pf2_max_iter;
    pf2_opts.tol = opts.pf2_tol;
    pf2_opts.seed = opts.seed;
    const Parafac2Result result = parafac2_als(slices, rank, pf2_opts);
    outcome.decomposition_converged = result.converged;
    outcome.iterations = result.iterations;
    outcome.trace = result.fit_trace;
    outcome.parafac2_fit = result.fit;

    decoded = parafac2_sources(result, std::min(opts.component, rank));
    if (rank >= 2) outcome.contributions = contributions(result);
  }
  outcome.timings.decomposition_s = seconds_since(decomposition_start);

  // Statistics: correlation, significance, verdicts, metrics.
  auto stats_start = Clock::now();
  outcome.correlation = correlate(decoded, opts.alpha, opts.bonferroni, ids);
  if (opts.method == Method::Parafac2) {
    double acc = 0.0;
    Index pairs = 0;
    for (Index i = 0; i < count; ++i) {
      for (Index j = i + 1; j < count; ++j) {
        acc += std::abs(outcome.correlation.r(i, j));
        ++pairs;
      }
    }
    outcome.component_mean_abs_corr = pairs > 0 ? acc / static_cast<double>(pairs) : 0.0;
  }

  outcome.verdicts = decide(outcome.correlation, manifest);
  outcome.confusion = count_confusion(outcome.verdicts, manifest);
  if (outcome.confusion.total() > 0) {
    outcome.metrics = compute_metrics(outcome.confusion);
    outcome.ci_halfwidth = binomial_ci(outcome.metrics->accuracy, outcome.confusion.total(), 1.96);

    std::vector<double> scores;
    std::vector<bool> truth;
    for (Index i = 0; i < count; ++i) {
      const ModelEntry& entry = manifest.models[static_cast<std::size_t>(i)];
      if (entry.split != ModelSplit::Test || entry.label == ModelLabel::Unknown) continue;
      scores.push_back(outcome.verdicts.score[static_cast<std::size_t>(i)]);
      truth.push_back(entry.label == ModelLabel::Backdoor);
    }
    const bool has_backdoor = std::find(truth.begin(), truth.end(), true) != truth.end();
    const bool has_clean = std::find(truth.begin(), truth.end(), false) != truth.end();
    if (has_backdoor && has_clean) outcome.auc = roc_auc(scores, truth);
  }

  if (outcome.contributions.points.rows() == count) {
    KmeansOptions kmeans_opts;
    kmeans_opts.seed = opts.seed;
    outcome.clusters = kmeans2(outcome.contributions.points, kmeans_opts, outcome.verdicts.score);
  }
  outcome.timings.stats_s = seconds_since(stats_start);

  return outcome;
}

DetectionOutcome run_detect(const std::filesystem::path& manifest_path, const DetectOptions& opts) {
  auto ingest_start = Clock::now();
  const ZooManifest manifest = load_manifest(manifest_path);
  const std::vector<ActivationSet> sets = load_zoo_activations(manifest);
  const double ingest_s = seconds_since(ingest_start);

  DetectionOutcome outcome = run_detect(manifest, sets, opts);
  outcome.timings.ingest_s = ingest_s;
  return outcome;
}

}  // namespace trojatensor
