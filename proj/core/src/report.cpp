#include "trojatensor/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trojatensor/error.hpp"

namespace trojatensor {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json mask_to_json(const Mask& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(static_cast<bool>(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = r > 0 ? static_cast<Index>(rows.at(0).size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = rows.at(i).at(j).get<double>();
  }
  return m;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) {
    raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  }
  return out;
}

std::string format_score(double value) {
  std::ostringstream s;
  s << std::setprecision(17) << value;
  return s.str();
}

}  // namespace

void write_report_json(const DetectionOutcome& outcome, const DetectOptions& opts,
                       const std::filesystem::path& path) {
  json doc;
  doc["version"] = "0.1.0";
  doc["method"] = std::string(to_string(outcome.method));

  json config;
  config["seed"] = opts.seed;
  config["rp_dim"] = opts.rp_dim;
  config["rp_scheme"] = opts.rp_scheme == RpScheme::Gaussian ? "gaussian" : "sparse";
  config["rp_shared"] = opts.rp_shared;
  config["standardize"] = opts.standardize;
  config["order"] = opts.order;
  config["component"] = opts.component;
  config["alpha"] = opts.alpha;
  config["bonferroni"] =
      opts.bonferroni == BonferroniScope::AllPairs ? "all-pairs" : "per-row";
  config["iva_tol"] = opts.iva_tol;
  config["iva_max_iter"] = opts.iva_max_iter;
  config["pf2_tol"] = opts.pf2_tol;
  config["pf2_max_iter"] = opts.pf2_max_iter;
  doc["config"] = std::move(config);

  json zoo;
  zoo["model_count"] = outcome.manifest.model_count();
  zoo["exemplars_per_class"] = outcome.manifest.exemplars_per_class;
  zoo["num_classes"] = outcome.manifest.num_classes;
  json models = json::array();
  for (const ModelEntry& entry : outcome.manifest.models) {
    json node;
    node["id"] = entry.id;
    node["label"] = std::string(to_string(entry.label));
    node["split"] = std::string(to_string(entry.split));
    node["arch"] = entry.arch;
    models.push_back(std::move(node));
  }
  zoo["models"] = std::move(models);
  doc["zoo"] = std::move(zoo);

  json decomposition;
  decomposition["effective_order"] = outcome.effective_order;
  decomposition["converged"] = outcome.decomposition_converged;
  decomposition["iterations"] = outcome.iterations;
  decomposition["component_mean_abs_corr"] = outcome.component_mean_abs_corr;
  if (outcome.method == Method::Parafac2) {
    decomposition["fit"] = outcome.parafac2_fit;
  } else {
    decomposition["explained_variance"] = outcome.explained_variance;
    decomposition["variance_warning"] = outcome.variance_warning;
  }
  doc["decomposition"] = std::move(decomposition);

  json correlation;
  correlation["sample_size"] = outcome.correlation.sample_size;
  correlation["alpha"] = outcome.correlation.alpha;
  correlation["bonferroni_m"] = outcome.correlation.bonferroni_m;
  correlation["r"] = matrix_to_json(outcome.correlation.r);
  correlation["p_raw"] = matrix_to_json(outcome.correlation.p_raw);
  correlation["p_adj"] = matrix_to_json(outcome.correlation.p_adj);
  correlation["significant"] = mask_to_json(outcome.correlation.significant);
  doc["correlation"] = std::move(correlation);

  json detection;
  detection["reference_mode"] =
      outcome.verdicts.used_test_truth_references ? "test-truth" : "train";
  json reference_ids = json::array();
  for (Index j : outcome.verdicts.reference_indices) {
    reference_ids.push_back(outcome.manifest.models[static_cast<std::size_t>(j)].id);
  }
  detection["reference_ids"] = std::move(reference_ids);
  json verdicts = json::array();
  for (std::size_t i = 0; i < outcome.verdicts.backdoor.size(); ++i) {
    json node;
    node["id"] = outcome.manifest.models[i].id;
    node["verdict"] = outcome.verdicts.backdoor[i] ? "backdoor" : "clean";
    node["score"] = outcome.verdicts.score[i];
    node["max_ref_corr"] = outcome.verdicts.ref_corr[i];
    node["min_adj_p"] = outcome.verdicts.min_adj_p[i];
    verdicts.push_back(std::move(node));
  }
  detection["verdicts"] = std::move(verdicts);
  json confusion;
  confusion["tp"] = outcome.confusion.tp;
  confusion["fp"] = outcome.confusion.fp;
  confusion["tn"] = outcome.confusion.tn;
  confusion["fn"] = outcome.confusion.fn;
  detection["confusion"] = std::move(confusion);
  if (outcome.metrics) {
    json metrics;
    if (outcome.metrics->precision) metrics["precision"] = *outcome.metrics->precision;
    if (outcome.metrics->recall) metrics["recall"] = *outcome.metrics->recall;
    metrics["accuracy"] = outcome.metrics->accuracy;
    detection["metrics"] = std::move(metrics);
  }
  if (outcome.ci_halfwidth) detection["ci_halfwidth"] = *outcome.ci_halfwidth;
  if (outcome.auc) detection["roc_auc"] = *outcome.auc;
  doc["detection"] = std::move(detection);

  json clustering;
  if (!outcome.clusters.assignments.empty()) {
    clustering["points"] = matrix_to_json(outcome.contributions.points);
    clustering["assignments"] = outcome.clusters.assignments;
    clustering["centroids"] = matrix_to_json(outcome.clusters.centroids);
    clustering["mean_silhouette"] = outcome.clusters.mean_silhouette;
    clustering["trojan_cluster"] = outcome.clusters.trojan_cluster;
    clustering["degenerate"] = outcome.clusters.degenerate;
  }
  doc["clustering"] = std::move(clustering);

  std::ofstream out = open_out(path, std::ios::out);
  out << doc.dump(2) << '\n';
}

void write_verdicts_csv(const DetectionOutcome& outcome, const std::filesystem::path& path) {
  std::ofstream out = open_out(path, std::ios::out);
  out << "model_id,split,truth,verdict,score,max_ref_corr,min_adj_p\n";
  for (std::size_t i = 0; i < outcome.verdicts.backdoor.size(); ++i) {
    const ModelEntry& entry = outcome.manifest.models[i];
    out << entry.id << ',' << to_string(entry.split) << ',' << to_string(entry.label) << ','
        << (outcome.verdicts.backdoor[i] ? "backdoor" : "clean") << ','
        << format_score(outcome.verdicts.score[i]) << ','
        << format_score(outcome.verdicts.ref_corr[i]) << ','
        << format_score(outcome.verdicts.min_adj_p[i]) << '\n';
  }
}

void write_clusters_csv(const DetectionOutcome& outcome, const std::filesystem::path& path) {
  std::ofstream out = open_out(path, std::ios::out);
  out << "model_id,x,y,cluster,is_trojan_cluster\n";
  for (std::size_t i = 0; i < outcome.clusters.assignments.size(); ++i) {
    const int cluster = outcome.clusters.assignments[i];
    out << outcome.manifest.models[i].id << ','
        << format_score(outcome.contributions.points(static_cast<Index>(i), 0)) << ','
        << format_score(outcome.contributions.points(static_cast<Index>(i), 1)) << ','
        << cluster << ',' << (cluster == outcome.clusters.trojan_cluster ? 1 : 0) << '\n';
  }
}

void write_trace_csv(const DetectionOutcome& outcome, const std::filesystem::path& path) {
  std::ofstream out = open_out(path, std::ios::out);
  out << "iteration," << (outcome.method == Method::Iva ? "cost" : "fit") << '\n';
  for (std::size_t i = 0; i < outcome.trace.size(); ++i) {
    out << (i + 1) << ',' << format_score(outcome.trace[i]) << '\n';
  }
}

namespace {

constexpr int kCellPx = 8;

void render_heatmap(const Eigen::MatrixXd& r, const Mask& significant, std::ostream& out) {
  const Index count = r.rows();
  const int side = static_cast<int>(count) * kCellPx;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(side) * side * 3);

  const auto put = [&](int x, int y, unsigned char red, unsigned char green,
                       unsigned char blue) {
    const std::size_t at = 3 * (static_cast<std::size_t>(y) * side + x);
    pixels[at] = red;
    pixels[at + 1] = green;
    pixels[at + 2] = blue;
  };

  for (Index i = 0; i < count; ++i) {
    for (Index j = 0; j < count; ++j) {
      const double magnitude = std::clamp(std::abs(r(i, j)), 0.0, 1.0);
      const auto shade = static_cast<unsigned char>(std::lround(255.0 * (1.0 - magnitude)));
      const bool outlined = significant(i, j);
      for (int dy = 0; dy < kCellPx; ++dy) {
        for (int dx = 0; dx < kCellPx; ++dx) {
          const int x = static_cast<int>(j) * kCellPx + dx;
          const int y = static_cast<int>(i) * kCellPx + dy;
          const bool border = dy == 0 || dx == 0 || dy == kCellPx - 1 || dx == kCellPx - 1;
          if (outlined && border) {
            put(x, y, 255, 0, 0);
          } else {
            // Keep cell interiors off pure red so outlines stay countable.
            put(x, y, shade, shade, std::max<unsigned char>(shade, 16));
          }
        }
      }
    }
  }

  out << "P6\n" << side << ' ' << side << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

}  // namespace

void write_heatmap_ppm(const CorrelationReport& report, const std::filesystem::path& path) {
  std::ofstream out = open_out(path, std::ios::binary);
  render_heatmap(report.r, report.significant, out);
  if (!out) {
    raise(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
  }
}

void write_outputs(const DetectionOutcome& outcome, const DetectOptions& opts,
                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    raise(ErrorCode::IoFailure, "cannot create output directory '" + dir.string() + "'");
  }
  write_report_json(outcome, opts, dir / "report.json");
  write_verdicts_csv(outcome, dir / "verdicts.csv");
  if (!outcome.clusters.assignments.empty()) {
    write_clusters_csv(outcome, dir / "clusters.csv");
  }
  write_trace_csv(outcome, dir / "trace.csv");
  write_heatmap_ppm(outcome.correlation, dir / "corr_heatmap.ppm");
}

namespace {

json load_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::MissingFile, "'" + path.string() + "' does not exist");
  }
  std::ifstream in(path);
  if (!in) {
    raise(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorCode::SchemaViolation, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

void summarize_report(const std::filesystem::path& report_json, std::ostream& out) {
  const json doc = load_json(report_json);
  out << "method: " << doc.at("method").get<std::string>() << '\n';
  out << "models: " << doc.at("zoo").at("model_count").get<long>() << '\n';
  const json& decomposition = doc.at("decomposition");
  out << "decomposition: order " << decomposition.at("effective_order").get<long>() << ", "
      << decomposition.at("iterations").get<long>() << " iterations, "
      << (decomposition.at("converged").get<bool>() ? "converged" : "not converged") << '\n';
  const json& detection = doc.at("detection");
  const json& confusion = detection.at("confusion");
  out << "confusion: tp " << confusion.at("tp").get<long>() << ", fp "
      << confusion.at("fp").get<long>() << ", tn " << confusion.at("tn").get<long>() << ", fn "
      << confusion.at("fn").get<long>() << '\n';
  if (detection.contains("metrics")) {
    const json& metrics = detection.at("metrics");
    out << "metrics:";
    if (metrics.contains("precision")) out << " precision " << metrics.at("precision").get<double>();
    if (metrics.contains("recall")) out << " recall " << metrics.at("recall").get<double>();
    out << " accuracy " << metrics.at("accuracy").get<double>();
    if (detection.contains("ci_halfwidth")) {
      out << " (+/- " << detection.at("ci_halfwidth").get<double>() << ")";
    }
    out << '\n';
  }
  if (detection.contains("roc_auc")) {
    out << "roc_auc: " << detection.at("roc_auc").get<double>() << '\n';
  }
  const json& clustering = doc.at("clustering");
  if (clustering.contains("mean_silhouette")) {
    out << "mean_silhouette: " << clustering.at("mean_silhouette").get<double>() << '\n';
  }
  long flagged = 0;
  for (const json& node : detection.at("verdicts")) {
    if (node.at("verdict").get<std::string>() == "backdoor") ++flagged;
  }
  out << "flagged backdoor: " << flagged << '\n';
}

void heatmap_from_report(const std::filesystem::path& report_json,
                         const std::filesystem::path& out_ppm) {
  const json doc = load_json(report_json);
  const json& correlation = doc.at("correlation");
  const Eigen::MatrixXd r = matrix_from_json(correlation.at("r"));
  const json& significant_rows = correlation.at("significant");
  Mask significant = Mask::Constant(r.rows(), r.cols(), false);
  for (Index i = 0; i < r.rows(); ++i) {
    for (Index j = 0; j < r.cols(); ++j) {
      significant(i, j) = significant_rows.at(static_cast<std::size_t>(i))
                              .at(static_cast<std::size_t>(j))
                              .get<bool>();
    }
  }
  std::ofstream out = open_out(out_ppm, std::ios::binary);
  render_heatmap(r, significant, out);
}

std::vector<BenchRow> run_bench(const std::filesystem::path& manifest_path,
                                const std::vector<Method>& methods, int repeats,
                                const DetectOptions& base) {
  if (repeats < 1) {
    raise(ErrorCode::PreconditionViolation, "bench needs repeats >= 1");
  }
  const auto median = [](std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  };

  std::vector<BenchRow> rows;
  for (Method method : methods) {
    std::vector<double> ingest, features, decomposition, stats;
    for (int rep = 0; rep < repeats; ++rep) {
      DetectOptions opts = base;
      opts.method = method;
      const DetectionOutcome outcome = run_detect(manifest_path, opts);
      ingest.push_back(outcome.timings.ingest_s);
      features.push_back(outcome.timings.features_s);
      decomposition.push_back(outcome.timings.decomposition_s);
      stats.push_back(outcome.timings.stats_s);
    }
    BenchRow row;
    row.method = std::string(to_string(method));
    row.ingest_s = median(ingest);
    row.features_s = median(features);
    row.decomposition_s = median(decomposition);
    row.stats_s = median(stats);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_out(path, std::ios::out);
  out << "method,ingest_s,features_s,decomposition_s,stats_s\n";
  for (const BenchRow& row : rows) {
    out << row.method << ',' << format_score(row.ingest_s) << ',' << format_score(row.features_s)
        << ',' << format_score(row.decomposition_s) << ',' << format_score(row.stats_s) << '\n';
  }
}

}  // namespace trojatensor
