#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "trojatensor/pipeline.hpp"

namespace trojatensor {

/// Writes report.json (all numbers, deterministic byte-for-byte given the
/// same outcome), verdicts.csv, clusters.csv, trace.csv, and
/// corr_heatmap.ppm under dir.
void write_outputs(const DetectionOutcome& outcome, const DetectOptions& opts,
                   const std::filesystem::path& dir);

void write_report_json(const DetectionOutcome& outcome, const DetectOptions& opts,
                       const std::filesystem::path& path);
void write_verdicts_csv(const DetectionOutcome& outcome, const std::filesystem::path& path);
void write_clusters_csv(const DetectionOutcome& outcome, const std::filesystem::path& path);
void write_trace_csv(const DetectionOutcome& outcome, const std::filesystem::path& path);

/// Binary PPM (P6) heatmap: one cell per model pair, darkness encodes |r|,
/// significant cells carry a pure-red outline. Rows follow manifest order.
void write_heatmap_ppm(const CorrelationReport& report, const std::filesystem::path& path);

/// Human-readable digest of an existing report.json.
void summarize_report(const std::filesystem::path& report_json, std::ostream& out);

/// Re-renders the heatmap from the matrices stored in report.json.
void heatmap_from_report(const std::filesystem::path& report_json,
                         const std::filesystem::path& out_ppm);

struct BenchRow {
  std::string method;
  double ingest_s = 0.0;
  double features_s = 0.0;
  double decomposition_s = 0.0;
  double stats_s = 0.0;
};

/// Median-of-repeats stage timings per method.
std::vector<BenchRow> run_bench(const std::filesystem::path& manifest_path,
                                const std::vector<Method>& methods, int repeats,
                                const DetectOptions& base);
void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path);

}  // namespace trojatensor
