// trojatensor: backdoor detection over model-zoo activations via joint
// decomposition (IVA / PARAFAC2) and correlation decoding.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>

#include "trojatensor/atf.hpp"
#include "trojatensor/error.hpp"
#include "trojatensor/pipeline.hpp"
#include "trojatensor/report.hpp"
#include "trojatensor/synth.hpp"

namespace fs = std::filesystem;
using namespace trojatensor;

namespace {

void add_detect_options(CLI::App* cmd, DetectOptions& opts, std::string& method) {
  cmd->add_option("--method", method, "Decomposition method: iva or parafac2")
      ->check(CLI::IsMember({"iva", "parafac2"}))
      ->capture_default_str();
  cmd->add_option("--seed", opts.seed, "Seed for all randomized stages")->capture_default_str();
  cmd->add_option("--rp-dim", opts.rp_dim, "Random projection dimension R")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  std::string scheme = "gaussian";
  cmd->add_option_function<std::string>(
         "--rp-scheme",
         [&opts](const std::string& value) {
           opts.rp_scheme = value == "sparse" ? RpScheme::SparseSign : RpScheme::Gaussian;
         },
         "Projection scheme: gaussian or sparse")
      ->check(CLI::IsMember({"gaussian", "sparse"}))
      ->default_str(scheme);
  cmd->add_flag("--rp-shared,!--rp-per-model", opts.rp_shared,
                "Share projection rows across models (default) or draw per model")
      ->capture_default_str();
  cmd->add_flag("--standardize,!--no-standardize", opts.standardize,
                "Standardize feature columns after projection")
      ->capture_default_str();
  cmd->add_option("--order,--rank", opts.order, "Model order N / decomposition rank")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--component", opts.component, "Ranked component used for decoding")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--alpha", opts.alpha, "Significance level")->capture_default_str();
  std::string bonferroni = "all-pairs";
  cmd->add_option_function<std::string>(
         "--bonferroni",
         [&opts](const std::string& value) {
           opts.bonferroni =
               value == "per-row" ? BonferroniScope::PerRow : BonferroniScope::AllPairs;
         },
         "Multiplicity scope: all-pairs or per-row")
      ->check(CLI::IsMember({"all-pairs", "per-row"}))
      ->default_str(bonferroni);
  cmd->add_option("--iva-tol", opts.iva_tol, "IVA convergence tolerance")->capture_default_str();
  cmd->add_option("--iva-max-iter", opts.iva_max_iter, "IVA iteration cap")->capture_default_str();
  cmd->add_option("--pf2-tol", opts.pf2_tol, "PARAFAC2 fit-change tolerance")
      ->capture_default_str();
  cmd->add_option("--pf2-max-iter", opts.pf2_max_iter, "PARAFAC2 iteration cap")
      ->capture_default_str();
  cmd->add_option("--min-variance", opts.min_variance,
                  "Warn when PCA keeps less than this variance fraction")
      ->capture_default_str();
}

int run(int argc, char** argv) {
  CLI::App app{"Model-zoo backdoor detection via IVA / PARAFAC2 decomposition"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic model zoo");
  SynthSpec spec;
  fs::path synth_out = "zoo";
  synth->add_option("--out", synth_out, "Output directory")->capture_default_str();
  synth->add_option("--models", spec.models, "Number of models K")->capture_default_str();
  synth->add_option("--backdoor-fraction", spec.backdoor_fraction, "Fraction of backdoor models")
      ->capture_default_str();
  synth->add_option("--exemplars", spec.exemplars, "Exemplars per class M")->capture_default_str();
  synth->add_option("--classes", spec.classes, "Class count C")->capture_default_str();
  synth->add_option("--d-min", spec.min_width, "Smallest activation width")->capture_default_str();
  synth->add_option("--d-max", spec.max_width, "Largest activation width")->capture_default_str();
  synth->add_option("--shared-dim", spec.shared_dim, "Dimension of the planted subspace")
      ->capture_default_str();
  synth->add_option("--snr-db", spec.snr_db, "Per-entry SNR of the planted component (dB)")
      ->capture_default_str();
  synth->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();

  // convert
  auto* convert = app.add_subcommand("convert", "Convert a .npy array to ATF");
  fs::path npy_in, atf_out;
  convert->add_option("input", npy_in, "Input .npy file (float32/float64, C-order, M x C x d)")
      ->required();
  convert->add_option("output", atf_out, "Output .atf file")->required();

  // detect
  auto* detect = app.add_subcommand("detect", "Run the detection pipeline on a zoo");
  fs::path detect_manifest;
  fs::path detect_out = "detect-out";
  DetectOptions detect_opts;
  std::string detect_method = "parafac2";
  detect->add_option("manifest", detect_manifest, "Zoo manifest JSON")->required();
  detect->add_option("--out", detect_out, "Output directory")->capture_default_str();
  add_detect_options(detect, detect_opts, detect_method);

  // bench
  auto* bench = app.add_subcommand("bench", "Time the pipeline stages per method");
  fs::path bench_manifest;
  fs::path bench_out = "bench.csv";
  int repeats = 3;
  std::vector<std::string> bench_methods{"iva", "parafac2"};
  DetectOptions bench_opts;
  std::string bench_method_unused = "parafac2";
  bench->add_option("manifest", bench_manifest, "Zoo manifest JSON")->required();
  bench->add_option("--out", bench_out, "Output CSV")->capture_default_str();
  bench->add_option("--repeats", repeats, "Repetitions per method (median reported)")
      ->capture_default_str();
  bench->add_option("--methods", bench_methods, "Methods to time")
      ->check(CLI::IsMember({"iva", "parafac2"}));
  add_detect_options(bench, bench_opts, bench_method_unused);

  // report
  auto* report = app.add_subcommand("report", "Summarize an existing report.json");
  fs::path report_json;
  fs::path report_heatmap;
  report->add_option("report", report_json, "Path to report.json")->required();
  report->add_option("--heatmap", report_heatmap, "Re-render the correlation heatmap here");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    SynthZoo zoo = generate_zoo(spec);
    write_zoo(zoo, synth_out);
    std::cout << "wrote " << zoo.manifest.model_count() << " models under " << synth_out.string()
              << '\n';
    return 0;
  }

  if (convert->parsed()) {
    const ActivationSet set = atf::from_npy(npy_in);
    atf::write(set, atf_out);
    std::cout << "wrote " << set.exemplars << "x" << set.classes << "x" << set.width << " tensor to "
              << atf_out.string() << '\n';
    return 0;
  }

  if (detect->parsed()) {
    detect_opts.method = detect_method == "iva" ? Method::Iva : Method::Parafac2;
    const DetectionOutcome outcome = run_detect(detect_manifest, detect_opts);
    write_outputs(outcome, detect_opts, detect_out);
    summarize_report(detect_out / "report.json", std::cout);
    if (outcome.variance_warning) {
      std::cerr << "warning: PCA kept less than the requested variance fraction\n";
    }
    if (!outcome.decomposition_converged) {
      std::cerr << "warning: decomposition hit the iteration cap before reaching tolerance\n";
      return 2;
    }
    return 0;
  }

  if (bench->parsed()) {
    std::vector<Method> methods;
    for (const std::string& name : bench_methods) {
      methods.push_back(name == "iva" ? Method::Iva : Method::Parafac2);
    }
    const std::vector<BenchRow> rows = run_bench(bench_manifest, methods, repeats, bench_opts);
    write_bench_csv(rows, bench_out);
    for (const BenchRow& row : rows) {
      std::cout << row.method << ": ingest " << row.ingest_s << "s, features " << row.features_s
                << "s, decomposition " << row.decomposition_s << "s, stats " << row.stats_s
                << "s\n";
    }
    return 0;
  }

  if (report->parsed()) {
    summarize_report(report_json, std::cout);
    if (!report_heatmap.empty()) {
      heatmap_from_report(report_json, report_heatmap);
      std::cout << "heatmap written to " << report_heatmap.string() << '\n';
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
