// Microbenchmarks for the pipeline's hot kernels at desk scale.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <vector>

#include "trojatensor/feature.hpp"
#include "trojatensor/iva.hpp"
#include "trojatensor/parafac2.hpp"
#include "trojatensor/pca.hpp"
#include "trojatensor/rng.hpp"
#include "trojatensor/stats.hpp"
#include "trojatensor/synth.hpp"

using namespace trojatensor;

namespace {

ActivationSet synthetic_set(Index m, Index c, Index d, std::uint64_t key) {
  ActivationSet set;
  set.model_id = "bench";
  set.exemplars = m;
  set.classes = c;
  set.width = d;
  set.values.resize(static_cast<std::size_t>(m * c * d));
  CounterRng rng(key);
  for (float& v : set.values) v = static_cast<float>(rng.next_normal());
  return set;
}

Eigen::MatrixXd gaussian(Index rows, Index cols, std::uint64_t key) {
  CounterRng rng(key);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
  }
  return m;
}

void bm_project(benchmark::State& state) {
  const ActivationSet set = synthetic_set(10, 10, state.range(0), 1);
  RpConfig cfg;
  cfg.target_dim = 500;
  cfg.seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(project(set, cfg));
  }
}
BENCHMARK(bm_project)->Arg(64)->Arg(256)->Arg(512);

void bm_pca_reduce(benchmark::State& state) {
  FeatureMatrix features;
  features.model_id = "bench";
  features.data = gaussian(100, 500, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pca_reduce(features, 10, 0.9));
  }
}
BENCHMARK(bm_pca_reduce);

void bm_iva_sweeps(benchmark::State& state) {
  const Index count = state.range(0);
  std::vector<Eigen::MatrixXd> datasets;
  CounterRng rng(3);
  for (Index k = 0; k < count; ++k) {
    datasets.push_back(gaussian(10, 500, derive_key(3, static_cast<std::uint64_t>(k))));
  }
  IvaOptions opts;
  opts.max_iter = 10;
  opts.tol = 0.0;  // time exactly ten sweeps
  for (auto _ : state) {
    benchmark::DoNotOptimize(iva_decompose(datasets, opts));
  }
}
BENCHMARK(bm_iva_sweeps)->Arg(20)->Arg(60)->Unit(benchmark::kMillisecond);

void bm_parafac2_sweeps(benchmark::State& state) {
  const Index count = state.range(0);
  std::vector<Eigen::MatrixXd> slices;
  for (Index k = 0; k < count; ++k) {
    slices.push_back(gaussian(100, 500, derive_key(4, static_cast<std::uint64_t>(k))));
  }
  Parafac2Options opts;
  opts.max_iter = 10;
  opts.tol = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(parafac2_als(slices, 10, opts));
  }
}
BENCHMARK(bm_parafac2_sweeps)->Arg(20)->Arg(60)->Unit(benchmark::kMillisecond);

void bm_correlation_stage(benchmark::State& state) {
  std::vector<Eigen::VectorXd> vectors;
  CounterRng rng(5);
  for (Index k = 0; k < 60; ++k) {
    Eigen::VectorXd v(500);
    for (Index i = 0; i < 500; ++i) v(i) = rng.next_normal();
    vectors.push_back(std::move(v));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(correlate(vectors, 0.05));
  }
}
BENCHMARK(bm_correlation_stage);

void bm_generate_zoo(benchmark::State& state) {
  SynthSpec spec;
  spec.models = 20;
  spec.seed = 6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_zoo(spec));
  }
}
BENCHMARK(bm_generate_zoo)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
