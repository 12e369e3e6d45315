#include <benchmark/benchmark.h>

#include "heavytail/glm.hpp"
#include "heavytail/robust_cov.hpp"
#include "heavytail/robust_mean.hpp"
#include "heavytail/sampling.hpp"
#include "heavytail/single_index.hpp"
#include "heavytail/symmetric_matrix.hpp"

using namespace heavytail;

namespace {

Eigen::MatrixXd gaussian_rows(Rng& rng, int m, int d) {
  Eigen::MatrixXd x(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
  return x;
}

void BM_SampleElliptical(benchmark::State& state) {
  Rng rng(1);
  EllipticalSpec spec;
  spec.dim = state.range(0);
  spec.radial = RadialLaw::SymmetrizedPareto;
  spec.pareto_q = 2.1;
  for (auto _ : state) {
    Eigen::MatrixXd x = sample_elliptical(rng, spec, 128);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_SampleElliptical)->Arg(64)->Arg(512);

void BM_Eigendecompose(benchmark::State& state) {
  Rng rng(2);
  const int d = static_cast<int>(state.range(0));
  const Eigen::MatrixXd g = gaussian_rows(rng, d, d);
  const SymmetricMatrix a(g + g.transpose());
  for (auto _ : state) {
    EigenDecomposition ed = eigendecompose(a);
    benchmark::DoNotOptimize(ed.eigenvalues.data());
  }
}
BENCHMARK(BM_Eigendecompose)->Arg(8)->Arg(32)->Arg(128);

void BM_TruncatedCovariance(benchmark::State& state) {
  Rng rng(3);
  const int m = static_cast<int>(state.range(0));
  const int d = static_cast<int>(state.range(1));
  const Eigen::MatrixXd x = gaussian_rows(rng, m, d);
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (auto _ : state) {
    SymmetricMatrix s = truncated_covariance(x, mu, 0.01);
    benchmark::DoNotOptimize(s.matrix().data());
  }
}
BENCHMARK(BM_TruncatedCovariance)->Args({1000, 8})->Args({8000, 16})->Args({4000, 64});

void BM_LepskiCovariance(benchmark::State& state) {
  Rng rng(4);
  const int m = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = gaussian_rows(rng, m, 8);
  CovConfig cfg;
  cfg.beta = 2.0;
  cfg.mom.beta = 2.0;
  cfg.sigma_min = 0.3;
  cfg.sigma_max = 30.0;
  for (auto _ : state) {
    LepskiResult r = lepski_covariance(x, cfg);
    benchmark::DoNotOptimize(r.trace.chosen_index);
  }
}
BENCHMARK(BM_LepskiCovariance)->Arg(1000)->Arg(8000);

void BM_GeometricMedian(benchmark::State& state) {
  Rng rng(5);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i) {
    Eigen::VectorXd p(16);
    for (int j = 0; j < 16; ++j) p[j] = rng.normal();
    pts.push_back(p);
  }
  for (auto _ : state) {
    GeometricMedianResult r = geometric_median(pts, 1e-9, 500);
    benchmark::DoNotOptimize(r.point.data());
  }
}
BENCHMARK(BM_GeometricMedian)->Arg(8)->Arg(64);

void BM_SoftThresholdEstimator(benchmark::State& state) {
  Rng rng(6);
  const int d = static_cast<int>(state.range(0));
  EllipticalSpec design;
  design.dim = d;
  design.radial = RadialLaw::SymmetrizedPareto;
  design.pareto_q = 2.1;
  const Eigen::MatrixXd x = sample_elliptical(rng, design, 128);
  Eigen::VectorXd y(128);
  for (int i = 0; i < 128; ++i) y[i] = rng.normal() > 0 ? 1.0 : -1.0;
  SingleIndexConfig cfg;
  cfg.kappa = 0.05;
  cfg.trunc_scale = 0.01;
  cfg.lambda = 0.05;
  for (auto _ : state) {
    EstimateReport r = estimate_unconstrained(x, y, cfg);
    benchmark::DoNotOptimize(r.theta.data());
  }
}
BENCHMARK(BM_SoftThresholdEstimator)->Arg(128)->Arg(512);

void BM_LassoFit(benchmark::State& state) {
  Rng rng(7);
  const int n = 128, d = static_cast<int>(state.range(0));
  EllipticalSpec design;
  design.dim = d;
  design.radial = RadialLaw::SymmetrizedPareto;
  design.pareto_q = 2.1;
  const Eigen::MatrixXd x = sample_elliptical(rng, design, n);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal() > 0 ? 1.0 : -1.0;
  GlmConfig cfg;
  cfg.lambda = 0.05 * std::sqrt((1.0 + std::log(static_cast<double>(d))) / n);
  cfg.tol = 1e-6;
  cfg.max_iter = 2000;
  cfg.accelerate = state.range(1) != 0;
  for (auto _ : state) {
    EstimateReport r = fit_lasso_baseline(x, y, cfg);
    benchmark::DoNotOptimize(r.theta.data());
  }
}
BENCHMARK(BM_LassoFit)->Args({512, 0})->Args({512, 1});

}  // namespace

BENCHMARK_MAIN();
