#include "svshrink/activeset.hpp"
#include "svshrink/risk.hpp"
#include "svshrink/shrinkage.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace svshrink;

namespace {

Matrix gaussian(Index n, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Matrix A(n, m);
  for (Index i = 0; i < A.size(); ++i)
    A(i) = nd(rng);
  return A;
}

Matrix poisson_counts(Index n, Index m, double mean, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix A(n, m);
  for (Index i = 0; i < A.size(); ++i)
    A(i) = std::poisson_distribution<int>(mean)(rng);
  return A;
}

void BM_Svd(benchmark::State &state) {
  const Index n = state.range(0);
  const Matrix Y = gaussian(n, 2 * n, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(svd(Y));
}
BENCHMARK(BM_Svd)->Arg(50)->Arg(100)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_Jvp(benchmark::State &state) {
  const Index n = state.range(0);
  const Matrix Y = gaussian(n, n, 2);
  const Matrix delta = gaussian(n, n, 3);
  const SpectralEstimator est = SpectralEstimator::soft_threshold(std::sqrt(double(n)));
  const auto e = est.evaluate(Y);
  for (auto _ : state)
    benchmark::DoNotOptimize(est.jvp(e, delta));
}
BENCHMARK(BM_Jvp)->Arg(50)->Arg(100)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_GaussianWeights(benchmark::State &state) {
  const Index n = state.range(0);
  const Matrix Y = gaussian(n, n, 4);
  const Svd f = svd(Y);
  const double tau = 1.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(weights_gaussian(f, tau, leading_set(std::size_t(n))));
}
BENCHMARK(BM_GaussianWeights)->Arg(100)->Arg(500)->Unit(benchmark::kMicrosecond);

void BM_GreedyFitGamma(benchmark::State &state) {
  const Index n = state.range(0);
  const Matrix Y = gaussian(n, n, 5).cwiseAbs().array() + 0.5;
  const Svd f = svd(Y);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        optimize_weights_greedy(Y, f, Gamma{3.0}, RiskKind::SUKLS, leading_set(3), kDefaultEpsilon));
}
BENCHMARK(BM_GreedyFitGamma)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ExactPure(benchmark::State &state) {
  const Index n = state.range(0);
  const Matrix Y = poisson_counts(n, n, 5.0, 6);
  const SpectralEstimator est = SpectralEstimator::truncate(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(pure_poisson(Y, est, ExactMode{}));
}
BENCHMARK(BM_ExactPure)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
