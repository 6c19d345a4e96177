#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cseal/evidential.hpp"
#include "cseal/metrics.hpp"
#include "cseal/special_functions.hpp"

namespace {

std::vector<double> log_uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  std::vector<double> v(n);
  for (double& x : v) x = std::exp(u(rng));
  return v;
}

void BM_Digamma(benchmark::State& state) {
  const std::vector<double> xs = log_uniform(1024, 1e-3, 1e4, 1);
  for (auto _ : state) {
    double acc = 0.0;
    for (const double x : xs) acc += cseal::special::digamma(x);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_Digamma);

void BM_Lgamma(benchmark::State& state) {
  const std::vector<double> xs = log_uniform(1024, 1e-3, 1e4, 2);
  for (auto _ : state) {
    double acc = 0.0;
    for (const double x : xs) acc += cseal::special::lgamma(x);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_Lgamma);

// One pool-scoring pass: per-class AU for 14 classes, then the image mean.
void BM_ImageUncertainty(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0));
  const std::vector<double> a = log_uniform(rows * 14, 1.0, 500.0, 3);
  const std::vector<double> b = log_uniform(rows * 14, 1.0, 500.0, 4);
  std::vector<double> per_class(14);
  for (auto _ : state) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t k = 0; k < 14; ++k) {
        per_class[k] = cseal::evidential::aleatoric_uncertainty({a[i * 14 + k], b[i * 14 + k]});
      }
      acc += cseal::evidential::image_uncertainty(per_class, cseal::evidential::Aggregation::Mean);
    }
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_ImageUncertainty)->Arg(1000)->Arg(19000);

void BM_Auroc(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = u(rng);
    y[i] = u(rng) < 0.1 ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(cseal::metrics::auroc(s, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auroc)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity(benchmark::oNLogN);

}  // namespace
