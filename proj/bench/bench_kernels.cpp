// Serial reference vs OpenMP kernels at the shapes the pretraining loop uses:
// a 256-query batch against 768 bank entries of width 128, and the encoder's
// hidden-layer products.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "diul/kernels.hpp"

namespace {

std::vector<double> random_buffer(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

template <auto Kernel>
void BM_MatmulNT(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const std::size_t k = 128;
  const auto a = random_buffer(m * k, 1), b = random_buffer(n * k, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    Kernel(a, b, c, m, k, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * n * k));
}

template <auto Kernel>
void BM_MatmulNN(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 64, n = 64;
  const auto a = random_buffer(m * k, 3), b = random_buffer(k * n, 4);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    Kernel(a, b, c, m, k, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * n * k));
}

template <auto Kernel>
void BM_RowLogSumExp(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 769;
  const auto x = random_buffer(m * n, 5);
  std::vector<double> out(m);
  for (auto _ : state) {
    Kernel(x, out, m, n);
    benchmark::DoNotOptimize(out.data());
  }
}

namespace ks = diul::kernels::serial;
namespace kp = diul::kernels::parallel;

BENCHMARK_TEMPLATE(BM_MatmulNT, ks::matmul_nt)->Args({256, 768})->Args({64, 256});
BENCHMARK_TEMPLATE(BM_MatmulNT, kp::matmul_nt)->Args({256, 768})->Args({64, 256});
BENCHMARK_TEMPLATE(BM_MatmulNN, ks::matmul_nn)->Arg(256)->Arg(2048);
BENCHMARK_TEMPLATE(BM_MatmulNN, kp::matmul_nn)->Arg(256)->Arg(2048);
BENCHMARK_TEMPLATE(BM_RowLogSumExp, ks::row_log_sum_exp)->Arg(256);
BENCHMARK_TEMPLATE(BM_RowLogSumExp, kp::row_log_sum_exp)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
