// Serial reference vs OpenMP kernels on retrieval-sized inputs.

#include <benchmark/benchmark.h>

#include <random>

#include "ol/kernels/kernels.hpp"

namespace {

ol::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  ol::Matrix m(rows, cols);
  for (auto& x : m.data()) x = d(rng);
  return m;
}

template <void (*Fn)(std::span<const double>, const ol::Matrix&, std::span<double>)>
void BM_cosine(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto bank = random_matrix(rows, 64, 1);
  const auto q = random_matrix(1, 64, 2);
  std::vector<double> out(rows);
  for (auto _ : state) {
    Fn(q.data(), bank, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

template <ol::Matrix (*Fn)(const ol::Matrix&, std::size_t, std::size_t)>
void BM_group_mean(benchmark::State& state) {
  const auto frames = static_cast<std::size_t>(state.range(0));
  const auto tokens = random_matrix(frames * 16, 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(tokens, 16, 4));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames * 16));
}

template <ol::Vector (*Fn)(const ol::Matrix&)>
void BM_column_mean(benchmark::State& state) {
  const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(m));
}

}  // namespace

BENCHMARK(BM_cosine<ol::kernels::serial::cosine_scores>)->Name("cosine/serial")->Range(64, 1 << 16);
BENCHMARK(BM_cosine<ol::kernels::parallel::cosine_scores>)->Name("cosine/parallel")->Range(64, 1 << 16);
BENCHMARK(BM_group_mean<ol::kernels::serial::group_mean>)->Name("group_mean/serial")->Range(16, 4096);
BENCHMARK(BM_group_mean<ol::kernels::parallel::group_mean>)->Name("group_mean/parallel")->Range(16, 4096);
BENCHMARK(BM_column_mean<ol::kernels::serial::column_mean>)->Name("column_mean/serial")->Range(64, 1 << 16);
BENCHMARK(BM_column_mean<ol::kernels::parallel::column_mean>)->Name("column_mean/parallel")->Range(64, 1 << 16);

BENCHMARK_MAIN();
