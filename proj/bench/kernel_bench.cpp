#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "strata/kernels.hpp"
#include "strata/rouge.hpp"

namespace k = strata::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Square H x H weights, as in the decoder and attention projections.
template <auto Fn>
void BM_gemv(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto w = random_vector(n * n, 1), x = random_vector(n, 2);
  std::vector<double> y(n);
  for (auto _ : state) {
    std::fill(y.begin(), y.end(), 0.0);
    Fn(w, n, n, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

// Vocabulary projection: [V, H] x [H].
template <auto Fn>
void BM_vocab_projection(benchmark::State& state) {
  const std::size_t v = static_cast<std::size_t>(state.range(0)), h = 256;
  auto w = random_vector(v * h, 3), x = random_vector(h, 4);
  std::vector<double> y(v);
  for (auto _ : state) {
    std::fill(y.begin(), y.end(), 0.0);
    Fn(w, v, h, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(v * h));
}

// Attention memory: [N*M, H] x [A, H]^T.
template <auto Fn>
void BM_gemm_nt(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0)), h = 256;
  auto a = random_vector(rows * h, 5), b = random_vector(h * h, 6);
  std::vector<double> c(rows * h);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0);
    Fn(a, rows, h, b, h, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * h * h));
}

template <auto Fn>
void BM_ger(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto u = random_vector(n, 7), v = random_vector(n, 8);
  std::vector<double> w(n * n, 0.0);
  for (auto _ : state) {
    Fn(u, v, w);
    benchmark::DoNotOptimize(w.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Fn>
void BM_rouge_corpus(benchmark::State& state) {
  const auto docs = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(9);
  std::vector<std::vector<std::string>> cands(docs), refs(docs);
  for (std::size_t d = 0; d < docs; ++d) {
    for (int i = 0; i < 200; ++i) cands[d].push_back("t" + std::to_string(rng() % 300));
    for (int i = 0; i < 200; ++i) refs[d].push_back("t" + std::to_string(rng() % 300));
  }
  for (auto _ : state) benchmark::DoNotOptimize(Fn(cands, refs));
}

}  // namespace

BENCHMARK(BM_gemv<k::serial::gemv>)->Name("gemv/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_gemv<k::parallel::gemv>)->Name("gemv/parallel")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_gemv<k::serial::gemv_t>)->Name("gemv_t/serial")->Arg(256)->Arg(512);
BENCHMARK(BM_gemv<k::parallel::gemv_t>)->Name("gemv_t/parallel")->Arg(256)->Arg(512);
BENCHMARK(BM_vocab_projection<k::serial::gemv>)->Name("vocab_projection/serial")->Arg(5000)->Arg(50000);
BENCHMARK(BM_vocab_projection<k::parallel::gemv>)->Name("vocab_projection/parallel")->Arg(5000)->Arg(50000);
BENCHMARK(BM_gemm_nt<k::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(100)->Arg(500);
BENCHMARK(BM_gemm_nt<k::parallel::gemm_nt>)->Name("gemm_nt/parallel")->Arg(100)->Arg(500);
BENCHMARK(BM_ger<k::serial::ger>)->Name("ger/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_ger<k::parallel::ger>)->Name("ger/parallel")->Arg(256)->Arg(1024);
BENCHMARK(BM_rouge_corpus<strata::rouge::serial::score_corpus>)->Name("rouge_corpus/serial")->Arg(64);
BENCHMARK(BM_rouge_corpus<strata::rouge::parallel::score_corpus>)->Name("rouge_corpus/parallel")->Arg(64);

BENCHMARK_MAIN();
