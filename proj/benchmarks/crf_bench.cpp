#include <benchmark/benchmark.h>

#include "polyner/crf.hpp"
#include "polyner/rng.hpp"
#include "polyner/tensor.hpp"

using namespace polyner;

namespace {

CrfPotentials make_potentials(std::size_t T, std::size_t L) {
  RngStream rng(1, "bench-potentials");
  auto fill = [&](std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    std::vector<double> v(n);
    for (double& x : v) x = rng.next_double(-2.0, 2.0);
    return Tensor::from_values(shape, v);
  };
  return CrfPotentials{fill({T, L}), fill({L, L}), fill({L}), fill({L})};
}

std::vector<int> make_gold(std::size_t T, std::size_t L) {
  RngStream rng(2, "bench-gold");
  std::vector<int> gold(T);
  for (int& y : gold) y = static_cast<int>(rng.next_index(L));
  return gold;
}

}  // namespace

static void BM_LogPartition(benchmark::State& state) {
  auto pot = make_potentials(static_cast<std::size_t>(state.range(0)),
                             static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(log_partition(pot));
}
BENCHMARK(BM_LogPartition)->Args({10, 5})->Args({40, 5})->Args({40, 9})->Args({120, 9});

static void BM_LogLikelihoodWithGrad(benchmark::State& state) {
  std::size_t T = static_cast<std::size_t>(state.range(0));
  std::size_t L = static_cast<std::size_t>(state.range(1));
  auto pot = make_potentials(T, L);
  auto gold = make_gold(T, L);
  CrfGrad grad;
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(pot, gold, &grad));
}
BENCHMARK(BM_LogLikelihoodWithGrad)->Args({10, 5})->Args({40, 5})->Args({40, 9})->Args({120, 9});

static void BM_Viterbi(benchmark::State& state) {
  auto pot = make_potentials(static_cast<std::size_t>(state.range(0)),
                             static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(viterbi(pot));
}
BENCHMARK(BM_Viterbi)->Args({10, 5})->Args({40, 5})->Args({40, 9})->Args({120, 9});

static void BM_Marginals(benchmark::State& state) {
  auto pot = make_potentials(static_cast<std::size_t>(state.range(0)),
                             static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(marginals(pot));
}
BENCHMARK(BM_Marginals)->Args({10, 5})->Args({40, 5})->Args({40, 9});

static void BM_SamplePosterior(benchmark::State& state) {
  auto pot = make_potentials(static_cast<std::size_t>(state.range(0)), 5);
  RngStream rng(3, "bench-sample");
  std::size_t n = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(sample_posterior(pot, rng, n));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(1));
}
BENCHMARK(BM_SamplePosterior)->Args({10, 1})->Args({10, 100})->Args({40, 100});

BENCHMARK_MAIN();
