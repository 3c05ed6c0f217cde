#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "gcdro/dro.hpp"

using namespace gcdro;

static void BM_GreedyGroupWeights(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(0.01, 1.0);
    std::vector<double> raw(m), losses(m);
    for (std::size_t g = 0; g < m; ++g) {
        raw[g] = unit(rng);
        losses[g] = unit(rng);
    }
    const auto prior = normalize_simplex(raw);
    for (auto _ : state) benchmark::DoNotOptimize(greedy_group_weights(prior, losses, 0.2));
}
BENCHMARK(BM_GreedyGroupWeights)->Arg(4)->Arg(64)->Arg(1024);

static void BM_ConditionalWeights(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(0.0, 3.0);
    std::vector<double> losses(n);
    for (double& l : losses) l = unit(rng);
    std::vector<std::int64_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (auto _ : state) benchmark::DoNotOptimize(gc_conditional_weights(losses, ids, 4 * n, 0.5));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ConditionalWeights)->Arg(1000)->Arg(100000);
