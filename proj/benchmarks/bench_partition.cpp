#include <benchmark/benchmark.h>

#include <random>

#include "gcdro/partition.hpp"

using namespace gcdro;

static void BM_KMeans(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::vector<double>> points(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = static_cast<double>(i % 8) * 6.0;
        points[i] = {c + noise(rng), -c + noise(rng), noise(rng)};
    }
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(points, 8, 50, 7));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(10000);
