#include <benchmark/benchmark.h>

#include <random>

#include "gcdro/datagen.hpp"
#include "gcdro/model.hpp"

using namespace gcdro;

static void BM_WeightedLossAndGrad(benchmark::State& state) {
    const Arch arch = state.range(0) ? Arch::mlp1 : Arch::linear;
    const auto data = gen_table1({1000, 0, 0.1, 0.05});
    const auto params = init_params(arch, 2, 16, 2, 3);
    std::vector<std::size_t> batch(32);
    std::vector<double> weights(32, 1.0);
    std::mt19937_64 rng(4);
    for (auto _ : state) {
        for (auto& i : batch) i = rng() % data.dataset.size();
        benchmark::DoNotOptimize(weighted_loss_and_grad(params, data.dataset, batch, weights));
    }
    state.SetLabel(std::string(to_string(arch)));
}
BENCHMARK(BM_WeightedLossAndGrad)->Arg(0)->Arg(1);
