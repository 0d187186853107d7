#include <benchmark/benchmark.h>

#include "spectral/datasets.hpp"
#include "spectral/linalg.hpp"
#include "spectral/rng.hpp"

using namespace spectral;

static void BM_PowerMethod(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    const std::size_t k = 3;
    Rng rng(1);
    const Mat x = gen_synthetic_pca(d, 4 * d, rng);
    std::vector<Vec> init;
    for (std::size_t i = 0; i < k; ++i) init.push_back(sample_unit_sphere(d, rng));
    for (auto _ : state) benchmark::DoNotOptimize(power_method(x, 200, k, init));
}
BENCHMARK(BM_PowerMethod)->Arg(8)->Arg(32)->Arg(128);

static void BM_JacobiOracle(benchmark::State& state) {
    const auto d = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    const Mat x = gen_synthetic_pca(d, 4 * d, rng);
    const Mat a = matmul_nt(x, x);
    for (auto _ : state) benchmark::DoNotOptimize(eigh_oracle(a, 3));
}
BENCHMARK(BM_JacobiOracle)->Arg(8)->Arg(32)->Arg(64);
