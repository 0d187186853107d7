#include <benchmark/benchmark.h>

#include "spectral/construction.hpp"
#include "spectral/datasets.hpp"
#include "spectral/train.hpp"
#include "spectral/transformer.hpp"

using namespace spectral;

static Arch arch_for(std::size_t n) {
    Arch a;
    a.layers = 2;
    a.heads = 2;
    a.embed = 32;
    a.hidden = 32;
    a.out_rows = 4;
    a.out_cols = 1;
    a.tokens = n;
    return a;
}

static void BM_Forward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    const TransformerParams p = init_params(arch_for(n), 1.0, rng);
    Mat h(32, n);
    for (double& v : h.data()) v = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(tf_forward(p, h));
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(64)->Arg(256);

static void BM_ForwardBackward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(4);
    const TransformerParams p = init_params(arch_for(n), 1.0, rng);
    Mat h(32, n);
    for (double& v : h.data()) v = rng.normal();
    for (auto _ : state) {
        const ForwardTrace tr = tf_forward_trace(p, h);
        Mat dout(tr.output.rows(), tr.output.cols(), 1.0);
        benchmark::DoNotOptimize(backward(p, tr, h, dout));
    }
}
BENCHMARK(BM_ForwardBackward)->Arg(8)->Arg(64);

static void BM_ConstructedPca(benchmark::State& state) {
    const std::size_t d = 4, n = 8, k = 1;
    Rng rng(5);
    const Mat x = gen_synthetic_pca(d, n, rng);
    const AuxMatrix aux = build_aux_pca(d, n, k, rng);
    ConstructionConfig cfg;
    const SpectralResult o = eigh_oracle(matmul_nt(x, x), k);
    cfg.lambda_hi = 1.5 * o.eigvals[0];
    cfg.lambda_lo = 0.5 * o.eigvals[0];
    const TransformerParams p = build_pca_network(d, n, k, cfg, aux.layout);
    const Episode ep = make_episode(x, aux.p, aux.layout);
    for (auto _ : state) benchmark::DoNotOptimize(tf_forward(p, ep));
}
BENCHMARK(BM_ConstructedPca);
