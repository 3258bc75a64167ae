#include <vector>

#include <benchmark/benchmark.h>

#include "genban/kernels.hpp"
#include "genban/mlp.hpp"
#include "genban/rng.hpp"

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    genban::RngStream rng(seed, 0, "bench");
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

// Shapes follow a training batch: m rows through a 100-wide layer.
template <bool Parallel>
void bm_gemm(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const std::size_t k = 100, n = 100;
    const auto a = random_vec(m * k, 1), b = random_vec(k * n, 2);
    std::vector<double> c(m * n);
    for (auto _ : state) {
        if constexpr (Parallel)
            genban::kernels::gemm_parallel(a.data(), b.data(), c.data(), m, k, n);
        else
            genban::kernels::gemm_serial(a.data(), b.data(), c.data(), m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * k * n));
}

template <bool Parallel>
void bm_gemm_tn(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const std::size_t k = 100, n = 100;
    const auto a = random_vec(m * k, 3), b = random_vec(m * n, 4);
    std::vector<double> c(k * n);
    for (auto _ : state) {
        if constexpr (Parallel)
            genban::kernels::gemm_tn_parallel(a.data(), b.data(), c.data(), m, k, n);
        else
            genban::kernels::gemm_tn_serial(a.data(), b.data(), c.data(), m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * k * n));
}

template <bool Parallel>
void bm_mlp_step(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    genban::Mlp net({45, 100, 100, 100, 1});
    genban::RngStream rng(5, 0, "init");
    net.init_glorot(rng);
    const auto in = random_vec(rows * 45, 6);
    const std::vector<double> dlogit(rows, 1.0 / static_cast<double>(rows));
    genban::Mlp::Cache cache;
    std::vector<double> grad;
    for (auto _ : state) {
        net.forward(in.data(), rows, cache, Parallel);
        net.backward(cache, dlogit.data(), grad, Parallel);
        benchmark::DoNotOptimize(grad.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

} // namespace

BENCHMARK(bm_gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK(bm_gemm<true>)->Name("gemm/parallel")->Arg(64)->Arg(512)->Arg(4096)->UseRealTime();
BENCHMARK(bm_gemm_tn<false>)->Name("gemm_tn/serial")->Arg(512)->Arg(4096);
BENCHMARK(bm_gemm_tn<true>)->Name("gemm_tn/parallel")->Arg(512)->Arg(4096)->UseRealTime();
BENCHMARK(bm_mlp_step<false>)->Name("mlp_step/serial")->Arg(500)->Arg(5000);
BENCHMARK(bm_mlp_step<true>)->Name("mlp_step/parallel")->Arg(500)->Arg(5000)->UseRealTime();

BENCHMARK_MAIN();
