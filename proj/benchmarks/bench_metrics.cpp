#include <benchmark/benchmark.h>

#include "gdgan/metrics.hpp"
#include "gdgan/rng.hpp"

using namespace gdgan;

static void BM_RocCurve(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng.normal();
        labels[i] = rng.bernoulli(0.05);
    }
    labels[0] = 1;
    labels[1] = 0;
    for (auto _ : state) benchmark::DoNotOptimize(roc_curve(scores, labels).auc);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_RocCurve)->Arg(1000)->Arg(22000);

static void BM_InceptionScore(benchmark::State& state) {
    const std::size_t k = 1000, n = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    std::vector<double> p(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < k; ++j) sum += p[i * k + j] = rng.uniform() + 1e-6;
        for (std::size_t j = 0; j < k; ++j) p[i * k + j] /= sum;
    }
    for (auto _ : state) benchmark::DoNotOptimize(inception_score(p, k, 10).mean);
}
BENCHMARK(BM_InceptionScore)->Arg(1000);

static void BM_WelchTest(benchmark::State& state) {
    Rng rng(3);
    std::vector<double> a(10), b(10);
    for (auto& x : a) x = 2.12 + 0.01 * rng.normal();
    for (auto& x : b) x = 2.32 + 0.015 * rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(welch_t_test(a, b).p_two_sided);
}
BENCHMARK(BM_WelchTest);
