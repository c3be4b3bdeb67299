#include <benchmark/benchmark.h>

#include <torch/torch.h>

#include "gdgan/gan_losses.hpp"
#include "gdgan/gan_nets.hpp"
#include "gdgan/rng.hpp"

using namespace gdgan;

static void BM_CriticForward(benchmark::State& state) {
    const int width = static_cast<int>(state.range(0));
    Critic critic(width, std::vector<int>{2, 2}, 14);
    const auto x = torch::rand({32, 1, 64, 64}) * 2 - 1;
    torch::NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(critic->forward(x).score.data_ptr<float>());
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_CriticForward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_GradientPenalty(benchmark::State& state) {
    const int width = static_cast<int>(state.range(0));
    Critic critic(width, std::vector<int>{2, 2}, 14);
    auto gen = make_torch_generator(1);
    const auto real = torch::rand({32, 1, 64, 64}) * 2 - 1;
    const auto fake = torch::rand({32, 1, 64, 64}) * 2 - 1;
    for (auto _ : state) {
        auto gp = gradient_penalty(critic, real, fake, gen);
        gp.backward();
        benchmark::DoNotOptimize(gp.item<float>());
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_GradientPenalty)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
