#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pbfrec/signal_prep.hpp"

using namespace pbfrec;

namespace {

std::vector<double> noisy_channel(std::size_t n) {
    std::mt19937 rng(1);
    std::normal_distribution<double> noise(0.0, 0.02);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = 0.05 * static_cast<double>(i % 400) + noise(rng);
    return out;
}

void BM_LowpassFilter(benchmark::State& state) {
    const std::vector<double> channel = noisy_channel(static_cast<std::size_t>(state.range(0)));
    const FilterSpec spec{4, 6000.0, 20000.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(lowpass_filter(channel, spec));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LowpassFilter)->Arg(100000)->Arg(1000000);

void BM_NormalizeLaser(benchmark::State& state) {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> volts(0.0, 3.0);
    std::vector<double> raw(static_cast<std::size_t>(state.range(0)));
    for (double& v : raw) v = volts(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(normalize_laser(raw, {2.2, 1.1}));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NormalizeLaser)->Arg(1000000);

}  // namespace
