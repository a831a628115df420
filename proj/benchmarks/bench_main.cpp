#include <benchmark/benchmark.h>

#include "pmclass/gbdt.hpp"
#include "pmclass/hmc.hpp"
#include "pmclass/lstm.hpp"
#include "pmclass/simulator.hpp"

namespace {

using namespace pmclass;

Dataset bench_corpus() {
    static const Dataset corpus = [] {
        SessionPlan plan;
        plan.entries = {{PollutantLabel::Background, 120},
                        {PollutantLabel::Ash, 120},
                        {PollutantLabel::Sand, 120},
                        {PollutantLabel::Candle, 120}};
        return generate_corpus(plan, default_profiles(), 7);
    }();
    return corpus;
}

void BM_ComputeRatios(benchmark::State& state) {
    const auto corpus = bench_corpus();
    const auto& frames = corpus.sequences[0].frames;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_ratios(frames[i]));
        i = (i + 1) % frames.size();
    }
}
BENCHMARK(BM_ComputeRatios);

void BM_HmcForwardStep(benchmark::State& state) {
    const auto corpus = bench_corpus();
    const auto model = train_hmc(corpus, {1e-6, {50, 0.01}}).model;
    const auto& frames = corpus.sequences[0].frames;
    ForwardState forward = forward_init(model, compute_ratios(frames[0]));
    std::size_t i = 1;
    for (auto _ : state) {
        forward = forward_step(model, forward, compute_ratios(frames[i]));
        benchmark::DoNotOptimize(forward.alpha);
        i = (i + 1) % frames.size();
        if (i == 0) i = 1;
    }
}
BENCHMARK(BM_HmcForwardStep);

void BM_LstmStep(benchmark::State& state) {
    const auto corpus = bench_corpus();
    const auto model = LstmModel::init(kNumFeatures, 50, 11);
    const auto& frames = corpus.sequences[0].frames;
    LstmState lstm_state(model.hidden_dim);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lstm_step(model, lstm_state, compute_ratios(frames[i])));
        i = (i + 1) % frames.size();
    }
}
BENCHMARK(BM_LstmStep);

void BM_GbdtPredict(benchmark::State& state) {
    const auto corpus = bench_corpus();
    GbdtOptions options;
    options.rounds = 25;
    const auto model = train_gbdt(corpus, options).model;
    const auto& frames = corpus.sequences[0].frames;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.predict_proba(compute_ratios(frames[i])));
        i = (i + 1) % frames.size();
    }
}
BENCHMARK(BM_GbdtPredict);

}  // namespace

BENCHMARK_MAIN();
