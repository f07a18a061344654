#include "physec/auth.hpp"
#include "physec/channel.hpp"
#include "physec/eval.hpp"
#include "physec/gmm.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace physec;

namespace {

Matrix two_clusters(Eigen::Index n, Eigen::Index dim) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix data(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) data(i, j) = normal(rng) + (i % 2 ? 4.0 : 0.0);
    return data;
}

void BM_EStep(benchmark::State& state) {
    const auto dim = state.range(0);
    const Matrix data = two_clusters(1000, dim);
    const GmmModel model = initialize(data, 2, InitStrategy::kmeans_pp, 1);
    for (auto _ : state) benchmark::DoNotOptimize(e_step(model, data));
    state.SetItemsProcessed(state.iterations() * data.rows());
}
BENCHMARK(BM_EStep)->Arg(3)->Arg(12)->Arg(48);

void BM_Fit(benchmark::State& state) {
    const auto dim = state.range(0);
    const Matrix data = two_clusters(1000, dim);
    FitOptions o;
    o.init = InitStrategy::kmeans_pp;
    for (auto _ : state) benchmark::DoNotOptimize(fit(data, 2, o));
}
BENCHMARK(BM_Fit)->Arg(3)->Arg(12)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_ObserveEstimate(benchmark::State& state) {
    const ChannelProfile profile;
    const auto h = generate_true_channel(profile, 1);
    std::mt19937_64 rng(2);
    for (auto _ : state) benchmark::DoNotOptimize(observe_estimate(h, {20.0}, profile, 48, rng));
}
BENCHMARK(BM_ObserveEstimate);

void BM_LinkDrift(benchmark::State& state) {
    ChannelProfile profile;
    profile.drift_rho = 0.99;
    LinkChannel link(profile, 1);
    for (auto _ : state) {
        link.advance();
        benchmark::DoNotOptimize(link.response());
    }
}
BENCHMARK(BM_LinkDrift);

void BM_ClassifyStream(benchmark::State& state) {
    ExperimentConfig c;
    c.num_test_blocks = 2;
    c.m_subcarriers = static_cast<std::size_t>(state.range(0));
    const auto stream = build_stream(c);
    for (auto _ : state) benchmark::DoNotOptimize(run_experiment(stream, c, DetectorKind::gmm, 0.5));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.test.size()));
}
BENCHMARK(BM_ClassifyStream)->Arg(3)->Arg(48)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
