#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "liketrack/corrfilter.hpp"
#include "liketrack/features.hpp"
#include "liketrack/likelihood.hpp"
#include "liketrack/pfilter.hpp"
#include "liketrack/sequences.hpp"

namespace {

using namespace liketrack;

SynthSpec bench_spec() {
    SynthSpec s;
    s.name = "bench";
    s.frames = 40;
    s.waypoints = {{0, 100, 120}, {39, 180, 120}};
    return s;
}

void BM_ExtractFeatures(benchmark::State& state) {
    const Sequence seq = generate_synthetic(bench_spec(), 1);
    ExtractorConfig cfg;
    cfg.feature_size = static_cast<int>(state.range(0));
    const BoundingBox box = (*seq.ground_truth)[0];
    for (auto _ : state) {
        benchmark::DoNotOptimize(features_at(seq.frames[0], box, cfg));
    }
}
BENCHMARK(BM_ExtractFeatures)->Arg(32)->Arg(48)->Arg(64);

void BM_Respond(benchmark::State& state) {
    const Sequence seq = generate_synthetic(bench_spec(), 1);
    ExtractorConfig fcfg;
    fcfg.feature_size = static_cast<int>(state.range(0));
    const FeaturePyramid p = features_at(seq.frames[0], (*seq.ground_truth)[0], fcfg);
    const CorrelationModel model = train_model(p, {});
    for (auto _ : state) {
        benchmark::DoNotOptimize(respond(model, p));
    }
}
BENCHMARK(BM_Respond)->Arg(32)->Arg(48)->Arg(64);

void BM_EstimateLikelihood(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::vector<double> s(static_cast<std::size_t>(n) * n);
    for (int m = 0; m < n; ++m) {
        for (int q = 0; q < n; ++q) {
            const double a = (m - n / 2.0) / 2.5;
            const double b = (q - n / 2.0) / 2.5;
            const double c = (m - n / 4.0) / 1.5;
            const double d = (q - n / 4.0) / 3.0;
            s[static_cast<std::size_t>(m) * n + q] = std::exp(-0.5 * (a * a + b * b)) + 0.7 * std::exp(-0.5 * (c * c + d * d));
        }
    }
    const ResponseMap map(n, n, std::move(s));
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_likelihood(map, {}));
    }
}
BENCHMARK(BM_EstimateLikelihood)->Arg(24)->Arg(48);

void BM_TrackFrame(benchmark::State& state) {
    const Sequence seq = generate_synthetic(bench_spec(), 1);
    TrackerConfig cfg;
    cfg.pf.particles = static_cast<int>(state.range(0));
    cfg.pf.proposal = state.range(1) == 0 ? Proposal::Likelihood : Proposal::Transition;
    const TrackerState init = initialize_tracker(seq.frames[0], (*seq.ground_truth)[0], cfg);
    Rng rng(1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cfg.pf.proposal == Proposal::Likelihood
                                     ? track_frame(seq.frames[1], init, cfg, rng)
                                     : track_frame_baseline(seq.frames[1], init, cfg, rng));
    }
}
BENCHMARK(BM_TrackFrame)->Args({100, 0})->Args({100, 1})->Args({300, 0})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
