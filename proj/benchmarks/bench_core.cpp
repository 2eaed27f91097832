#include <benchmark/benchmark.h>

#include "lmatch/boost.hpp"
#include "lmatch/crf.hpp"
#include "lmatch/grid.hpp"
#include "lmatch/matcher.hpp"
#include "lmatch/repr.hpp"
#include "lmatch/rng.hpp"

using namespace lmatch;

namespace {

Image noise_image(int w, int h, int c, std::uint64_t seed)
{
    Rng rng(seed);
    Image img(w, h, c);
    for (float& v : img.data()) v = static_cast<float>(rng.uniform());
    return img;
}

void BM_RectSum(benchmark::State& state)
{
    const int k = static_cast<int>(state.range(0));
    const auto g = IntegralGrid::build(noise_image(320, 240, 64, 1), k);
    Rng rng(2);
    std::vector<std::pair<PixelCoord, Rectangle>> q(1024);
    for (auto& [a, r] : q) {
        a = {static_cast<int>(rng.uniform_int(0, 319)), static_cast<int>(rng.uniform_int(0, 239))};
        r = {static_cast<int>(rng.uniform_int(-50, 10)), static_cast<int>(rng.uniform_int(-50, 10)),
             static_cast<int>(rng.uniform_int(1, 100)), static_cast<int>(rng.uniform_int(1, 100))};
    }
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& [a, r] = q[i++ & 1023];
        benchmark::DoNotOptimize(rect_sum(g, a, r));
    }
}
BENCHMARK(BM_RectSum)->Arg(1)->Arg(4);

void BM_IntegralBuild(benchmark::State& state)
{
    const Image img = noise_image(320, 240, static_cast<int>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(IntegralGrid::build(img, 4));
}
BENCHMARK(BM_IntegralBuild)->Arg(17)->Arg(64);

void BM_FitStump(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(4);
    std::vector<float> v(n);
    std::vector<std::int8_t> y(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = static_cast<float>(rng.normal());
        y[i] = rng.uniform() < 0.5 ? 1 : -1;
        w[i] = 1.0 / static_cast<double>(n);
    }
    const auto grid = quantile_thresholds(v);
    for (auto _ : state) benchmark::DoNotOptimize(fit_stump(v, y, w, grid));
}
BENCHMARK(BM_FitStump)->Arg(10000)->Arg(100000);

// Scoring a stereo volume with a random 200-stump model over average features.
void BM_ScoreStereo(benchmark::State& state)
{
    const int w = 96, h = 64;
    const std::vector<FamilySpec> fams{{FamilyType::Average, DescriptorKind::FilterBank17, 17, 1}};
    const auto r1 = representation_from_planes(w, h, fams, {noise_image(w, h, 17, 5)});
    const auto r2 = representation_from_planes(w, h, fams, {noise_image(w, h, 17, 6)});
    MatchingClassifier m;
    m.families = fams;
    m.rects = sample_rectangles(7, 200, 24);
    m.codebook_digests = {0};
    Rng rng(8);
    for (int s = 0; s < 200; ++s)
        m.stumps.push_back({{static_cast<std::uint16_t>(rng.uniform_int(0, 199)), 0,
                             static_cast<std::uint16_t>(rng.uniform_int(0, 16))},
                            static_cast<float>(rng.normal() * 0.1), 0.5f, -0.25f});
    for (auto _ : state) benchmark::DoNotOptimize(score_stereo(m, r1, r2, static_cast<int>(state.range(0))));
    state.SetItemsProcessed(state.iterations() * w * h * (state.range(0) + 1));
}
BENCHMARK(BM_ScoreStereo)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_MeanFieldStep(benchmark::State& state)
{
    const int w = 96, h = 64, d_max = 24;
    ScoreVolume v(w, h, CandidateSpec::stereo(d_max));
    Rng rng(9);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c <= d_max; ++c) v.at(x, y, c) = static_cast<float>(rng.normal());
    CrfConfig cfg;
    cfg.sigma_loc = static_cast<double>(state.range(0));
    const Image lab = noise_image(w, h, 3, 10);
    const auto u = unary_logits(v);
    const auto q = initial_marginals(v, u);
    const PlaneField planes(w, h, 1);
    for (auto _ : state) benchmark::DoNotOptimize(mean_field_step(q, v, u, planes, lab, cfg));
}
BENCHMARK(BM_MeanFieldStep)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
