#include "support.hpp"

#include <cmath>

namespace lmatch::fixtures {

bench::ExperimentConfig toy_config(bench::SynthKind kind)
{
    bench::ExperimentConfig cfg;
    cfg.task = bench::synth_task(kind);
    cfg.seed = 11;
    cfg.synth_kind = kind;
    cfg.synth_pairs = 4;
    cfg.synth.width = 64;
    cfg.synth.height = 48;
    cfg.synth.shifts = {1, 2, 3, 4, 5, 6, 7, 8};
    cfg.synth.flows = {{2, -1}, {-3, 1}, {1, 3}, {-2, -2}};
    cfg.d_max = 10;
    cfg.fx_min = cfg.fy_min = -4;
    cfg.fx_max = cfg.fy_max = 4;
    cfg.flow_downsample = 1;
    cfg.codebook.words = 16;
    cfg.codebook.max_samples = 1500;
    cfg.representation.bow_families = {DescriptorKind::FilterBank17, DescriptorKind::SelfSimilarity};
    cfg.rect_count = 40;
    cfg.rect_max_extent = 12;
    cfg.sampling.neg_ratio = 8;
    cfg.sampling.positive_stride = 3;
    cfg.boost.rounds = 60;
    cfg.boost.dims_per_round = 60;
    return cfg;
}

ToyModel train_toy(bench::SynthKind kind)
{
    ToyModel t;
    t.cfg = toy_config(kind);
    t.data = bench::synth_dataset(kind, t.cfg.synth, t.cfg.synth_pairs, t.cfg.seed);
    t.codebooks = bench::train_codebooks(t.data, t.cfg);
    t.model = bench::train_model(t.data, t.codebooks, t.cfg);
    return t;
}

} // namespace lmatch::fixtures

namespace lmatch::fixtures {

PlaneScene planted_plane_scene(int width, int height, int d_max, double c, std::array<double, 2> p, double noise,
                               std::uint64_t seed)
{
    PlaneScene s;
    s.volume = ScoreVolume(width, height, CandidateSpec::stereo(d_max));
    s.truth.resize(static_cast<std::size_t>(width) * height);
    s.corrupted.assign(s.truth.size(), 0);
    Rng rng(seed);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            const double d = c - p[0] * x - p[1] * y;
            s.truth[i] = d;
            double peak = d;
            if (rng.uniform() < noise) {
                s.corrupted[i] = 1;
                do {
                    peak = static_cast<double>(rng.uniform_int(0, d_max));
                } while (std::abs(peak - d) <= 1.5);
            }
            for (int k = 0; k <= d_max; ++k)
                s.volume.at(x, y, k) = static_cast<float>(2.0 * std::exp(-(k - peak) * (k - peak) / 2.0));
        }
    return s;
}

double outlier_rate_1px(const LabelMap& labels, const std::vector<double>& truth)
{
    int bad = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        bad += labels.label[i] < 0 || std::abs(labels.label[i] - truth[i]) > 1.0;
    return static_cast<double>(bad) / static_cast<double>(truth.size());
}

} // namespace lmatch::fixtures
