#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "lmatch/bench/pipeline.hpp"
#include "lmatch/bench/synth.hpp"
#include "lmatch/grid.hpp"
#include "lmatch/rng.hpp"

namespace lmatch::fixtures {

inline Image random_image(int w, int h, int c, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f)
{
    Rng rng(seed);
    Image img(w, h, c);
    for (float& v : img.data()) v = static_cast<float>(rng.uniform(lo, hi));
    return img;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("lmatch_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Small end-to-end setup trained on synthetic pairs.
struct ToyModel {
    bench::ExperimentConfig cfg;
    bench::Dataset data;
    std::vector<Codebook> codebooks;
    MatchingClassifier model;
};

bench::ExperimentConfig toy_config(bench::SynthKind kind);
ToyModel train_toy(bench::SynthKind kind);

// Stereo volume over a planted plane d = c - p1 x - p2 y. Unaries peak at the
// true disparity; a `noise` fraction of pixels peaks at a random label instead.
struct PlaneScene {
    ScoreVolume volume;
    std::vector<double> truth;
    std::vector<std::uint8_t> corrupted;
};

PlaneScene planted_plane_scene(int width, int height, int d_max, double c, std::array<double, 2> p, double noise,
                               std::uint64_t seed);

// Fraction of pixels whose label is more than 1 px off the truth.
double outlier_rate_1px(const LabelMap& labels, const std::vector<double>& truth);

} // namespace lmatch::fixtures
