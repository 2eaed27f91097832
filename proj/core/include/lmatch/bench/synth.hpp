#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "lmatch/bench/dataset.hpp"

namespace lmatch::bench {

enum class SynthKind { ShiftStereo, PlaneScene, TwoPlane, FlowShift, ChangePaste };

std::string_view to_string(SynthKind kind);
SynthKind synth_kind_from_string(std::string_view name);
Task synth_task(SynthKind kind);

struct SynthParams {
    int width = 64;
    int height = 48;
    int shift = 5;                       // shift-stereo disparity
    std::vector<int> shifts;             // if set, pair i of a dataset uses shifts[i % n]
    std::array<int, 2> flow{2, -1};      // flow-shift displacement
    std::vector<std::array<int, 2>> flows;
    std::array<double, 3> plane{0.05, 0.02, 4.0};   // d = a x + b y + c
    std::array<double, 3> plane2{-0.03, 0.0, 10.0}; // right half of two-plane
    double noise = 0.0;                  // additive Gaussian noise std, [0, 1] units
    int blocks = 1;                      // change-paste
    int block_min = 12;
    int block_max = 24;
    double gain_jitter = 0.15;           // per-channel global gain in 1 +- jitter
    double offset_jitter = 0.08;         // per-channel global offset in +- jitter
    double contrast = 0.35;
};

// Band-limited random colour texture defined on the whole plane, so shifted
// or warped views are sampled from the same underlying signal. Values in [0, 1].
class RandomTexture {
public:
    RandomTexture(std::uint64_t seed, double contrast);
    float sample(int channel, double x, double y) const;

private:
    double lattice(int octave, int channel, std::int64_t ix, std::int64_t iy) const;
    double smooth(int octave, int channel, double x, double y) const;

    std::uint64_t seed_;
    double contrast_;
};

// One textured pair with exactly known ground truth. Images are quantised to
// 8-bit levels so they survive a PNG round trip unchanged.
DatasetPair synth_generate(SynthKind kind, const SynthParams& params, std::uint64_t seed);

// `count` pairs; pair i is generated from derive_seed(seed, i).
Dataset synth_dataset(SynthKind kind, const SynthParams& params, int count, std::uint64_t seed);

} // namespace lmatch::bench
