#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lmatch/codebook.hpp"
#include "lmatch/repr.hpp"
#include "lmatch/task.hpp"

namespace lmatch {

struct TrainSample {
    std::uint32_t pair = 0;
    PixelCoord x1;
    PixelCoord x2;
    std::int8_t label = 1; // +1 match, -1 non-match
    double weight = 0.0;
};

struct SamplingOptions {
    int neg_ratio = 50;
    // Negatives never land within this Chebyshev distance of the true match.
    int exclusion_radius = 1;
    // Keep every n-th labelled pixel as a positive (1 keeps all).
    int positive_stride = 1;
};

// Positives at ground-truth correspondences, neg_ratio uniformly drawn
// non-matching candidates per positive (stereo/flow) or mask-labelled pixels
// (change). Class weights are set so both classes sum to 1/2.
std::vector<TrainSample> assemble_samples(const std::vector<GroundTruth>& truths, const CandidateSpec& candidates,
                                          const SamplingOptions& options, std::uint64_t seed);

struct StumpFit {
    double theta = 0.0;
    double a = 0.0;
    double b = 0.0;
    double error = 0.0;
    bool degenerate = false;
};

inline constexpr int kThresholdCandidates = 64;

// Up to `count` distinct thresholds: the order statistics at ranks floor(q n / count).
std::vector<float> quantile_thresholds(std::span<const float> values, int count = kThresholdCandidates);

// Weighted least-squares stump h(v) = a [v > theta] + b over the threshold
// grid. Ties on error keep the smallest theta. Thresholds leaving one side
// empty are skipped; if all are, the stump degenerates to a = 0, b = mean(y).
StumpFit fit_stump(std::span<const float> values, std::span<const std::int8_t> targets,
                   std::span<const double> weights, std::span<const float> thresholds);

struct WeakStump {
    FeatureIndex index;
    float theta = 0.0f;
    float a = 0.0f;
    float b = 0.0f;

    double respond(float v) const { return v > theta ? static_cast<double>(a) + b : static_cast<double>(b); }
    bool operator==(const WeakStump&) const = default;
};

struct TrainingMeta {
    std::uint64_t seed = 0;
    int neg_ratio = 50;
    int dims_per_round = 400;
    int rounds = 0;
    Task task = Task::Stereo;
    bool operator==(const TrainingMeta&) const = default;
};

// H(I1, I2, x1, x2): ordered sum of decision stumps over difference features.
struct MatchingClassifier {
    std::vector<WeakStump> stumps;
    RectangleSet rects;
    std::vector<FamilySpec> families;
    DescriptorParams descriptor_params;
    std::vector<std::uint64_t> codebook_digests; // per family, 0 for the average family
    bool absolute = false;
    TrainingMeta meta;

    FeatureSpace feature_space() const { return {families, rects.rects.size()}; }
    RepresentationConfig representation_config() const;
};

double evaluate(const MatchingClassifier& model, const ImageRepresentation& rep1, const ImageRepresentation& rep2,
                PixelCoord x1, PixelCoord x2);

// Feature value as consumed by stumps (rounded to float, the stored precision).
inline float stump_feature(const MatchingClassifier& model, const ImageRepresentation& rep1,
                           const ImageRepresentation& rep2, PixelCoord x1, PixelCoord x2, const FeatureIndex& idx)
{
    return static_cast<float>(feature_diff(model.rects, rep1, rep2, x1, x2, idx, model.absolute));
}

struct BoostOptions {
    int rounds = 5000;
    int dims_per_round = 400;
    int thresholds = kThresholdCandidates;
    bool absolute = false;
    std::uint64_t seed = 0;
};

struct TrainingTrace {
    std::vector<double> loss;       // sum_i w0_i exp(-y_i H(x_i)) after each round (index 0 = before training)
    std::vector<double> weight_sum; // sum of weights after each renormalisation
};

// Gentle AdaBoost over lazily evaluated difference features. Each rep pair
// (reps1[p], reps2[p]) belongs to sample.pair == p. Sample weights are taken
// as the initial distribution (they are normalised first).
MatchingClassifier train(std::vector<TrainSample> samples, const std::vector<ImageRepresentation>& reps1,
                         const std::vector<ImageRepresentation>& reps2, const RectangleSet& rects,
                         const std::vector<FamilySpec>& families, const BoostOptions& options,
                         TrainingTrace* trace = nullptr);

// Model file. Layout:
//   "LMATCH-MODEL 1\n"
//   one line of JSON: families, descriptor params, codebook digests, rectangle
//   set, absolute flag and training metadata
//   "stumps <M>\n"
//   M records of 17 bytes, little-endian:
//     u8 family, u16 rect, u16 channel, f32 theta, f32 a, f32 b
std::vector<std::uint8_t> serialize_model(const MatchingClassifier& model);
MatchingClassifier deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const MatchingClassifier& model, const std::filesystem::path& path);
MatchingClassifier load_model(const std::filesystem::path& path);

} // namespace lmatch
