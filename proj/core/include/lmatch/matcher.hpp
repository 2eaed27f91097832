#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "lmatch/boost.hpp"
#include "lmatch/repr.hpp"
#include "lmatch/task.hpp"

namespace lmatch {

inline constexpr float kInvalidScore = -std::numeric_limits<float>::infinity();

// H(x, candidate) for every pixel and candidate displacement. Candidates whose
// match falls outside the image hold kInvalidScore.
class ScoreVolume {
public:
    ScoreVolume() = default;
    ScoreVolume(int width, int height, CandidateSpec spec);

    int width() const { return width_; }
    int height() const { return height_; }
    const CandidateSpec& spec() const { return spec_; }
    const std::vector<Displacement>& candidates() const { return candidates_; }
    int candidate_count() const { return static_cast<int>(candidates_.size()); }

    float& at(int x, int y, int c) { return scores_[index(x, y) + c]; }
    float at(int x, int y, int c) const { return scores_[index(x, y) + c]; }
    std::span<const float> pixel(int x, int y) const { return {scores_.data() + index(x, y), candidates_.size()}; }
    std::span<float> pixel(int x, int y) { return {scores_.data() + index(x, y), candidates_.size()}; }
    std::span<const float> data() const { return scores_; }

    bool operator==(const ScoreVolume&) const = default;

private:
    std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * candidates_.size(); }

    int width_ = 0;
    int height_ = 0;
    CandidateSpec spec_;
    std::vector<Displacement> candidates_;
    std::vector<float> scores_;
};

// Scores every candidate x2 = x1 + displacement with H(I1, I2, x1, x2).
ScoreVolume score_volume(const MatchingClassifier& model, const ImageRepresentation& rep1,
                         const ImageRepresentation& rep2, const CandidateSpec& spec);

// Backward volume over pixels of I2 with the reversed spec: candidate b at x2
// scores H(I1, I2, x2 + b, x2), so the classifier keeps its image order.
ScoreVolume score_volume_backward(const MatchingClassifier& model, const ImageRepresentation& rep1,
                                  const ImageRepresentation& rep2, const CandidateSpec& forward);

// H(x, d) = H(I1, I2, x, x - (d, 0)) for d in [0, d_max].
ScoreVolume score_stereo(const MatchingClassifier& model, const ImageRepresentation& rep1,
                         const ImageRepresentation& rep2, int d_max);

// H(x, f) = H(I1, I2, x, x + f) over the window.
ScoreVolume score_flow(const MatchingClassifier& model, const ImageRepresentation& rep1,
                       const ImageRepresentation& rep2, int fx_min, int fx_max, int fy_min, int fy_max);

// H(x) = H(I1, I2, x, x).
ScoreVolume score_change(const MatchingClassifier& model, const ImageRepresentation& rep1,
                         const ImageRepresentation& rep2);

// Per-pixel winning candidate; -1 where the pixel carries no label.
struct LabelMap {
    int width = 0;
    int height = 0;
    CandidateSpec spec;
    std::vector<int> label;

    LabelMap() = default;
    LabelMap(int w, int h, CandidateSpec s) : width(w), height(h), spec(s), label(static_cast<std::size_t>(w) * h, -1) {}

    bool valid(int x, int y) const { return label[static_cast<std::size_t>(y) * width + x] >= 0; }
    int at(int x, int y) const { return label[static_cast<std::size_t>(y) * width + x]; }
    Displacement displacement(int x, int y) const;
    bool operator==(const LabelMap&) const = default;
};

// Argmax over valid candidates, ties to the smallest candidate index.
LabelMap winner_take_all(const ScoreVolume& v);

// Forward labels x -> x + f(x), backward labels x2 -> x2 + b(x2) (scored with
// the images swapped and the candidate spec reversed). A pixel survives when
// its match is in bounds, the backward label there is valid and
// |f(x) + b(x + f(x))| <= tol. tol = +inf keeps every in-bounds match.
LabelMap inverse_validate(const LabelMap& forward, const LabelMap& backward, double tol = 1.0);

// Ground-truth style conversions of a label map.
DisparityMap to_disparity(const LabelMap& labels);
FlowField to_flow(const LabelMap& labels);
// Binarises a single-candidate volume: score > threshold means "no change".
ChangeMask to_change_mask(const ScoreVolume& volume, double threshold = 0.0);

// Debug export. Layout:
//   "LMATCH-VOLUME 1\n"
//   "task <stereo|flow|change>\n" "reversed <0|1>\n"
//   "window <d_max> <fx_min> <fx_max> <fy_min> <fy_max>\n"
//   "width <W>\n" "height <H>\n" "candidates <C>\n"
//   C lines "<dx> <dy>"
//   "end\n"
//   W*H*C little-endian float32 scores, pixel-major (row-major pixels, candidates innermost).
std::vector<std::uint8_t> serialize_volume(const ScoreVolume& v);
ScoreVolume deserialize_volume(std::span<const std::uint8_t> bytes);
void save_volume(const ScoreVolume& v, const std::filesystem::path& path);
ScoreVolume load_volume(const std::filesystem::path& path);

} // namespace lmatch
