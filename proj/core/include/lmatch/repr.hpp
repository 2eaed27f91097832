#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lmatch/codebook.hpp"
#include "lmatch/featbank.hpp"
#include "lmatch/grid.hpp"

namespace lmatch {

// Fixed random context geometry shared by training and inference.
struct RectangleSet {
    std::vector<Rectangle> rects;
    std::uint64_t seed = 0;
    int max_extent = 0;
    bool operator==(const RectangleSet&) const = default;
};

// First rectangle is always the 1x1 rectangle on the anchor; the rest have
// top-left offsets uniform in [-max_extent, max_extent]^2 and log-uniform
// sizes in [1, max_extent].
RectangleSet sample_rectangles(std::uint64_t seed, int count = 200, int max_extent = 100);

enum class FamilyType : std::uint8_t { BagOfWords = 0, Average = 1 };

// One block of feature channels: either soft visual-word occurrences of a
// descriptor family or averaged raw filter-bank responses.
struct FamilySpec {
    FamilyType type = FamilyType::Average;
    DescriptorKind descriptor = DescriptorKind::FilterBank17;
    int channels = 17;
    int factor = 1;
    bool operator==(const FamilySpec&) const = default;
};

struct RepresentationConfig {
    std::vector<DescriptorKind> bow_families{DescriptorKind::FilterBank17, DescriptorKind::DenseSift,
                                             DescriptorKind::Lqtp, DescriptorKind::SelfSimilarity};
    int bow_factor = 4;
    bool average_features = true;
    DescriptorParams descriptor_params;
};

// Families in feature-index order: BoW families in configured order, then the
// average-feature family. Channel counts come from the codebooks.
std::vector<FamilySpec> family_layout(const RepresentationConfig& cfg, const std::vector<Codebook>& codebooks);

struct FeatureIndex {
    std::uint16_t rect = 0;
    std::uint8_t family = 0;
    std::uint16_t channel = 0;
    bool operator==(const FeatureIndex&) const = default;
};

// Enumerates the (sum_family channels) x |R| feature dimensions.
class FeatureSpace {
public:
    FeatureSpace() = default;
    FeatureSpace(std::vector<FamilySpec> families, std::size_t rect_count);

    const std::vector<FamilySpec>& families() const { return families_; }
    std::size_t rect_count() const { return rect_count_; }
    std::size_t channels_per_rect() const { return channels_per_rect_; }
    std::size_t size() const { return channels_per_rect_ * rect_count_; }

    std::uint64_t ordinal(const FeatureIndex& idx) const;
    FeatureIndex decode(std::uint64_t ordinal) const;
    bool valid(const FeatureIndex& idx) const;

private:
    std::vector<FamilySpec> families_;
    std::vector<std::size_t> offsets_;
    std::size_t rect_count_ = 0;
    std::size_t channels_per_rect_ = 0;
};

class ImageRepresentation {
public:
    struct Family {
        FamilySpec spec;
        IntegralGrid grid;
    };

    ImageRepresentation() = default;
    ImageRepresentation(int width, int height, std::vector<Family> families)
        : width_(width), height_(height), families_(std::move(families))
    {
    }

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<Family>& families() const { return families_; }
    const Family& family(std::size_t i) const { return families_[i]; }
    // CIELab colours of the source image, kept for the regulariser.
    const Image& lab() const { return lab_; }
    void set_lab(Image lab) { lab_ = std::move(lab); }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Family> families_;
    Image lab_;
};

// Builds BoW integral grids (sub-sampled) over soft word assignments and a
// full-resolution grid over the 17 filter-bank responses. `rgb` is sRGB in [0,1].
ImageRepresentation build_representation(const Image& rgb, const std::vector<Codebook>& codebooks,
                                         const RepresentationConfig& cfg);

// Builds a representation directly from per-family accumulator rasters
// (one image per family, channel count matching the spec).
ImageRepresentation representation_from_planes(int width, int height, const std::vector<FamilySpec>& families,
                                               const std::vector<Image>& planes);

struct AlignedRects {
    Rectangle first;
    Rectangle second;
    bool empty = false;
};

// Clips r placed at anchor1 in an image of size dims1 and at anchor2 in dims2
// with the union of both clippings, so both keep the same anchor-relative shape.
AlignedRects crop_align(const Rectangle& r, PixelCoord anchor1, PixelCoord anchor2, PixelCoord dims1,
                        PixelCoord dims2);

// One dimension of Phi^r(I1, x1) - Phi^r(I2, x2): area-normalised rectangle
// sums (word densities or mean responses) after crop alignment. Returns 0 when
// the aligned rectangle is empty.
double feature_diff(const RectangleSet& rects, const ImageRepresentation& rep1, const ImageRepresentation& rep2,
                    PixelCoord x1, PixelCoord x2, const FeatureIndex& idx, bool absolute = false);

} // namespace lmatch
