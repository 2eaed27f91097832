#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmatch/grid.hpp"

namespace lmatch {

enum class DescriptorKind : std::uint8_t {
    FilterBank17 = 0,
    DenseSift = 1,
    Lqtp = 2,
    SelfSimilarity = 3,
};

std::string_view to_string(DescriptorKind kind);
DescriptorKind descriptor_kind_from_string(std::string_view name);

// Per-pixel descriptor vectors, stored pixel-interleaved (row-major pixels,
// dim floats each) so a pixel's vector is contiguous.
class DescriptorField {
public:
    DescriptorField() = default;
    DescriptorField(int width, int height, int dim, DescriptorKind kind);

    int width() const { return width_; }
    int height() const { return height_; }
    int dim() const { return dim_; }
    DescriptorKind kind() const { return kind_; }

    std::span<float> at(int x, int y)
    {
        return {data_.data() + (static_cast<std::size_t>(y) * width_ + x) * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<const float> at(int x, int y) const
    {
        return {data_.data() + (static_cast<std::size_t>(y) * width_ + x) * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<const float> data() const { return data_; }

    // One channel per descriptor dimension, channel-planar.
    Image to_image() const;

private:
    int width_ = 0;
    int height_ = 0;
    int dim_ = 0;
    DescriptorKind kind_ = DescriptorKind::FilterBank17;
    std::vector<float> data_;
};

struct SiftParams {
    int patch = 16; // square support, split into 4x4 cells
};

struct LqtpParams {
    float tau = 2.0f;  // dead zone in L units (0.02 of the 0..100 range)
    int bins = 16;     // histogram bins per (upper, lower) pattern half
    int window = 7;    // histogram window side
};

struct SelfSimilarityParams {
    int patch = 5;
    int window = 21;
    int radial_bins = 3;
    int angular_bins = 10;
    float noise_var = 400.0f; // floor on the SSD normaliser, in squared Lab units summed over the patch
};

struct DescriptorParams {
    SiftParams sift;
    LqtpParams lqtp;
    SelfSimilarityParams self_similarity;
};

int descriptor_dim(DescriptorKind kind, const DescriptorParams& params);

// Filter-bank responses on a CIELab image: Gaussians (sigma 1,2,4) on L,a,b;
// Laplacian of Gaussian (sigma 1,2,4,8) on L; x and y derivatives of
// Gaussian (sigma 2,4) on L. Reflective boundaries.
DescriptorField filter_bank_17(const Image& lab);

// Dense SIFT, LQTP and self-similarity descriptors at every pixel of a
// CIELab image (stride 1, reflect padding).
DescriptorField dense_descriptor(const Image& lab, DescriptorKind kind, const DescriptorParams& params = {});

// Dispatches to filter_bank_17 or dense_descriptor.
DescriptorField compute_descriptor(const Image& lab, DescriptorKind kind, const DescriptorParams& params = {});

// Ternary pattern of the 8-neighbourhood of (x, y) on a single plane: bit n of
// `upper` is set when neighbour n exceeds the centre by more than tau, bit n of
// `lower` when it falls below by more than tau. Neighbours are enumerated
// clockwise from the top-left: (-1,-1) (0,-1) (1,-1) (1,0) (1,1) (0,1) (-1,1) (-1,0).
struct TernaryCode {
    std::uint8_t upper = 0;
    std::uint8_t lower = 0;
    bool operator==(const TernaryCode&) const = default;
};
TernaryCode ternary_code(std::span<const float> plane, int width, int height, int x, int y, float tau);

// Discrete normalised 1-D Gaussian taps, radius ceil(3 sigma).
std::vector<double> gaussian_taps(double sigma);

} // namespace lmatch
