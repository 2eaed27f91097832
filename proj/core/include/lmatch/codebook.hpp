#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lmatch/featbank.hpp"

namespace lmatch {

// Visual vocabulary: K cluster centres in descriptor space plus the kernel
// width used for soft assignment.
struct Codebook {
    DescriptorKind kind = DescriptorKind::FilterBank17;
    int words = 0;
    int dim = 0;
    double kernel_width = 1.0; // sigma_w
    std::uint64_t seed = 0;
    std::vector<float> centers; // words x dim, row-major

    std::span<const float> center(int k) const
    {
        return {centers.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
    }

    // FNV-1a over the persisted byte image; models reference codebooks by it.
    std::uint64_t digest() const;

    bool operator==(const Codebook&) const = default;
};

struct KMeansOptions {
    int max_iterations = 100;
    double rel_tolerance = 1e-4;
};

struct KMeansResult {
    Codebook codebook;
    std::vector<double> inertia; // after seeding, then after each Lloyd iteration
};

// k-means++ seeding followed by Lloyd iterations. samples is n x dim row-major.
KMeansResult train_kmeans(std::span<const float> samples, int dim, int words, std::uint64_t seed,
                          DescriptorKind kind = DescriptorKind::FilterBank17, const KMeansOptions& options = {});

// Collects every stride-th pixel's descriptor (row-major scan) as k-means input.
void append_samples(const DescriptorField& field, int stride, std::vector<float>& out);

inline constexpr int kSoftAssignNeighbours = 8;

// Up to 8 (word, weight) pairs per pixel, ordered by increasing distance.
class SoftAssignmentField {
public:
    struct Entry {
        std::uint32_t word = 0;
        float weight = 0.0f;
    };

    SoftAssignmentField() = default;
    SoftAssignmentField(int width, int height, int per_pixel, int words);

    int width() const { return width_; }
    int height() const { return height_; }
    int per_pixel() const { return per_pixel_; }
    int words() const { return words_; }

    std::span<Entry> at(int x, int y)
    {
        return {entries_.data() + (static_cast<std::size_t>(y) * width_ + x) * per_pixel_,
                static_cast<std::size_t>(per_pixel_)};
    }
    std::span<const Entry> at(int x, int y) const
    {
        return {entries_.data() + (static_cast<std::size_t>(y) * width_ + x) * per_pixel_,
                static_cast<std::size_t>(per_pixel_)};
    }

    // Dense per-word weight planes (K channels).
    Image to_word_planes() const;

private:
    int width_ = 0;
    int height_ = 0;
    int per_pixel_ = 0;
    int words_ = 0;
    std::vector<Entry> entries_;
};

// Soft assignment to the nearest min(8, K) words, weights proportional to
// exp(-d^2 / (2 sigma_w^2)) and normalised to sum to one.
SoftAssignmentField soft_assign(const DescriptorField& field, const Codebook& cb);

// Persistence. Layout:
//   "LMATCH-CODEBOOK 1\n"
//   "kind <name>\n" "words <K>\n" "dim <D>\n" "sigma_w <%.17g>\n" "seed <u64>\n"
//   "end\n"
//   K*D little-endian IEEE-754 float32 centres, row-major.
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_codebook(const Codebook& cb);
Codebook deserialize_codebook(std::span<const std::uint8_t> bytes);

} // namespace lmatch
