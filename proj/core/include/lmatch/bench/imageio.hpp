#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lmatch/grid.hpp"
#include "lmatch/task.hpp"

namespace lmatch::bench {

// Decoded PNG samples, pixel-interleaved. 8-bit files keep values 0..255.
struct PngRaster {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;
    bool operator==(const PngRaster&) const = default;
};

PngRaster decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const PngRaster& raster);
PngRaster read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const PngRaster& raster);

// RGB in [0, 1]. Gray is replicated, alpha dropped, 16-bit scaled down.
Image load_image(const std::filesystem::path& path);
// 1 or 3 channels in [0, 1], written as 8-bit.
void save_image(const std::filesystem::path& path, const Image& img);
Image quantize8(const Image& img);

// 16-bit disparity: raw / 256, raw 0 is invalid.
DisparityMap decode_disparity(const PngRaster& raster);
PngRaster encode_disparity(const DisparityMap& map);
DisparityMap load_kitti_disparity(const std::filesystem::path& path);
void save_disparity(const std::filesystem::path& path, const DisparityMap& map);

// 8-bit mask: 0 no change, 255 change, anything else unlabelled.
ChangeMask decode_change_mask(const PngRaster& raster);
PngRaster encode_change_mask(const ChangeMask& mask);
ChangeMask load_change_mask(const std::filesystem::path& path);
void save_change_mask(const std::filesystem::path& path, const ChangeMask& mask);

} // namespace lmatch::bench
