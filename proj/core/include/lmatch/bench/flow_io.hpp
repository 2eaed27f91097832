#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lmatch/grid.hpp"
#include "lmatch/task.hpp"

namespace lmatch::bench {

// Flow file: "PIEH", i32 width, i32 height, then (u, v) f32 pairs row-major,
// all little-endian. Invalid pixels are stored as kUnknownFlow in both components.
inline constexpr float kUnknownFlow = 1e10f;

std::vector<std::uint8_t> encode_flow(const FlowField& field);
FlowField decode_flow(std::span<const std::uint8_t> bytes);
void save_flow(const std::filesystem::path& path, const FlowField& field);
FlowField load_flow(const std::filesystem::path& path);

// Colour-wheel rendering, RGB in [0, 1]. Magnitudes are normalised by the
// largest valid magnitude in the field; invalid pixels are black.
Image flow_colorize(const FlowField& field);

// Wheel colour for a direction (radians, 0 = rightward, image y down) and a
// normalised magnitude in [0, 1].
std::array<float, 3> flow_color(double angle, double magnitude);

} // namespace lmatch::bench
