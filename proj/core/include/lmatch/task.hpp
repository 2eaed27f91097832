#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "lmatch/grid.hpp"

namespace lmatch {

enum class Task : std::uint8_t { Stereo = 0, Flow = 1, Change = 2 };

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);

// Displacement from the reference pixel x1 to the matched pixel x2 = x1 + (dx, dy).
struct Displacement {
    int dx = 0;
    int dy = 0;
    bool operator==(const Displacement&) const = default;
};

// Candidate displacements evaluated per pixel.
//   stereo: d in [0, d_max], x2 = x1 - (d, 0)
//   flow:   f in [fx_min, fx_max] x [fy_min, fy_max], x2 = x1 + f (row-major, fy outer)
//   change: the single candidate x2 = x1
// A reversed spec negates every displacement (matching I2 back onto I1).
struct CandidateSpec {
    Task task = Task::Stereo;
    int d_max = 0;
    int fx_min = 0, fx_max = 0, fy_min = 0, fy_max = 0;
    bool reversed = false;

    static CandidateSpec stereo(int d_max);
    static CandidateSpec flow(int fx_min, int fx_max, int fy_min, int fy_max);
    static CandidateSpec change();

    CandidateSpec reverse() const;

    std::vector<Displacement> displacements() const;

    // Label grid used by the regulariser: candidate c sits at
    // (c % grid_width, c / grid_width); its value is the disparity d (stereo)
    // or the flow vector (flow).
    int grid_width() const;
    int grid_height() const;
    double label_value_x(int c) const;
    double label_value_y(int c) const;
    bool operator==(const CandidateSpec&) const = default;
};

// Real-valued disparity per pixel; valid[i] == 0 marks missing ground truth.
struct DisparityMap {
    int width = 0;
    int height = 0;
    std::vector<float> disparity;
    std::vector<std::uint8_t> valid;

    DisparityMap() = default;
    DisparityMap(int w, int h) : width(w), height(h), disparity(static_cast<std::size_t>(w) * h, 0.0f), valid(disparity.size(), 0) {}
    bool operator==(const DisparityMap&) const = default;
};

struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u;
    std::vector<float> v;
    std::vector<std::uint8_t> valid;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h), u(static_cast<std::size_t>(w) * h, 0.0f), v(u.size(), 0.0f), valid(u.size(), 0)
    {
    }
    bool operator==(const FlowField&) const = default;
};

struct ChangeMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> changed;
    std::vector<std::uint8_t> valid;

    ChangeMask() = default;
    ChangeMask(int w, int h) : width(w), height(h), changed(static_cast<std::size_t>(w) * h, 0), valid(changed.size(), 0) {}
    bool operator==(const ChangeMask&) const = default;
};

using GroundTruth = std::variant<DisparityMap, FlowField, ChangeMask>;

Task task_of(const GroundTruth& gt);

} // namespace lmatch
