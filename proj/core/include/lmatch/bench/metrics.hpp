#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lmatch/grid.hpp"
#include "lmatch/matcher.hpp"
#include "lmatch/task.hpp"

namespace lmatch::bench {

// Outlier ratios over pixels with ground truth. A missing estimate counts as
// an outlier and is left out of the mean absolute error. The *_noc variants
// additionally drop pixels flagged in the occlusion mask.
struct StereoMetrics {
    double outlier3 = 0.0;
    double outlier5 = 0.0;
    double outlier3_noc = 0.0;
    double outlier5_noc = 0.0;
    double mean_abs_error = 0.0;
    double density = 0.0; // fraction of ground-truth pixels with an estimate
    std::size_t pixels = 0;
    std::size_t pixels_noc = 0;
};

StereoMetrics stereo_metrics(const DisparityMap& est, const DisparityMap& gt,
                             const std::vector<std::uint8_t>* occlusion = nullptr);

// Per-class recall/precision; a ratio with an empty denominator is NaN and is
// left out of the class average.
struct ChangeMetrics {
    double accuracy = 0.0;
    double recall_change = 0.0;
    double recall_nochange = 0.0;
    double precision_change = 0.0;
    double precision_nochange = 0.0;
    double mean_recall = 0.0;
    double mean_precision = 0.0;
    std::size_t true_change = 0, false_change = 0, true_nochange = 0, false_nochange = 0;
};

ChangeMetrics change_metrics(const ChangeMask& predicted, const ChangeMask& gt);
ChangeMetrics change_metrics(const ScoreVolume& volume, double threshold, const ChangeMask& gt);

struct FlowMetrics {
    double mean_epe = 0.0;   // over pixels with both estimate and ground truth
    double outlier1 = 0.0;   // EPE > 1 px; missing estimates count as outliers
    double outlier3 = 0.0;
    double exact = 0.0;      // EPE < 0.5 px
    double density = 0.0;
    std::size_t pixels = 0;
};

FlowMetrics flow_metrics(const FlowField& est, const FlowField& gt);

// Box average over complete factor x factor blocks.
Image downsample_image(const Image& img, int factor);
// Averages the valid vectors of each block and divides by the factor; blocks
// without valid vectors are invalid.
FlowField downsample_flow(const FlowField& flow, int factor);

} // namespace lmatch::bench
