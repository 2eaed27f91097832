#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lmatch/grid.hpp"
#include "lmatch/task.hpp"

namespace lmatch::bench {

struct DatasetPair {
    std::string name;
    Image image1; // RGB in [0, 1]
    Image image2;
    GroundTruth truth;
    std::vector<std::uint8_t> occlusion; // empty, or 1 where the pixel of image1 is occluded
};

void validate_pair(const DatasetPair& pair);

struct Dataset {
    Task task = Task::Stereo;
    std::vector<DatasetPair> pairs;
};

// Directory layout: dataset.json plus one PNG per image, a disparity PNG,
// flow file or change-mask PNG per ground truth, and an optional occlusion PNG.
//   {"schema_version": 1, "task": "stereo",
//    "pairs": [{"name": ..., "image1": ..., "image2": ..., "truth": ..., "occlusion": null}]}
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

} // namespace lmatch::bench
