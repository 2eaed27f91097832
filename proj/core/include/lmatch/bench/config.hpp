#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "lmatch/boost.hpp"
#include "lmatch/crf.hpp"
#include "lmatch/repr.hpp"
#include "lmatch/task.hpp"
#include "lmatch/bench/synth.hpp"

namespace lmatch::bench {

struct CodebookConfig {
    int words = 64;
    int sample_stride = 4;   // descriptor sampling grid step
    int max_samples = 4000;  // per family, evenly thinned beyond this
    int max_iterations = 50;
    double tolerance = 1e-4;
};

// Everything a run depends on. Stored as JSON with a schema_version field;
// unknown keys are rejected so typos do not pass silently.
struct ExperimentConfig {
    Task task = Task::Stereo;
    std::uint64_t seed = 0;
    int threads = 1;

    int d_max = 16;
    int fx_min = -5, fx_max = 5, fy_min = -5, fy_max = 5;
    int flow_downsample = 4;

    CodebookConfig codebook;
    RepresentationConfig representation;
    int rect_count = 200;
    int rect_max_extent = 100;
    SamplingOptions sampling;
    BoostOptions boost;

    bool inverse_validation = false;
    double inverse_tolerance = 1.0;
    CrfConfig crf;
    double change_threshold = 0.0;

    SynthKind synth_kind = SynthKind::ShiftStereo;
    int synth_pairs = 4;
    SynthParams synth;

    CandidateSpec candidates() const;
    void validate() const;
};

inline constexpr int kConfigSchemaVersion = 1;

// `overrides` are "dotted.key=value"; the value is parsed as JSON when it can
// be and taken as a string otherwise.
ExperimentConfig parse_config(std::string_view json_text, std::span<const std::string> overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides = {});
ExperimentConfig default_config(std::span<const std::string> overrides = {});
std::string config_to_json(const ExperimentConfig& cfg);

} // namespace lmatch::bench
