#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lmatch/boost.hpp"
#include "lmatch/codebook.hpp"
#include "lmatch/crf.hpp"
#include "lmatch/matcher.hpp"
#include "lmatch/bench/config.hpp"
#include "lmatch/bench/dataset.hpp"
#include "lmatch/bench/metrics.hpp"

namespace lmatch::bench {

// Flow runs at 1/flow_downsample resolution: images are box-averaged and the
// ground truth is block-averaged and rescaled. Other tasks pass through.
Dataset prepare_dataset(const Dataset& dataset, const ExperimentConfig& cfg);

// One vocabulary per configured BoW family, from descriptors of both images
// of every pair.
std::vector<Codebook> train_codebooks(const Dataset& dataset, const ExperimentConfig& cfg);
void save_codebooks(const std::filesystem::path& dir, const std::vector<Codebook>& codebooks);
std::vector<Codebook> load_codebooks(const std::filesystem::path& dir);

MatchingClassifier train_model(const Dataset& dataset, const std::vector<Codebook>& codebooks,
                               const ExperimentConfig& cfg, TrainingTrace* trace = nullptr);

// Throws DataError unless every BoW family of the model has a codebook with
// the digest recorded at training time.
void check_codebooks(const MatchingClassifier& model, const std::vector<Codebook>& codebooks);

struct PairResult {
    ScoreVolume volume;
    LabelMap labels;      // winner-take-all or regularised, after optional validation
    GroundTruth estimate; // disparity, flow or change mask
};

// Scores one (already prepared) pair and decodes the labels.
PairResult infer_pair(const MatchingClassifier& model, const std::vector<Codebook>& codebooks, const Image& image1,
                      const Image& image2, const ExperimentConfig& cfg, bool regularise);

// CRF over a volume with the run's regulariser seed.
RegularizeResult regularize_volume(const ScoreVolume& volume, const Image& lab, const ExperimentConfig& cfg,
                                   const std::vector<std::uint8_t>* ignored = nullptr);

struct MetricsReport {
    Task task = Task::Stereo;
    std::vector<std::string> names;
    std::vector<StereoMetrics> stereo;
    std::vector<FlowMetrics> flow;
    std::vector<ChangeMetrics> change;
    // pixel-weighted over all pairs
    std::optional<StereoMetrics> stereo_total;
    std::optional<FlowMetrics> flow_total;
    std::optional<ChangeMetrics> change_total;
};

MetricsReport evaluate_dataset(const MatchingClassifier& model, const std::vector<Codebook>& codebooks,
                               const Dataset& dataset, const ExperimentConfig& cfg, bool regularise);
// Metrics of precomputed estimates against the (prepared) dataset.
MetricsReport evaluate_estimates(const Dataset& dataset, const std::vector<GroundTruth>& estimates);
std::string report_to_json(const MetricsReport& report);

} // namespace lmatch::bench
